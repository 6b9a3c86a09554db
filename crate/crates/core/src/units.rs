//! Conversions between cycle frequencies (Hz) used at every I/O boundary and
//! the angular frequencies (rad/s) used internally.

use std::f64::consts::TAU;

#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    hz * TAU
}

#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / TAU
}

pub const MHZ: f64 = 1e6;
pub const MICROSECOND: f64 = 1e-6;
pub const MILLISECOND: f64 = 1e-3;
