use crate::cpt::lineshape::CptLineshape;
use crate::error::{Error, Result};
use crate::ou::OuParams;
use crate::quadrature::GaussHermite;
use crate::units::hz_to_rad;

/// Population-to-count-rate scale. The detected rate at field shift `x` is
/// `k rho_ee(bias - x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCalibration {
    /// `k` (1/s per unit population).
    pub counts_per_pop_per_second: f64,
    /// Raman detuning at zero field shift (rad/s).
    pub bias: f64,
    /// Stationary mean of the detected rate (1/s).
    pub mean_rate_target: f64,
}

/// Chooses `k` so that the rate averaged over the stationary field law equals
/// `mean_rate_target`.
pub fn calibrate_rate(
    shape: &CptLineshape,
    bias: f64,
    ou: &OuParams,
    mean_rate_target: f64,
) -> Result<RateCalibration> {
    if !(mean_rate_target > 0.0 && mean_rate_target.is_finite()) {
        return Err(Error::invalid(format!("mean rate must be positive, got {mean_rate_target}")));
    }
    let mean_pop = mean_population(shape, bias, ou, &GaussHermite::default());
    Ok(RateCalibration {
        counts_per_pop_per_second: mean_rate_target / mean_pop,
        bias,
        mean_rate_target,
    })
}

/// `E[rho_ee(bias - x)]` for `x` drawn from the stationary OU law.
pub fn mean_population(shape: &CptLineshape, bias: f64, ou: &OuParams, quad: &GaussHermite) -> f64 {
    quad.expect_normal(ou.mean, ou.sigma, |x| shape.rho_ee(bias - x))
}

/// Lineshape plus calibration: everything needed to map a field shift to an
/// expected photon count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModel {
    pub shape: CptLineshape,
    pub calibration: RateCalibration,
}

impl SignalModel {
    pub fn new(shape: CptLineshape, calibration: RateCalibration) -> Self {
        Self { shape, calibration }
    }

    /// Calibrated model; `bias_hz` and `mean_rate` as quoted in the lab.
    pub fn calibrated(shape: CptLineshape, bias_hz: f64, ou: &OuParams, mean_rate: f64) -> Result<Self> {
        let calibration = calibrate_rate(&shape, hz_to_rad(bias_hz), ou, mean_rate)?;
        Ok(Self { shape, calibration })
    }

    pub fn bias(&self) -> f64 {
        self.calibration.bias
    }

    /// Detected rate (1/s) at field shift `x`.
    #[inline]
    pub fn rate(&self, x: f64) -> f64 {
        self.calibration.counts_per_pop_per_second * self.shape.rho_ee(self.calibration.bias - x)
    }

    /// `d rate / dx`.
    #[inline]
    pub fn rate_derivative(&self, x: f64) -> f64 {
        -self.calibration.counts_per_pop_per_second * self.shape.rho_ee_derivative(self.calibration.bias - x)
    }

    #[inline]
    pub fn expected_count(&self, x: f64, tau: f64) -> f64 {
        self.rate(x) * tau
    }
}

/// Mean photon count in an interval of length `tau` at field shift `x`.
pub fn expected_count(x: f64, tau: f64, cal: &RateCalibration, shape: &CptLineshape) -> f64 {
    debug_assert!(tau > 0.0);
    SignalModel::new(*shape, *cal).expected_count(x, tau)
}
