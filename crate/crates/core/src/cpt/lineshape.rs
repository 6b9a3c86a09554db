use std::io::Write;

use crate::error::{Error, Result};
use crate::units::{hz_to_rad, rad_to_hz};

/// Phenomenological CPT dip: a Lorentzian hole in a flat excited-state
/// population, `rho_bg [1 - C W^2 / (W^2 + 4 delta^2)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptLineshape {
    /// Full width at half depth `W` (rad/s).
    pub fwhm: f64,
    /// Fractional dip depth `C`; 0 gives a flat, field-independent response.
    pub contrast: f64,
    /// Excited-state population far from Raman resonance.
    pub background_pop: f64,
}

pub const DEFAULT_FWHM_HZ: f64 = 11.6e6;
pub const DEFAULT_CONTRAST: f64 = 0.9;
pub const DEFAULT_BACKGROUND_POP: f64 = 0.5;

/// Which monotone side of the dip is used to invert a population.
///
/// `Inner` means `delta >= 0`, so for a positive bias the inverted field
/// shift lies in `[bias - delta_max, bias]`; `Outer` is the mirror side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Inner,
    Outer,
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(Branch::Inner),
            "outer" => Ok(Branch::Outer),
            other => Err(Error::Config(format!("unknown inversion branch {other:?}"))),
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Inner => "inner",
            Branch::Outer => "outer",
        })
    }
}

impl CptLineshape {
    pub fn new(fwhm: f64, contrast: f64, background_pop: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(Error::invalid(format!("fwhm must be positive, got {fwhm}")));
        }
        if !(0.0..=1.0).contains(&contrast) {
            return Err(Error::invalid(format!("contrast must lie in [0, 1], got {contrast}")));
        }
        if !(background_pop > 0.0 && background_pop <= 1.0) {
            return Err(Error::invalid(format!(
                "background population must lie in (0, 1], got {background_pop}"
            )));
        }
        Ok(Self { fwhm, contrast, background_pop })
    }

    pub fn from_hz(fwhm_hz: f64, contrast: f64, background_pop: f64) -> Result<Self> {
        Self::new(hz_to_rad(fwhm_hz), contrast, background_pop)
    }

    /// Lorentzian weight `W^2 / (W^2 + 4 delta^2)`, 1 at resonance.
    #[inline]
    fn profile(&self, delta: f64) -> f64 {
        let w2 = self.fwhm * self.fwhm;
        w2 / (w2 + 4.0 * delta * delta)
    }

    #[inline]
    pub fn rho_ee(&self, delta: f64) -> f64 {
        self.background_pop * (1.0 - self.contrast * self.profile(delta))
    }

    /// `d rho_ee / d delta`.
    #[inline]
    pub fn rho_ee_derivative(&self, delta: f64) -> f64 {
        let w2 = self.fwhm * self.fwhm;
        let den = w2 + 4.0 * delta * delta;
        self.background_pop * self.contrast * 8.0 * w2 * delta / (den * den)
    }

    pub fn dip_bottom(&self) -> f64 {
        self.background_pop * (1.0 - self.contrast)
    }

    /// Detuning on `branch` at which the population equals `rho`, clamped to
    /// `|delta| <= delta_max`. Returns `(delta, clamped)`.
    pub fn invert(&self, rho: f64, branch: Branch, delta_max: f64) -> (f64, bool) {
        let sign = match branch {
            Branch::Inner => 1.0,
            Branch::Outer => -1.0,
        };
        let top = self.rho_ee(delta_max);
        let (magnitude, clamped) = if self.contrast == 0.0 {
            (0.0, true)
        } else if rho <= self.dip_bottom() {
            (0.0, rho < self.dip_bottom())
        } else if rho >= top {
            (delta_max, rho > top)
        } else {
            let profile = (1.0 - rho / self.background_pop) / self.contrast;
            ((0.5 * self.fwhm * (1.0 / profile - 1.0).sqrt()).min(delta_max), false)
        };
        (sign * magnitude, clamped)
    }

    /// Writes `delta_hz,rho_ee` for the given detunings (rad/s).
    pub fn write_sweep_csv<W: Write>(&self, deltas: &[f64], mut out: W) -> std::io::Result<()> {
        writeln!(out, "delta_hz,rho_ee")?;
        for &d in deltas {
            writeln!(out, "{},{}", rad_to_hz(d), self.rho_ee(d))?;
        }
        out.flush()
    }
}

impl Default for CptLineshape {
    fn default() -> Self {
        Self::from_hz(DEFAULT_FWHM_HZ, DEFAULT_CONTRAST, DEFAULT_BACKGROUND_POP).expect("valid defaults")
    }
}

pub fn rho_ee_lorentzian(delta: f64, shape: &CptLineshape) -> f64 {
    shape.rho_ee(delta)
}

#[derive(Debug, Clone, Copy)]
pub struct LorentzianFit {
    pub fwhm: f64,
    /// Fitted far-wing level `A`.
    pub background: f64,
    /// Fitted dip depth `B`; negative when the data bulges instead.
    pub depth: f64,
    pub r_squared: f64,
}

impl LorentzianFit {
    pub fn to_lineshape(&self) -> Result<CptLineshape> {
        CptLineshape::new(self.fwhm, self.depth / self.background, self.background)
    }
}

/// Least-squares fit of `A - B W^2 / (W^2 + 4 delta^2)` to a sampled dip.
///
/// `A` and `B` are linear for fixed `W`; `W` is found by a log-spaced scan
/// followed by golden-section refinement.
pub fn fit_lorentzian_dip(deltas: &[f64], values: &[f64]) -> Result<LorentzianFit> {
    if deltas.len() != values.len() || deltas.len() < 4 {
        return Err(Error::invalid("need at least four matching samples"));
    }
    let linear = |w: f64| -> (f64, f64, f64) {
        // columns: 1, -profile
        let w2 = w * w;
        let mut s = [0.0f64; 5]; // sum p, sum p^2, sum y, sum p y, n
        for (&d, &y) in deltas.iter().zip(values) {
            let p = w2 / (w2 + 4.0 * d * d);
            s[0] += p;
            s[1] += p * p;
            s[2] += y;
            s[3] += p * y;
            s[4] += 1.0;
        }
        let det = s[4] * s[1] - s[0] * s[0];
        let a = (s[1] * s[2] - s[0] * s[3]) / det;
        let b = (s[0] * s[2] - s[4] * s[3]) / det;
        let sse: f64 = deltas
            .iter()
            .zip(values)
            .map(|(&d, &y)| {
                let p = w2 / (w2 + 4.0 * d * d);
                (y - a + b * p).powi(2)
            })
            .sum();
        (a, b, sse)
    };

    let span = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut spacing = f64::INFINITY;
    for w in deltas.windows(2) {
        let gap = (w[1] - w[0]).abs();
        if gap > 0.0 {
            spacing = spacing.min(gap);
        }
    }
    if !(span > 0.0) || !spacing.is_finite() {
        return Err(Error::invalid("detunings must span a nonzero range"));
    }

    let (lo, hi) = ((0.1 * spacing).ln(), (20.0 * span).ln());
    let scan = 400;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=scan {
        let lw = lo + (hi - lo) * i as f64 / scan as f64;
        let sse = linear(lw.exp()).2;
        if sse < best.1 {
            best = (lw, sse);
        }
    }
    let step = (hi - lo) / scan as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if linear(c.exp()).2 < linear(d.exp()).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let w = (0.5 * (a + b)).exp();
    let (bg, depth, sse) = linear(w);

    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sst: f64 = values.iter().map(|y| (y - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::invalid("sampled curve is constant"));
    }
    Ok(LorentzianFit {
        fwhm: w,
        background: bg,
        depth,
        r_squared: 1.0 - sse / sst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shape() -> CptLineshape {
        CptLineshape::default()
    }

    #[test]
    fn dip_bottom_at_resonance() {
        let s = shape();
        assert_relative_eq!(s.rho_ee(0.0), s.background_pop * (1.0 - s.contrast), max_relative = 1e-15);
    }

    #[test]
    fn half_depth_at_half_width() {
        let s = shape();
        let expect = s.background_pop * (1.0 - s.contrast / 2.0);
        assert_relative_eq!(s.rho_ee(s.fwhm / 2.0), expect, max_relative = 1e-15);
        assert_relative_eq!(s.rho_ee(-s.fwhm / 2.0), expect, max_relative = 1e-15);
    }

    #[test]
    fn far_wing_approaches_background() {
        for c in [0.1, 0.9, 1.0] {
            let s = CptLineshape::from_hz(11.6e6, c, 0.5).unwrap();
            // 1 - C / (1 + 400)
            let dev = 1.0 - s.rho_ee(10.0 * s.fwhm) / s.background_pop;
            assert_relative_eq!(dev, c / 401.0, max_relative = 1e-12);
            assert!(dev < 0.0025);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let s = shape();
        for k in -20..=20 {
            let d = k as f64 * 0.37 * s.fwhm;
            let h = 1e-4 * s.fwhm;
            let fd = (s.rho_ee(d + h) - s.rho_ee(d - h)) / (2.0 * h);
            let an = s.rho_ee_derivative(d);
            assert!((fd - an).abs() <= 1e-7 * an.abs().max(1e-12 / s.fwhm), "{d} {fd} {an}");
        }
    }

    #[test]
    fn inversion_round_trips_on_both_branches() {
        let s = shape();
        let dmax = 2.0 * s.fwhm;
        for k in 1..40 {
            let d = k as f64 / 40.0 * dmax;
            let (inner, c1) = s.invert(s.rho_ee(d), Branch::Inner, dmax);
            let (outer, c2) = s.invert(s.rho_ee(d), Branch::Outer, dmax);
            assert!(!c1 && !c2);
            assert_relative_eq!(inner, d, max_relative = 1e-9);
            assert_relative_eq!(outer, -d, max_relative = 1e-9);
        }
    }

    #[test]
    fn inversion_clamps_outside_range() {
        let s = shape();
        let dmax = s.fwhm;
        assert_eq!(s.invert(0.0, Branch::Inner, dmax), (0.0, true));
        assert_eq!(s.invert(s.background_pop, Branch::Inner, dmax), (dmax, true));
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(CptLineshape::new(0.0, 0.5, 0.5).is_err());
        assert!(CptLineshape::new(1.0, 1.5, 0.5).is_err());
        assert!(CptLineshape::new(1.0, 0.5, 0.0).is_err());
        assert!(CptLineshape::new(1.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn fit_recovers_exact_lorentzian() {
        let truth = CptLineshape::from_hz(7.3e6, 0.8, 0.3).unwrap();
        let deltas: Vec<f64> = (-100..=100).map(|k| hz_to_rad(k as f64 * 0.2e6)).collect();
        let values: Vec<f64> = deltas.iter().map(|&d| truth.rho_ee(d)).collect();
        let fit = fit_lorentzian_dip(&deltas, &values).unwrap();
        let shape = fit.to_lineshape().unwrap();
        assert_relative_eq!(shape.fwhm, truth.fwhm, max_relative = 1e-6);
        assert_relative_eq!(shape.contrast, truth.contrast, max_relative = 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-10);
    }

    #[test]
    fn sweep_csv_header() {
        let mut buf = Vec::new();
        shape().write_sweep_csv(&[0.0, 1.0], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("delta_hz,rho_ee\n0,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn even_and_bounded(delta in -1e9f64..1e9, c in 0.0f64..=1.0, bg in 0.01f64..=1.0) {
                let s = CptLineshape::from_hz(11.6e6, c, bg).unwrap();
                prop_assert_eq!(s.rho_ee(delta), s.rho_ee(-delta));
                prop_assert!(s.rho_ee(delta) >= s.dip_bottom() - 1e-15);
                prop_assert!(s.rho_ee(delta) <= bg);
            }
        }
    }
}
