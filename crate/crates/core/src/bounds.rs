//! Fisher information of one counting interval and the recursive Bayesian
//! Cramér-Rao bound for tracking the OU field.

use std::io::Write;

use crate::cpt::SignalModel;
use crate::error::{Error, Result};
use crate::ou::OuParams;
use crate::quadrature::GaussHermite;

pub const CRLB_HEADER: &str = "tau_c_s,bound_over_sigma2";

const MAX_ITERATIONS: usize = 1_000_000;
const TOLERANCE: f64 = 1e-10;

/// `(d ybar / dx)^2 / ybar` for one interval of length `tau`, in 1/(rad/s)^2.
pub fn fisher_information(x: f64, tau: f64, model: &SignalModel) -> f64 {
    let mean = model.expected_count(x, tau);
    let slope = model.rate_derivative(x) * tau;
    if slope == 0.0 {
        return 0.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    slope * slope / mean
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherProfile {
    pub x: Vec<f64>,
    pub info: Vec<f64>,
}

pub fn fisher_profile(xs: &[f64], tau: f64, model: &SignalModel) -> FisherProfile {
    FisherProfile { x: xs.to_vec(), info: xs.iter().map(|&x| fisher_information(x, tau, model)).collect() }
}

/// Information averaged over the stationary field law.
pub fn mean_information(ou: &OuParams, tau: f64, model: &SignalModel) -> f64 {
    GaussHermite::default().expect_normal(ou.mean, ou.sigma, |x| fisher_information(x, tau, model))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    /// Fixed point of the information recursion; infinite for a static field.
    pub steady_state_info: f64,
    pub bound_variance: f64,
    pub bound_over_sigma2: f64,
    pub iterations: usize,
}

/// Iterates `J <- 1 / (a^2 / J + q) + I` from `J = 1 / sigma^2` to its fixed
/// point, with `a = exp(-tau / tau_c)`, `q = sigma^2 (1 - a^2)` and `I` the
/// mean per-interval information.
pub fn bayesian_crlb(ou: &OuParams, tau: f64, model: &SignalModel) -> Result<CrlbResult> {
    if !(tau > 0.0) {
        return Err(Error::invalid("update interval must be positive"));
    }
    crlb_recursion(ou, tau, mean_information(ou, tau, model))
}

/// The recursion for a given mean information per interval.
pub fn crlb_recursion(ou: &OuParams, tau: f64, info: f64) -> Result<CrlbResult> {
    let a = ou.decay(tau);
    let q = ou.transition_variance(tau);
    let var = ou.variance();
    if a == 1.0 && info > 0.0 {
        // the field does not move on this time scale, so information piles
        // up without limit
        return Ok(CrlbResult { steady_state_info: f64::INFINITY, bound_variance: 0.0, bound_over_sigma2: 0.0, iterations: 0 });
    }
    let mut j = 1.0 / var;
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let next = 1.0 / (a * a / j + q) + info;
        change = ((next - j) / j).abs();
        j = next;
        if change < TOLERANCE {
            return Ok(CrlbResult {
                steady_state_info: j,
                bound_variance: 1.0 / j,
                bound_over_sigma2: 1.0 / (j * var),
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, last_change: change })
}

/// One CSV row per `tau_c`.
pub fn write_crlb_csv<W: Write>(rows: &[(f64, CrlbResult)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CRLB_HEADER}")?;
    for (tau_c, r) in rows {
        writeln!(out, "{},{}", tau_c, r.bound_over_sigma2)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpt::CptLineshape;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    const TAU: f64 = 10e-6;

    fn defaults(tau_c: f64) -> (OuParams, SignalModel) {
        let ou = OuParams::from_hz(2.2e6, tau_c).unwrap();
        let model = SignalModel::calibrated(CptLineshape::default(), 4e6, &ou, 5400.0).unwrap();
        (ou, model)
    }

    /// Positive root of `q J^2 + (a^2 - q I - 1) J - a^2 I = 0`.
    fn closed_form(ou: &OuParams, info: f64) -> f64 {
        let a2 = ou.decay(TAU).powi(2);
        let q = ou.transition_variance(TAU);
        let b = a2 - q * info - 1.0;
        (-b + (b * b + 4.0 * q * a2 * info).sqrt()) / (2.0 * q)
    }

    #[test]
    fn dip_bottom_carries_no_information() {
        let (_, model) = defaults(5e-3);
        assert_eq!(fisher_information(model.bias(), TAU, &model), 0.0);
    }

    #[test]
    fn flat_lineshape_carries_no_information() {
        let ou = OuParams::from_hz(2.2e6, 5e-3).unwrap();
        let flat = CptLineshape::from_hz(11.6e6, 0.0, 0.5).unwrap();
        let model = SignalModel::calibrated(flat, 4e6, &ou, 5400.0).unwrap();
        for k in -10..=10 {
            assert_eq!(fisher_information(k as f64 * ou.sigma / 3.0, TAU, &model), 0.0);
        }
        let r = bayesian_crlb(&ou, TAU, &model).unwrap();
        assert_relative_eq!(r.bound_over_sigma2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let (ou, model) = defaults(5e-3);
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let x = rng.random_range(-4.0..4.0) * ou.sigma;
            let h = 1e-4 * ou.sigma;
            let fd = (model.expected_count(x + h, TAU) - model.expected_count(x - h, TAU)) / (2.0 * h);
            let analytic = model.rate_derivative(x) * TAU;
            assert_relative_eq!(analytic, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn fixed_point_matches_closed_form() {
        for tau_c in [1e-3, 2e-3, 5e-3, 10e-3] {
            let (ou, model) = defaults(tau_c);
            let r = bayesian_crlb(&ou, TAU, &model).unwrap();
            let info = mean_information(&ou, TAU, &model);
            assert_relative_eq!(r.steady_state_info, closed_form(&ou, info), max_relative = 1e-8);
            assert!(r.bound_over_sigma2 > 0.0 && r.bound_over_sigma2 < 1.0);
        }
    }

    #[test]
    fn static_field_bound_vanishes() {
        let ou = OuParams::new(1.0, 1e300).unwrap();
        let r = crlb_recursion(&ou, TAU, 0.5).unwrap();
        assert_eq!(r.bound_over_sigma2, 0.0);
        assert!(r.steady_state_info.is_infinite());
    }

    #[test]
    fn slow_field_reports_non_convergence() {
        // fixed point near sqrt(I / q) = 2e7, gained at about one per step
        let ou = OuParams::new(1.0, 1e10).unwrap();
        assert!(matches!(crlb_recursion(&ou, TAU, 1.0), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn recursion_is_monotone_from_the_prior() {
        let (ou, model) = defaults(5e-3);
        let info = mean_information(&ou, TAU, &model);
        let a2 = ou.decay(TAU).powi(2);
        let q = ou.transition_variance(TAU);
        let mut j = 1.0 / ou.variance();
        for _ in 0..5000 {
            let next = 1.0 / (a2 / j + q) + info;
            assert!(next >= j);
            j = next;
        }
    }

    #[test]
    fn csv_layout() {
        let (ou, model) = defaults(5e-3);
        let r = bayesian_crlb(&ou, TAU, &model).unwrap();
        let mut buf = Vec::new();
        write_crlb_csv(&[(5e-3, r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau_c_s,bound_over_sigma2\n0.005,0."));
    }

    proptest! {
        #[test]
        fn information_is_non_negative(x in -20.0f64..20.0, contrast in 0.0f64..=1.0, bias in -10.0f64..10.0) {
            let ou = OuParams::from_hz(2.2e6, 5e-3).unwrap();
            let shape = CptLineshape::from_hz(11.6e6, contrast, 0.5).unwrap();
            let model = SignalModel::calibrated(shape, bias * 1e6, &ou, 5400.0).unwrap();
            let i = fisher_information(x * ou.sigma / 3.0, TAU, &model);
            prop_assert!(i >= 0.0 && i.is_finite());
        }

        #[test]
        fn brighter_means_tighter(rate in 1000.0f64..50_000.0, factor in 1.05f64..4.0) {
            let ou = OuParams::from_hz(2.2e6, 5e-3).unwrap();
            let dim = SignalModel::calibrated(CptLineshape::default(), 4e6, &ou, rate).unwrap();
            let bright = SignalModel::calibrated(CptLineshape::default(), 4e6, &ou, rate * factor).unwrap();
            let b0 = bayesian_crlb(&ou, TAU, &dim).unwrap().bound_over_sigma2;
            let b1 = bayesian_crlb(&ou, TAU, &bright).unwrap().bound_over_sigma2;
            prop_assert!(b1 < b0);
        }
    }
}
