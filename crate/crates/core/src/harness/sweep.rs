//! Parameter sweeps. Every point reuses the master seed, so points differ
//! only in the swept parameter and share their random draws where the
//! parameter allows it.

use std::io::Write;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, Prepared, VarianceReport};
use crate::bounds::bayesian_crlb;
use crate::error::Result;
use crate::estimators::EstimatorKind;

pub const TAU_C_HEADER: &str = "tau_c_s,estimator,var_over_sigma2,stderr,crlb_over_sigma2";
pub const BIAS_HEADER: &str = "bias_hz,var_over_sigma2,stderr";
pub const SIGMA_HEADER: &str = "sigma_hz,var_over_sigma2,stderr";

#[derive(Debug, Clone, PartialEq)]
pub struct TauCRow {
    pub tau_c: f64,
    pub report: VarianceReport,
    pub crlb_over_sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Swept value in the units of the CSV column.
    pub value: f64,
    pub report: VarianceReport,
}

pub fn sweep_tau_c(base: &ExperimentConfig, tau_c_values: &[f64], kinds: &[EstimatorKind]) -> Result<Vec<TauCRow>> {
    let mut rows = Vec::new();
    for &tau_c in tau_c_values {
        let cfg = ExperimentConfig { tau_c, ..base.clone() };
        let p = Prepared::new(&cfg)?;
        let bound = bayesian_crlb(&p.ou, p.tau(), &p.model)?.bound_over_sigma2;
        for report in run_experiment(&cfg, kinds)? {
            rows.push(TauCRow { tau_c, report, crlb_over_sigma2: bound });
        }
    }
    Ok(rows)
}

fn sweep_with(
    base: &ExperimentConfig,
    values: &[f64],
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let mut cfg = base.clone();
            apply(&mut cfg, value);
            let report = run_experiment(&cfg, &[cfg.estimator])?.remove(0);
            Ok(SweepRow { value, report })
        })
        .collect()
}

/// Configured estimator against bias/2pi in Hz.
pub fn sweep_bias(base: &ExperimentConfig, bias_hz: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_with(base, bias_hz, |c, v| c.bias_hz = v)
}

/// Configured estimator against sigma/2pi in Hz.
pub fn sweep_sigma(base: &ExperimentConfig, sigma_hz: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_with(base, sigma_hz, |c, v| c.sigma_hz = v)
}

pub fn write_tau_c_csv<W: Write>(rows: &[TauCRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TAU_C_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.tau_c, r.report.estimator, r.report.var_over_sigma2, r.report.stderr, r.crlb_over_sigma2
        )?;
    }
    out.flush()
}

/// `header` is [`BIAS_HEADER`] or [`SIGMA_HEADER`].
pub fn write_sweep_csv<W: Write>(header: &str, rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.value, r.report.var_over_sigma2, r.report.stderr)?;
    }
    out.flush()
}
