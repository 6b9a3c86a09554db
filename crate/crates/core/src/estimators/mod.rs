//! Causal field estimators over a count stream.
//!
//! Every estimator consumes one [`CountRecord`] at a time and emits one
//! [`EstimateRecord`] for it, using nothing later in the stream.

mod avg_count;
mod bayes;
mod filter;
mod grid;
mod kernel;

use std::io::Write;
use std::str::FromStr;

pub use avg_count::{AvgCount, AvgCountConfig};
pub use bayes::{bayes_update, bayes_update_with, LikelihoodTable, Moments, UpdateStatus};
pub use filter::{BayesFilter, GridSpec};
pub use grid::PosteriorGrid;
pub use kernel::{ou_predict, OuKernel};

use crate::cpt::SignalModel;
use crate::error::{Error, Result};
use crate::ou::OuParams;
use crate::photon::CountRecord;
use crate::units::rad_to_hz;

pub const ESTIMATES_HEADER: &str = "n,t_seconds,xhat_hz,posterior_sd_hz,photons_seen";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub n: u64,
    pub t: f64,
    /// Estimated field shift (rad/s).
    pub x_hat: f64,
    /// Posterior standard deviation (rad/s); zero for the average-count
    /// estimator.
    pub posterior_sd: f64,
    /// Photons counted so far, this interval included.
    pub photons_seen: u64,
}

impl EstimateRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n,
            self.t,
            rad_to_hz(self.x_hat),
            rad_to_hz(self.posterior_sd),
            self.photons_seen
        )
    }
}

pub fn write_estimates<W: Write>(records: &[EstimateRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{ESTIMATES_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    out.flush()
}

pub trait Estimator {
    fn name(&self) -> &'static str;

    fn step(&mut self, rec: &CountRecord) -> EstimateRecord;

    fn run(&mut self, stream: &[CountRecord]) -> Vec<EstimateRecord> {
        stream.iter().map(|r| self.step(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    OuBayesian,
    SimpleBayesian,
    AverageCount,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] =
        [EstimatorKind::OuBayesian, EstimatorKind::SimpleBayesian, EstimatorKind::AverageCount];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::OuBayesian => "ou-bayes",
            EstimatorKind::SimpleBayesian => "simple-bayes",
            EstimatorKind::AverageCount => "avg-count",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ou-bayes" | "ou" => Ok(EstimatorKind::OuBayesian),
            "simple-bayes" | "simple" => Ok(EstimatorKind::SimpleBayesian),
            "avg-count" | "avg" => Ok(EstimatorKind::AverageCount),
            other => Err(Error::invalid(format!(
                "unknown estimator {other:?} (expected ou-bayes, simple-bayes or avg-count)"
            ))),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Settings shared by all three estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    pub grid: GridSpec,
    /// Averaging window as a multiple of `tau_c`.
    pub tau_a_over_tau_c: f64,
    pub branch: crate::cpt::Branch,
    pub branch_span: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { grid: GridSpec::default(), tau_a_over_tau_c: 1.4, branch: crate::cpt::Branch::Inner, branch_span: 2.0 }
    }
}

/// Any of the three estimators, ready to run. Clone a prepared instance to
/// get a fresh one that shares the precomputed tables.
#[derive(Debug, Clone)]
pub enum AnyEstimator {
    Bayes(BayesFilter),
    Avg(AvgCount),
}

impl AnyEstimator {
    pub fn build(kind: EstimatorKind, ou: &OuParams, model: &SignalModel, tau: f64, s: &EstimatorSettings) -> Result<Self> {
        Ok(match kind {
            EstimatorKind::OuBayesian => AnyEstimator::Bayes(BayesFilter::ou(ou, model, tau, s.grid)?),
            EstimatorKind::SimpleBayesian => AnyEstimator::Bayes(BayesFilter::simple(ou, model, tau, s.grid)?),
            EstimatorKind::AverageCount => {
                let cfg = AvgCountConfig {
                    tau_a: s.tau_a_over_tau_c * ou.tau_c,
                    branch: s.branch,
                    branch_span: s.branch_span,
                };
                let half = s.grid.span_sigmas * ou.sigma;
                AnyEstimator::Avg(AvgCount::new(cfg, *model, tau, (ou.mean - half, ou.mean + half))?)
            }
        })
    }
}

impl Estimator for AnyEstimator {
    fn name(&self) -> &'static str {
        match self {
            AnyEstimator::Bayes(f) => f.name(),
            AnyEstimator::Avg(a) => a.name(),
        }
    }

    fn step(&mut self, rec: &CountRecord) -> EstimateRecord {
        match self {
            AnyEstimator::Bayes(f) => f.step(rec),
            AnyEstimator::Avg(a) => a.step(rec),
        }
    }
}

pub fn run_ou_bayesian(stream: &[CountRecord], ou: &OuParams, model: &SignalModel, tau: f64, grid: GridSpec) -> Result<Vec<EstimateRecord>> {
    Ok(BayesFilter::ou(ou, model, tau, grid)?.run(stream))
}

pub fn run_simple_bayesian(stream: &[CountRecord], ou: &OuParams, model: &SignalModel, tau: f64, grid: GridSpec) -> Result<Vec<EstimateRecord>> {
    Ok(BayesFilter::simple(ou, model, tau, grid)?.run(stream))
}

pub fn run_avg_count(stream: &[CountRecord], ou: &OuParams, model: &SignalModel, tau: f64, cfg: AvgCountConfig) -> Result<Vec<EstimateRecord>> {
    let half = 6.0 * ou.sigma;
    Ok(AvgCount::new(cfg, *model, tau, (ou.mean - half, ou.mean + half))?.run(stream))
}
