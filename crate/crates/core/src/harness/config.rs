//! Experiment configuration as flat `key = value` text with dotted keys.
//!
//! ```text
//! # comment
//! ou.sigma_hz = 2.2e6
//! cpt.bias_hz = 4e6
//! filter.estimator = ou-bayes
//! ```
//!
//! Values may be quoted. Unknown keys are errors. [`ExperimentConfig::echo`]
//! writes every key back out in a form this parser reads.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::cpt::{Branch, CptLineshape, LambdaSystemParams, SignalModel};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSettings, GridSpec};
use crate::ou::OuParams;
use crate::photon::{ChargeModel, CycleTiming};
use crate::units::hz_to_rad;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sigma_hz: f64,
    pub tau_c: f64,
    pub mean_hz: f64,

    pub fwhm_hz: f64,
    pub contrast: f64,
    pub background_pop: f64,
    pub bias_hz: f64,
    pub mean_rate: f64,

    pub rabi1_hz: f64,
    pub rabi2_hz: f64,
    pub gamma_hz: f64,
    pub gammas_hz: f64,
    pub branching_1: f64,

    pub init_duration: f64,
    pub cpt_duration: f64,
    pub update_interval: f64,

    pub charge_fidelity: f64,
    pub neutral_rate: f64,

    pub estimator: EstimatorKind,
    pub n_bins: usize,
    pub span_sigmas: f64,
    pub tau_a_over_tau_c: f64,
    pub branch: Branch,
    pub branch_span: f64,

    pub n_trajectories: usize,
    pub sim_duration: f64,
    pub seed: u64,
    /// Scoring skips this many `tau_c` at the start of every trajectory.
    pub burn_in_tau_c: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lambda = LambdaSystemParams::nv_defaults();
        Self {
            sigma_hz: 2.2e6,
            tau_c: 5e-3,
            mean_hz: 0.0,
            fwhm_hz: crate::cpt::lineshape::DEFAULT_FWHM_HZ,
            contrast: crate::cpt::lineshape::DEFAULT_CONTRAST,
            background_pop: crate::cpt::lineshape::DEFAULT_BACKGROUND_POP,
            bias_hz: 4e6,
            mean_rate: 5400.0,
            rabi1_hz: crate::units::rad_to_hz(lambda.rabi_1),
            rabi2_hz: crate::units::rad_to_hz(lambda.rabi_2),
            gamma_hz: crate::units::rad_to_hz(lambda.gamma),
            gammas_hz: crate::units::rad_to_hz(lambda.gamma_s),
            branching_1: lambda.branching_1,
            init_duration: 10e-6,
            cpt_duration: 100e-6,
            update_interval: 10e-6,
            charge_fidelity: 1.0,
            neutral_rate: 0.0,
            estimator: EstimatorKind::OuBayesian,
            n_bins: 1024,
            span_sigmas: 6.0,
            tau_a_over_tau_c: 1.4,
            branch: Branch::Inner,
            branch_span: 2.0,
            n_trajectories: 40,
            sim_duration: 5.0,
            seed: 1,
            burn_in_tau_c: 3.0,
        }
    }
}

pub const KEYS: [&str; 28] = [
    "ou.sigma_hz",
    "ou.tau_c_s",
    "ou.mean_hz",
    "cpt.fwhm_hz",
    "cpt.contrast",
    "cpt.background_pop",
    "cpt.bias_hz",
    "cpt.mean_rate_hz",
    "lambda.rabi1_hz",
    "lambda.rabi2_hz",
    "lambda.gamma_hz",
    "lambda.gammas_hz",
    "lambda.branching_1",
    "timing.init_s",
    "timing.cpt_s",
    "timing.tau_s",
    "charge.fidelity",
    "charge.neutral_rate_hz",
    "filter.estimator",
    "filter.n_bins",
    "filter.span_sigmas",
    "avg.tau_a_over_tau_c",
    "avg.branch",
    "avg.branch_span",
    "run.trajectories",
    "run.duration_s",
    "run.seed",
    "run.burn_in_tau_c",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Defaults overlaid with the file at `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies every `key = value` line of `text`, in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)));
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim_matches('"');
        match key {
            "ou.sigma_hz" => self.sigma_hz = parse(key, value)?,
            "ou.tau_c_s" => self.tau_c = parse(key, value)?,
            "ou.mean_hz" => self.mean_hz = parse(key, value)?,
            "cpt.fwhm_hz" => self.fwhm_hz = parse(key, value)?,
            "cpt.contrast" => self.contrast = parse(key, value)?,
            "cpt.background_pop" => self.background_pop = parse(key, value)?,
            "cpt.bias_hz" => self.bias_hz = parse(key, value)?,
            "cpt.mean_rate_hz" => self.mean_rate = parse(key, value)?,
            "lambda.rabi1_hz" => self.rabi1_hz = parse(key, value)?,
            "lambda.rabi2_hz" => self.rabi2_hz = parse(key, value)?,
            "lambda.gamma_hz" => self.gamma_hz = parse(key, value)?,
            "lambda.gammas_hz" => self.gammas_hz = parse(key, value)?,
            "lambda.branching_1" => self.branching_1 = parse(key, value)?,
            "timing.init_s" => self.init_duration = parse(key, value)?,
            "timing.cpt_s" => self.cpt_duration = parse(key, value)?,
            "timing.tau_s" => self.update_interval = parse(key, value)?,
            "charge.fidelity" => self.charge_fidelity = parse(key, value)?,
            "charge.neutral_rate_hz" => self.neutral_rate = parse(key, value)?,
            "filter.estimator" => self.estimator = value.parse().map_err(|e| Error::Config(strip_prefix(e)))?,
            "filter.n_bins" => self.n_bins = parse(key, value)?,
            "filter.span_sigmas" => self.span_sigmas = parse(key, value)?,
            "avg.tau_a_over_tau_c" => self.tau_a_over_tau_c = parse(key, value)?,
            "avg.branch" => self.branch = value.parse().map_err(|e| Error::Config(strip_prefix(e)))?,
            "avg.branch_span" => self.branch_span = parse(key, value)?,
            "run.trajectories" => self.n_trajectories = parse(key, value)?,
            "run.duration_s" => self.sim_duration = parse(key, value)?,
            "run.seed" => self.seed = parse(key, value)?,
            "run.burn_in_tau_c" => self.burn_in_tau_c = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "ou.sigma_hz" => self.sigma_hz.to_string(),
            "ou.tau_c_s" => self.tau_c.to_string(),
            "ou.mean_hz" => self.mean_hz.to_string(),
            "cpt.fwhm_hz" => self.fwhm_hz.to_string(),
            "cpt.contrast" => self.contrast.to_string(),
            "cpt.background_pop" => self.background_pop.to_string(),
            "cpt.bias_hz" => self.bias_hz.to_string(),
            "cpt.mean_rate_hz" => self.mean_rate.to_string(),
            "lambda.rabi1_hz" => self.rabi1_hz.to_string(),
            "lambda.rabi2_hz" => self.rabi2_hz.to_string(),
            "lambda.gamma_hz" => self.gamma_hz.to_string(),
            "lambda.gammas_hz" => self.gammas_hz.to_string(),
            "lambda.branching_1" => self.branching_1.to_string(),
            "timing.init_s" => self.init_duration.to_string(),
            "timing.cpt_s" => self.cpt_duration.to_string(),
            "timing.tau_s" => self.update_interval.to_string(),
            "charge.fidelity" => self.charge_fidelity.to_string(),
            "charge.neutral_rate_hz" => self.neutral_rate.to_string(),
            "filter.estimator" => self.estimator.to_string(),
            "filter.n_bins" => self.n_bins.to_string(),
            "filter.span_sigmas" => self.span_sigmas.to_string(),
            "avg.tau_a_over_tau_c" => self.tau_a_over_tau_c.to_string(),
            "avg.branch" => self.branch.to_string(),
            "avg.branch_span" => self.branch_span.to_string(),
            "run.trajectories" => self.n_trajectories.to_string(),
            "run.duration_s" => self.sim_duration.to_string(),
            "run.seed" => self.seed.to_string(),
            "run.burn_in_tau_c" => self.burn_in_tau_c.to_string(),
            _ => return None,
        })
    }

    /// Every key, one `key = value` line each, in a fixed order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            s.push_str(key);
            s.push_str(" = ");
            s.push_str(&self.get(key).expect("listed key"));
            s.push('\n');
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`echo`](Self::echo).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks everything that can be checked without building the models.
    pub fn validate(&self) -> Result<()> {
        self.ou()?;
        self.signal_model()?;
        self.timing()?;
        self.charge()?;
        self.grid().validate()?;
        if self.n_trajectories == 0 {
            return Err(Error::invalid("run.trajectories must be at least 1"));
        }
        if !(self.sim_duration >= self.update_interval) {
            return Err(Error::invalid("run.duration_s must cover at least one update interval"));
        }
        if !(self.burn_in_tau_c >= 0.0) {
            return Err(Error::invalid("run.burn_in_tau_c must be non-negative"));
        }
        if !(self.tau_a_over_tau_c > 0.0 && self.branch_span > 0.0) {
            return Err(Error::invalid("avg.tau_a_over_tau_c and avg.branch_span must be positive"));
        }
        Ok(())
    }

    /// Non-fatal problems worth a line on stderr.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.sim_duration < 10.0 * self.tau_c {
            w.push(format!(
                "run.duration_s = {} is shorter than 10 tau_c; variance estimates will be noisy",
                self.sim_duration
            ));
        }
        w
    }

    pub fn ou(&self) -> Result<OuParams> {
        OuParams::with_mean(hz_to_rad(self.sigma_hz), self.tau_c, hz_to_rad(self.mean_hz))
    }

    pub fn lineshape(&self) -> Result<CptLineshape> {
        CptLineshape::from_hz(self.fwhm_hz, self.contrast, self.background_pop)
    }

    pub fn signal_model(&self) -> Result<SignalModel> {
        SignalModel::calibrated(self.lineshape()?, self.bias_hz, &self.ou()?, self.mean_rate)
    }

    pub fn lambda(&self) -> LambdaSystemParams {
        LambdaSystemParams {
            rabi_1: hz_to_rad(self.rabi1_hz),
            rabi_2: hz_to_rad(self.rabi2_hz),
            gamma: hz_to_rad(self.gamma_hz),
            gamma_s: hz_to_rad(self.gammas_hz),
            one_photon_detuning: 0.0,
            raman_detuning: 0.0,
            branching_1: self.branching_1,
        }
    }

    pub fn timing(&self) -> Result<CycleTiming> {
        CycleTiming::new(self.init_duration, self.cpt_duration, self.update_interval)
    }

    pub fn charge(&self) -> Result<ChargeModel> {
        ChargeModel::new(self.charge_fidelity, self.neutral_rate)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { n_bins: self.n_bins, span_sigmas: self.span_sigmas }
    }

    pub fn estimator_settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            grid: self.grid(),
            tau_a_over_tau_c: self.tau_a_over_tau_c,
            branch: self.branch,
            branch_span: self.branch_span,
        }
    }

    /// Update intervals per trajectory.
    pub fn n_steps(&self) -> usize {
        (self.sim_duration / self.update_interval).round().max(1.0) as usize
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in_tau_c * self.tau_c
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidParameter(m) => m,
        other => other.to_string(),
    }
}
