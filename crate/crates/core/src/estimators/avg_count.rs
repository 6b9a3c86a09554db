use std::collections::VecDeque;

use super::{EstimateRecord, Estimator};
use crate::cpt::{Branch, SignalModel};
use crate::error::{Error, Result};
use crate::photon::CountRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgCountConfig {
    /// Window of live CPT time (s).
    pub tau_a: f64,
    pub branch: Branch,
    /// Largest |detuning| the inversion reaches, in half-widths.
    pub branch_span: f64,
}

impl AvgCountConfig {
    /// Window `1.4 tau_c`, inner branch out to one full width.
    pub fn for_tau_c(tau_c: f64) -> Self {
        Self { tau_a: 1.4 * tau_c, branch: Branch::Inner, branch_span: 2.0 }
    }
}

/// Inverts the count accumulated over the trailing `tau_a` of CPT time.
/// Holds its previous value until the first window is full and during
/// green pulses.
#[derive(Debug, Clone)]
pub struct AvgCount {
    model: SignalModel,
    branch: Branch,
    delta_max: f64,
    window_len: usize,
    live_time: f64,
    window: VecDeque<u32>,
    sum: u64,
    estimate: f64,
    limits: (f64, f64),
    photons: u64,
}

impl AvgCount {
    /// `limits` bounds the reported estimate, normally the filter grid.
    pub fn new(cfg: AvgCountConfig, model: SignalModel, tau: f64, limits: (f64, f64)) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid("update interval must be positive"));
        }
        if !(cfg.tau_a >= tau) {
            return Err(Error::invalid(format!("averaging window {} s is shorter than one interval", cfg.tau_a)));
        }
        if !(cfg.branch_span > 0.0) {
            return Err(Error::invalid("branch span must be positive"));
        }
        let window_len = (cfg.tau_a / tau).round() as usize;
        Ok(Self {
            model,
            branch: cfg.branch,
            delta_max: cfg.branch_span * model.shape.fwhm / 2.0,
            window_len,
            live_time: window_len as f64 * tau,
            window: VecDeque::with_capacity(window_len),
            sum: 0,
            estimate: 0.0,
            limits,
            photons: 0,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Field shift whose expected count over the window equals `counts`.
    pub fn invert(&self, counts: f64) -> f64 {
        let k = self.model.calibration.counts_per_pop_per_second;
        let rho = counts / (k * self.live_time);
        let (delta, _) = self.model.shape.invert(rho, self.branch, self.delta_max);
        (self.model.bias() - delta).clamp(self.limits.0, self.limits.1)
    }
}

impl Estimator for AvgCount {
    fn name(&self) -> &'static str {
        "avg-count"
    }

    fn step(&mut self, rec: &CountRecord) -> EstimateRecord {
        if !rec.in_init {
            self.photons += u64::from(rec.y);
            if self.window.len() == self.window_len {
                self.sum -= u64::from(self.window.pop_front().unwrap_or(0));
            }
            self.window.push_back(rec.y);
            self.sum += u64::from(rec.y);
            if self.window.len() == self.window_len {
                self.estimate = self.invert(self.sum as f64);
            }
        }
        EstimateRecord { n: rec.n, t: rec.t, x_hat: self.estimate, posterior_sd: 0.0, photons_seen: self.photons }
    }
}
