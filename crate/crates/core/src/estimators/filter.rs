use std::sync::Arc;

use super::bayes::{LikelihoodTable, Moments, UpdateStatus};
use super::grid::PosteriorGrid;
use super::kernel::OuKernel;
use super::{EstimateRecord, Estimator};
use crate::cpt::SignalModel;
use crate::error::{Error, Result};
use crate::ou::OuParams;
use crate::photon::CountRecord;

/// Static-filter weights below this (at unit mass) are set to zero.
const FLUSH_BELOW: f64 = 1e-200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_bins: usize,
    /// Half-width of the grid in units of sigma.
    pub span_sigmas: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_bins: 1024, span_sigmas: 6.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 64 {
            return Err(Error::invalid(format!("grid needs at least 64 bins, got {}", self.n_bins)));
        }
        if !(self.span_sigmas >= 5.0 && self.span_sigmas.is_finite()) {
            return Err(Error::invalid(format!("grid must span at least 5 sigma, got {}", self.span_sigmas)));
        }
        Ok(())
    }
}

/// Grid filter. With a kernel it is the OU-aware filter; without one the
/// prior is carried over unchanged between intervals.
///
/// The weights are kept unnormalized between steps; the prediction divides
/// by the previous mass. Cloning is cheap (kernel and likelihood tables are
/// shared), so a fresh filter per trajectory is `template.clone()`.
#[derive(Debug, Clone)]
pub struct BayesFilter {
    weights: Vec<f64>,
    moments: Moments,
    prior: Arc<PosteriorGrid>,
    kernel: Option<Arc<OuKernel>>,
    table: Arc<LikelihoodTable>,
    scratch: Vec<f64>,
    last_n: Option<u64>,
    photons: u64,
    resets: u64,
    name: &'static str,
}

impl BayesFilter {
    /// Filter that propagates the posterior through the OU transition over
    /// each interval of length `tau`.
    pub fn ou(ou: &OuParams, model: &SignalModel, tau: f64, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let prior = PosteriorGrid::stationary(ou, spec.n_bins, spec.span_sigmas)?;
        let kernel = OuKernel::new(&prior, tau, ou)?;
        let table = LikelihoodTable::new(prior.centers(), model, tau);
        Ok(Self::from_parts(prior, Some(kernel), table).named("ou-bayes"))
    }

    /// Filter that treats the field as static.
    pub fn simple(ou: &OuParams, model: &SignalModel, tau: f64, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let prior = PosteriorGrid::stationary(ou, spec.n_bins, spec.span_sigmas)?;
        let table = LikelihoodTable::new(prior.centers(), model, tau);
        Ok(Self::from_parts(prior, None, table).named("simple-bayes"))
    }

    /// Filter from explicit pieces; no size checks.
    pub fn from_parts(prior: PosteriorGrid, kernel: Option<OuKernel>, table: LikelihoodTable) -> Self {
        Self {
            weights: prior.weights().to_vec(),
            moments: Moments::of(prior.weights(), prior.centers()),
            scratch: vec![0.0; prior.n_bins()],
            prior: Arc::new(prior),
            kernel: kernel.map(Arc::new),
            table: Arc::new(table),
            last_n: None,
            photons: 0,
            resets: 0,
            name: "bayes",
        }
    }

    fn named(mut self, name: &'static str) -> Self {
        self.name = name;
        self
    }

    /// Current posterior, normalized.
    pub fn posterior(&self) -> PosteriorGrid {
        let mut g = (*self.prior).clone();
        g.weights_mut().copy_from_slice(&self.weights);
        g.normalize();
        g
    }

    pub fn kernel(&self) -> Option<&OuKernel> {
        self.kernel.as_deref()
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean()
    }

    pub fn sd(&self) -> f64 {
        self.moments.sd()
    }

    /// How often the posterior underflowed and was reset to the prior.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    /// Back to the initial prior, as before the first record.
    pub fn reset(&mut self) {
        self.restart();
        self.last_n = None;
        self.photons = 0;
        self.resets = 0;
    }

    fn restart(&mut self) {
        self.weights.copy_from_slice(self.prior.weights());
        self.moments = Moments::of(&self.weights, self.prior.centers());
    }

    /// Prediction by one interval. No-op for the static filter.
    pub fn predict(&mut self) {
        if self.propagate() {
            self.moments = Moments::of(&self.weights, self.prior.centers());
        }
    }

    // Kernel step only; the moments are stale until the caller refreshes
    // them, apart from the mass which the kernel preserves.
    fn propagate(&mut self) -> bool {
        let Some(k) = &self.kernel else { return false };
        k.apply_scaled(&self.weights, &mut self.scratch, 1.0 / self.moments.mass);
        std::mem::swap(&mut self.weights, &mut self.scratch);
        self.moments.mass = 1.0;
        true
    }

    pub fn update(&mut self, y: u32) -> UpdateStatus {
        let m = self.table.apply_with_moments(y, &mut self.weights, self.prior.centers());
        if !(m.mass > 0.0 && m.mass.is_finite()) {
            self.restart();
            self.resets += 1;
            return UpdateStatus::Reset;
        }
        self.moments = m;
        if self.kernel.is_none() {
            // nothing downstream rescales, so keep the mass near one; far
            // tails would otherwise decay into subnormals, which are slow
            let inv = 1.0 / m.mass;
            self.weights.iter_mut().for_each(|w| {
                let v = *w * inv;
                *w = if v < FLUSH_BELOW { 0.0 } else { v };
            });
            self.moments = Moments { mass: 1.0, first: m.first * inv, second: m.second * inv };
        }
        UpdateStatus::Ok
    }

    fn emit(&self, rec: &CountRecord) -> EstimateRecord {
        EstimateRecord { n: rec.n, t: rec.t, x_hat: self.mean(), posterior_sd: self.sd(), photons_seen: self.photons }
    }
}

impl Estimator for BayesFilter {
    fn name(&self) -> &'static str {
        self.name
    }

    fn step(&mut self, rec: &CountRecord) -> EstimateRecord {
        let steps = match self.last_n {
            Some(prev) => rec.n.saturating_sub(prev).max(1),
            None => 1,
        };
        self.last_n = Some(rec.n);
        let mut moved = false;
        for _ in 0..steps {
            moved |= self.propagate();
        }
        if !rec.in_init {
            self.photons += u64::from(rec.y);
            self.update(rec.y);
        } else if moved {
            self.moments = Moments::of(&self.weights, self.prior.centers());
        }
        self.emit(rec)
    }
}
