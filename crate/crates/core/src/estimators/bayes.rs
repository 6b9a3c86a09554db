use super::grid::PosteriorGrid;
use crate::cpt::SignalModel;

/// Cached counts beyond which the likelihood is computed on the fly.
const CACHED_COUNTS: usize = 8;

/// Poisson likelihood of a count at every bin, scaled so its largest value is
/// one. Built once per grid and interval length.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    mean_counts: Vec<f64>,
    ln_mean_counts: Vec<f64>,
    cached: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn new(centers: &[f64], model: &SignalModel, tau: f64) -> Self {
        let mean_counts: Vec<f64> = centers.iter().map(|&x| model.expected_count(x, tau)).collect();
        Self::from_mean_counts(mean_counts)
    }

    /// Table for explicit per-bin expected counts.
    pub fn from_mean_counts(mean_counts: Vec<f64>) -> Self {
        let ln_mean_counts = mean_counts.iter().map(|m| m.ln()).collect();
        let mut table = Self { mean_counts, ln_mean_counts, cached: Vec::new() };
        table.cached = (0..CACHED_COUNTS as u32).map(|y| table.compute(y)).collect();
        table
    }

    pub fn mean_counts(&self) -> &[f64] {
        &self.mean_counts
    }

    fn log_likelihood(&self, y: u32, i: usize) -> f64 {
        let m = self.mean_counts[i];
        if y == 0 {
            -m
        } else if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            y as f64 * self.ln_mean_counts[i] - m
        }
    }

    fn compute(&self, y: u32) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.mean_counts.len()).map(|i| self.log_likelihood(y, i)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return vec![0.0; logs.len()];
        }
        logs.into_iter().map(|l| (l - top).exp()).collect()
    }

    /// Multiplies `weights` by the scaled likelihood of `y`.
    pub fn apply(&self, y: u32, weights: &mut [f64]) {
        match self.cached.get(y as usize) {
            Some(l) => weights.iter_mut().zip(l).for_each(|(w, l)| *w *= l),
            None => {
                let l = self.compute(y);
                weights.iter_mut().zip(&l).for_each(|(w, l)| *w *= l);
            }
        }
    }

    /// As [`apply`](Self::apply), returning the raw moments of the result.
    pub fn apply_with_moments(&self, y: u32, weights: &mut [f64], centers: &[f64]) -> Moments {
        match self.cached.get(y as usize) {
            Some(l) => scale_and_sum(weights, Some(l), centers),
            None => scale_and_sum(weights, Some(&self.compute(y)), centers),
        }
    }
}

/// Unnormalized moments `sum w`, `sum w x`, `sum w x^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl Moments {
    pub fn of(weights: &[f64], centers: &[f64]) -> Self {
        let mut w = weights.to_vec();
        scale_and_sum(&mut w, None, centers)
    }

    pub fn mean(&self) -> f64 {
        self.first / self.mass
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        (self.second / self.mass - m * m).max(0.0).sqrt()
    }
}

const LANES: usize = 8;

/// Optionally multiplies by `factor` and sums moments in one pass, with a
/// fixed lane layout.
pub(crate) fn scale_and_sum(weights: &mut [f64], factor: Option<&[f64]>, centers: &[f64]) -> Moments {
    let mut s0 = [0.0f64; LANES];
    let mut s1 = [0.0f64; LANES];
    let mut s2 = [0.0f64; LANES];
    let n = weights.len();
    let whole = n - n % LANES;
    for base in (0..whole).step_by(LANES) {
        for k in 0..LANES {
            let i = base + k;
            let w = match factor {
                Some(f) => weights[i] * f[i],
                None => weights[i],
            };
            weights[i] = w;
            let wx = w * centers[i];
            s0[k] += w;
            s1[k] += wx;
            s2[k] += wx * centers[i];
        }
    }
    for i in whole..n {
        let w = match factor {
            Some(f) => weights[i] * f[i],
            None => weights[i],
        };
        weights[i] = w;
        let k = i - whole;
        s0[k] += w;
        s1[k] += w * centers[i];
        s2[k] += w * centers[i] * centers[i];
    }
    let fold = |s: [f64; LANES]| ((s[0] + s[4]) + (s[2] + s[6])) + ((s[1] + s[5]) + (s[3] + s[7]));
    Moments { mass: fold(s0), first: fold(s1), second: fold(s2) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Ok,
    /// Every bin became impossible; the grid was reset to the fallback prior.
    Reset,
}

/// Bayes step in place: weights times likelihood of `y`, renormalized. If the
/// total underflows the grid is replaced by `fallback`.
pub fn bayes_update_with(
    grid: &mut PosteriorGrid,
    y: u32,
    table: &LikelihoodTable,
    fallback: &PosteriorGrid,
) -> UpdateStatus {
    table.apply(y, grid.weights_mut());
    let total = grid.normalize();
    if total > 0.0 && total.is_finite() {
        UpdateStatus::Ok
    } else {
        grid.clone_from(fallback);
        UpdateStatus::Reset
    }
}

/// One-off Bayes step with the likelihood of `y` counts in an interval of
/// length `tau`.
pub fn bayes_update(
    grid: &PosteriorGrid,
    y: u32,
    tau: f64,
    model: &SignalModel,
    fallback: &PosteriorGrid,
) -> (PosteriorGrid, UpdateStatus) {
    let table = LikelihoodTable::new(grid.centers(), model, tau);
    let mut out = grid.clone();
    let status = bayes_update_with(&mut out, y, &table, fallback);
    (out, status)
}
