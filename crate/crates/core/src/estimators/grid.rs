use crate::error::{Error, Result};
use crate::ou::OuParams;

/// Probability masses on a uniform grid of field shifts. Bin `i` covers
/// `[x_min + i h, x_min + (i + 1) h)` and is represented by its center.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    x_min: f64,
    x_max: f64,
    centers: Vec<f64>,
    weights: Vec<f64>,
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Mass of `N(mean, sd^2)` falling in each bin, with the two tails folded
/// into the edge bins. `sd == 0` puts everything in the bin holding `mean`.
pub(crate) fn binned_normal(edges: &[f64], mean: f64, sd: f64, out: &mut [f64]) {
    let n = out.len();
    debug_assert_eq!(edges.len(), n + 1);
    if sd == 0.0 {
        out.fill(0.0);
        let h = edges[1] - edges[0];
        let i = ((mean - edges[0]) / h).floor().clamp(0.0, (n - 1) as f64) as usize;
        out[i] = 1.0;
        return;
    }
    let mut prev = 0.0;
    for i in 0..n {
        let upper = if i + 1 == n { 1.0 } else { normal_cdf((edges[i + 1] - mean) / sd) };
        out[i] = upper - prev;
        prev = upper;
    }
}

impl PosteriorGrid {
    pub fn uniform(x_min: f64, x_max: f64, n_bins: usize) -> Result<Self> {
        Self::from_weights(x_min, x_max, vec![1.0; n_bins])
    }

    /// Grid with the given (unnormalized) masses.
    pub fn from_weights(x_min: f64, x_max: f64, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::invalid("grid needs at least one bin"));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::invalid(format!("bad grid bounds [{x_min}, {x_max}]")));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("grid weights must be finite and non-negative"));
        }
        let h = (x_max - x_min) / n as f64;
        let centers = (0..n).map(|i| x_min + (i as f64 + 0.5) * h).collect();
        let mut grid = Self { x_min, x_max, centers, weights };
        if grid.normalize() == 0.0 {
            return Err(Error::invalid("grid weights sum to zero"));
        }
        Ok(grid)
    }

    /// Discretized `N(mean, sd^2)` on `[x_min, x_max]`.
    pub fn gaussian(x_min: f64, x_max: f64, n_bins: usize, mean: f64, sd: f64) -> Result<Self> {
        let mut grid = Self::uniform(x_min, x_max, n_bins)?;
        let edges = grid.edges();
        binned_normal(&edges, mean, sd, &mut grid.weights);
        grid.normalize();
        Ok(grid)
    }

    /// Stationary law of `ou` on a grid spanning `mean +- span_sigmas sigma`.
    pub fn stationary(ou: &OuParams, n_bins: usize, span_sigmas: f64) -> Result<Self> {
        let half = span_sigmas * ou.sigma;
        Self::gaussian(ou.mean - half, ou.mean + half, n_bins, ou.mean, ou.sigma)
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn bin_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_bins() as f64
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn edges(&self) -> Vec<f64> {
        let h = self.bin_width();
        (0..=self.n_bins()).map(|i| self.x_min + i as f64 * h).collect()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rescales to unit mass and returns the mass before rescaling. A zero
    /// or non-finite total leaves the weights untouched.
    pub fn normalize(&mut self) -> f64 {
        let total = self.total();
        if total > 0.0 && total.is_finite() {
            let inv = 1.0 / total;
            self.weights.iter_mut().for_each(|w| *w *= inv);
        }
        total
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.centers).map(|(w, x)| w * x).sum()
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let var: f64 = self.weights.iter().zip(&self.centers).map(|(w, x)| w * (x - m) * (x - m)).sum();
        var.max(0.0).sqrt()
    }

    pub fn total_variation(&self, other: &PosteriorGrid) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}
