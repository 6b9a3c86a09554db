//! Ornstein-Uhlenbeck field process.
//!
//! The hidden signal is the shift `x(t)` of the spin splitting, a stationary
//! Gauss-Markov process with autocorrelation `sigma^2 exp(-t / tau_c)`. The
//! process is sampled with its exact transition law, so there is no
//! discretization bias at any step size.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::units::{hz_to_rad, rad_to_hz};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    /// Stationary standard deviation (rad/s).
    pub sigma: f64,
    /// Correlation time (s).
    pub tau_c: f64,
    /// Stationary mean (rad/s).
    pub mean: f64,
}

impl OuParams {
    pub fn new(sigma: f64, tau_c: f64) -> Result<Self> {
        Self::with_mean(sigma, tau_c, 0.0)
    }

    pub fn with_mean(sigma: f64, tau_c: f64, mean: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !(tau_c > 0.0) {
            return Err(Error::invalid(format!("tau_c must be positive, got {tau_c}")));
        }
        if !mean.is_finite() {
            return Err(Error::invalid("mean must be finite"));
        }
        Ok(Self { sigma, tau_c, mean })
    }

    /// `sigma_hz` is sigma / 2pi.
    pub fn from_hz(sigma_hz: f64, tau_c: f64) -> Result<Self> {
        Self::new(hz_to_rad(sigma_hz), tau_c)
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Decay factor `exp(-dt / tau_c)` of the conditional mean.
    pub fn decay(&self, dt: f64) -> f64 {
        (-dt / self.tau_c).exp()
    }

    /// Conditional variance after `dt`: `sigma^2 (1 - exp(-2 dt / tau_c))`.
    pub fn transition_variance(&self, dt: f64) -> f64 {
        -self.variance() * (-2.0 * dt / self.tau_c).exp_m1()
    }

    pub fn transition(&self, x_prev: f64, dt: f64) -> (f64, f64) {
        ou_transition(x_prev, dt, self)
    }
}

/// Exact one-step transition: mean and variance of `x(t + dt)` given `x(t)`.
pub fn ou_transition(x_prev: f64, dt: f64, params: &OuParams) -> (f64, f64) {
    debug_assert!(dt >= 0.0);
    let mean = params.mean + (x_prev - params.mean) * params.decay(dt);
    (mean, params.transition_variance(dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuTrajectory {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
}

impl OuTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Writes `t_seconds,x_hz`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_seconds,x_hz")?;
        for (n, x) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", self.time(n), rad_to_hz(*x))?;
        }
        out.flush()
    }
}

/// Samples `n_steps` values spaced by `dt`, starting from the stationary law.
pub fn generate_trajectory(params: &OuParams, dt: f64, n_steps: usize, seed: u64) -> Result<OuTrajectory> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be at least 1"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mut rng = rng_from_seed(seed);
    let decay = params.decay(dt);
    let step_sd = params.transition_variance(dt).sqrt();

    let mut samples = Vec::with_capacity(n_steps);
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut x = params.mean + params.sigma * z;
    samples.push(x);
    for _ in 1..n_steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = params.mean + (x - params.mean) * decay + step_sd * z;
        samples.push(x);
    }
    Ok(OuTrajectory { dt, samples, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrFit {
    pub sigma_hat: f64,
    pub tau_c_hat: f64,
    /// Weighted RMS residual of the log fit; infinite when unresolved.
    pub residual: f64,
    /// Set when the process decorrelates within a single step, so only an
    /// upper bound `tau_c_hat <= dt` is meaningful.
    pub unresolved: bool,
    pub lags_used: usize,
}

const MIN_LAGS: usize = 10;

/// Fits `R(t) = sigma^2 exp(-t / tau_c)` to the empirical autocovariance.
///
/// The lag window is `[0, 2 tau]`, with `tau` read off the first crossing of
/// `R(0) e^-1`. The log is fitted by weighted least squares with the
/// intercept free, and `residual` is the weighted RMS.
pub fn fit_autocorrelation(traj: &OuTrajectory) -> Result<AutocorrFit> {
    let x = &traj.samples;
    let n = x.len();
    if n < 2 * MIN_LAGS {
        return Err(Error::DegenerateAutocorrelation(format!(
            "trajectory of {n} samples is shorter than {} lags",
            2 * MIN_LAGS
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        let m = n - lag;
        centered[..m].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / m as f64
    };

    let r0 = autocov(0);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::DegenerateAutocorrelation("zero variance".into()));
    }

    let r1 = autocov(1);
    if r1 <= r0 * (-1.0f64).exp() {
        let tau_c_hat = if r1 > 0.0 { traj.dt / (r0 / r1).ln() } else { 0.0 };
        return Ok(AutocorrFit {
            sigma_hat: r0.sqrt(),
            tau_c_hat,
            residual: f64::INFINITY,
            unresolved: true,
            lags_used: 2,
        });
    }

    // Window [0, 2 tau] with tau taken from the first e^-1 crossing. A fixed
    // window avoids the bias of stopping wherever the noisy tail first dips.
    let max_lag = n / 2;
    let one_tau = r0 * (-1.0f64).exp();
    let mut lags = vec![(0usize, r0), (1, r1)];
    let mut lag = 2;
    let crossing = loop {
        if lag >= max_lag {
            return Err(Error::DegenerateAutocorrelation(format!(
                "autocorrelation still above e^-1 at lag {lag}; trajectory too short for its correlation time"
            )));
        }
        let r = autocov(lag);
        if r <= 0.0 {
            return Err(Error::DegenerateAutocorrelation(format!(
                "autocorrelation non-positive at lag {lag}, before one correlation time"
            )));
        }
        lags.push((lag, r));
        if r <= one_tau {
            break lag;
        }
        lag += 1;
    };
    let end = (2 * crossing).max(MIN_LAGS).min(max_lag);
    for lag in lags.len()..=end {
        let r = autocov(lag);
        if r <= 0.0 {
            break;
        }
        lags.push((lag, r));
    }

    // Weighted least squares of ln R against t. Var(ln R) goes roughly as
    // 1/R^2, so R^2 is the weight.
    let pts: Vec<(f64, f64, f64)> = lags.iter().map(|&(k, r)| (k as f64 * traj.dt, r.ln(), r * r)).collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let tm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let (sxx, sxy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y, w)| (a + w * (t - tm).powi(2), b + w * (t - tm) * (y - ym)));
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = (pts
        .iter()
        .map(|(t, y, w)| w * (y - intercept - slope * t).powi(2))
        .sum::<f64>()
        / sw)
        .sqrt();
    let tau_c_hat = if slope < 0.0 { -1.0 / slope } else { f64::INFINITY };

    Ok(AutocorrFit {
        sigma_hat: (0.5 * intercept).exp(),
        tau_c_hat,
        residual,
        unresolved: false,
        lags_used: lags.len(),
    })
}
