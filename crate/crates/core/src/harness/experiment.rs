//! Monte Carlo runs: simulate trajectories, run estimators, score them.

use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::cpt::SignalModel;
use crate::error::{Error, Result};
use crate::estimators::{AnyEstimator, EstimateRecord, Estimator, EstimatorKind};
use crate::ou::{generate_trajectory, OuParams, OuTrajectory};
use crate::photon::{simulate_counts, ChargeModel, CountRecord, CycleTiming};
use crate::rng::{derive_seed, rng_from_seed, trajectory_seeds};

const BOOTSTRAP_REPLICATES: usize = 200;
// far above any trajectory counter
const BOOTSTRAP_STREAM: u64 = 1 << 62;

/// Models resolved from a config, built once per run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ou: OuParams,
    pub model: SignalModel,
    pub timing: CycleTiming,
    pub charge: ChargeModel,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ou: cfg.ou()?, model: cfg.signal_model()?, timing: cfg.timing()?, charge: cfg.charge()? })
    }

    pub fn tau(&self) -> f64 {
        self.timing.update_interval
    }

    pub fn estimator(&self, kind: EstimatorKind, cfg: &ExperimentConfig) -> Result<AnyEstimator> {
        AnyEstimator::build(kind, &self.ou, &self.model, self.tau(), &cfg.estimator_settings())
    }
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub trajectory: OuTrajectory,
    pub counts: Vec<CountRecord>,
}

/// Trajectory `index` of the run described by `cfg`.
pub fn simulate(cfg: &ExperimentConfig, index: u64) -> Result<Simulated> {
    simulate_prepared(cfg, &Prepared::new(cfg)?, index)
}

fn simulate_prepared(cfg: &ExperimentConfig, p: &Prepared, index: u64) -> Result<Simulated> {
    let (field_seed, photon_seed) = trajectory_seeds(cfg.seed, index);
    let trajectory = generate_trajectory(&p.ou, p.tau(), cfg.n_steps(), field_seed)?;
    let counts = simulate_counts(&trajectory, &p.timing, &p.model, &p.charge, photon_seed)?;
    Ok(Simulated { trajectory, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub estimator: String,
    pub var_over_sigma2: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub fingerprint: String,
}

/// Squared errors summed over consecutive blocks of one trajectory.
#[derive(Debug, Clone)]
pub struct BlockErrors {
    burn_in_steps: usize,
    block_len: usize,
    inv_var: f64,
    seen: usize,
    blocks: Vec<(f64, usize)>,
}

impl BlockErrors {
    pub fn new(ou: &OuParams, tau: f64, burn_in: f64) -> Self {
        Self {
            burn_in_steps: (burn_in / tau).ceil() as usize,
            block_len: ((ou.tau_c / tau).round() as usize).max(1),
            inv_var: 1.0 / ou.variance(),
            seen: 0,
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, estimate: f64, truth: f64) {
        let k = self.seen;
        self.seen += 1;
        if k < self.burn_in_steps {
            return;
        }
        let e = (estimate - truth) * (estimate - truth) * self.inv_var;
        if (k - self.burn_in_steps) % self.block_len == 0 {
            self.blocks.push((0.0, 0));
        }
        let b = self.blocks.last_mut().expect("block opened above");
        b.0 += e;
        b.1 += 1;
    }

    pub fn blocks(&self) -> &[(f64, usize)] {
        &self.blocks
    }
}

/// Pools block errors over trajectories. The standard error comes from
/// resampling blocks with replacement inside each trajectory.
pub fn summarize(name: &str, per_trajectory: &[Vec<(f64, usize)>], seed: u64) -> VarianceReport {
    let (sum, n) = per_trajectory
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), &(bs, bn)| (s + bs, n + bn));
    let var = if n > 0 { sum / n as f64 } else { f64::NAN };
    let mut rng = rng_from_seed(derive_seed(seed, BOOTSTRAP_STREAM));
    let mut means = Vec::with_capacity(BOOTSTRAP_REPLICATES);
    if n > 1 {
        for _ in 0..BOOTSTRAP_REPLICATES {
            let (mut s, mut c) = (0.0, 0usize);
            for blocks in per_trajectory.iter().filter(|b| !b.is_empty()) {
                for _ in 0..blocks.len() {
                    let (bs, bn) = blocks[rng.random_range(0..blocks.len())];
                    s += bs;
                    c += bn;
                }
            }
            means.push(s / c as f64);
        }
    }
    let stderr = if means.len() > 1 {
        let m = means.iter().sum::<f64>() / means.len() as f64;
        (means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    VarianceReport { estimator: name.to_string(), var_over_sigma2: var, stderr, n_samples: n, fingerprint: String::new() }
}

/// Var/sigma^2 of one estimate series against its true trajectory, skipping
/// `burn_in` seconds. Estimates must carry interval indices `0, 1, 2, ...`.
pub fn score_variance(
    estimates: &[EstimateRecord],
    truth: &OuTrajectory,
    ou: &OuParams,
    burn_in: f64,
) -> Result<VarianceReport> {
    score_many(&[(estimates, truth)], ou, burn_in, 0)
}

/// As [`score_variance`], pooled over several trajectories.
pub fn score_many(
    runs: &[(&[EstimateRecord], &OuTrajectory)],
    ou: &OuParams,
    burn_in: f64,
    seed: u64,
) -> Result<VarianceReport> {
    if !(burn_in >= 0.0) {
        return Err(Error::invalid("burn-in must be non-negative"));
    }
    let mut blocks = Vec::with_capacity(runs.len());
    for (estimates, truth) in runs {
        if estimates.len() != truth.len() {
            return Err(Error::Misaligned(format!("{} estimates against {} true samples", estimates.len(), truth.len())));
        }
        let mut acc = BlockErrors::new(ou, truth.dt, burn_in);
        for (i, (e, x)) in estimates.iter().zip(&truth.samples).enumerate() {
            if e.n != i as u64 {
                return Err(Error::Misaligned(format!("estimate {i} carries interval index {}", e.n)));
            }
            acc.push(e.x_hat, *x);
        }
        blocks.push(acc.blocks);
    }
    Ok(summarize("", &blocks, seed))
}

/// Runs `cfg.n_trajectories` simulations and scores every estimator in
/// `kinds` on the same photon streams. Reports come back in `kinds` order.
pub fn run_experiment(cfg: &ExperimentConfig, kinds: &[EstimatorKind]) -> Result<Vec<VarianceReport>> {
    let p = Prepared::new(cfg)?;
    let templates = kinds.iter().map(|&k| p.estimator(k, cfg)).collect::<Result<Vec<_>>>()?;
    let burn_in = cfg.burn_in();
    let per_traj: Vec<Vec<Vec<(f64, usize)>>> = (0..cfg.n_trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let sim = simulate_prepared(cfg, &p, i)?;
            Ok(templates
                .iter()
                .map(|t| {
                    let mut est = t.clone();
                    let mut acc = BlockErrors::new(&p.ou, p.tau(), burn_in);
                    for (rec, x) in sim.counts.iter().zip(&sim.trajectory.samples) {
                        acc.push(est.step(rec).x_hat, *x);
                    }
                    acc.blocks
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let fingerprint = cfg.fingerprint();
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let blocks: Vec<Vec<(f64, usize)>> = per_traj.iter().map(|t| t[k].clone()).collect();
            let mut r = summarize(kind.as_str(), &blocks, cfg.seed);
            r.fingerprint = fingerprint.clone();
            r
        })
        .collect())
}

/// Estimates for trajectory `index` from the configured estimator.
pub fn estimate_one(cfg: &ExperimentConfig, index: u64) -> Result<(Simulated, Vec<EstimateRecord>)> {
    let p = Prepared::new(cfg)?;
    let sim = simulate_prepared(cfg, &p, index)?;
    let est = p.estimator(cfg.estimator, cfg)?.run(&sim.counts);
    Ok((sim, est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;

    fn records(values: &[f64]) -> Vec<EstimateRecord> {
        values
            .iter()
            .enumerate()
            .map(|(n, &x)| EstimateRecord { n: n as u64, t: n as f64, x_hat: x, posterior_sd: 0.0, photons_seen: 0 })
            .collect()
    }

    fn stationary(mean_hz: f64, seed: u64) -> (OuParams, OuTrajectory) {
        let ou = OuParams::with_mean(hz_to_rad(1e6), 1e-3, hz_to_rad(mean_hz)).unwrap();
        (ou, generate_trajectory(&ou, 1e-5, 400_000, seed).unwrap())
    }

    #[test]
    fn perfect_estimator_scores_zero() {
        let (ou, traj) = stationary(0.0, 3);
        let r = score_variance(&records(&traj.samples), &traj, &ou, 3e-3).unwrap();
        assert_eq!(r.var_over_sigma2, 0.0);
        assert_eq!(r.n_samples, 400_000 - 300);
    }

    #[test]
    fn guessing_the_mean_scores_one() {
        let (ou, traj) = stationary(0.0, 4);
        let r = score_variance(&records(&vec![0.0; traj.len()]), &traj, &ou, 0.0).unwrap();
        assert!(r.stderr > 0.0);
        assert!((r.var_over_sigma2 - 1.0).abs() < 3.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn bias_adds_mean_squared_over_variance() {
        // truth centred at mu, estimate stuck at 0
        let (ou, traj) = stationary(1.5e6, 5);
        let zero_mean = OuParams::new(ou.sigma, ou.tau_c).unwrap();
        let r = score_variance(&records(&vec![0.0; traj.len()]), &traj, &zero_mean, 0.0).unwrap();
        let expect = 1.0 + 1.5f64.powi(2);
        assert!((r.var_over_sigma2 - expect).abs() < 3.0 * r.stderr, "{r:?} vs {expect}");
    }

    #[test]
    fn misalignment_is_an_error() {
        let (ou, traj) = stationary(0.0, 6);
        let short = records(&traj.samples[1..]);
        assert!(matches!(score_variance(&short, &traj, &ou, 0.0), Err(Error::Misaligned(_))));
        let mut shifted = records(&traj.samples);
        shifted[10].n = 11;
        assert!(matches!(score_variance(&shifted, &traj, &ou, 0.0), Err(Error::Misaligned(_))));
    }

    #[test]
    fn blocks_follow_tau_c() {
        let ou = OuParams::new(1.0, 1e-3).unwrap();
        let mut acc = BlockErrors::new(&ou, 1e-5, 2e-4);
        for _ in 0..520 {
            acc.push(1.0, 0.0);
        }
        assert_eq!(acc.blocks().len(), 5);
        assert_eq!(acc.blocks()[0], (100.0, 100));
        assert_eq!(acc.blocks()[4], (100.0, 100));
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_trajectories: 3,
            sim_duration: 0.05,
            n_bins: 128,
            tau_c: 1e-3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn runs_are_reproducible_and_share_streams() {
        let cfg = small();
        let a = run_experiment(&cfg, &EstimatorKind::ALL).unwrap();
        let b = run_experiment(&cfg, &EstimatorKind::ALL).unwrap();
        assert_eq!(a, b);
        let single = run_experiment(&cfg, &[EstimatorKind::SimpleBayesian]).unwrap();
        assert_eq!(single[0], a[1]);
        assert_eq!(a[0].estimator, "ou-bayes");
        assert_eq!(a[0].fingerprint, cfg.fingerprint());
    }

    #[test]
    fn experiment_matches_manual_scoring() {
        let cfg = small();
        let p = Prepared::new(&cfg).unwrap();
        let runs: Vec<_> = (0..cfg.n_trajectories as u64)
            .map(|i| {
                let sim = simulate(&cfg, i).unwrap();
                let est = p.estimator(EstimatorKind::OuBayesian, &cfg).unwrap().run(&sim.counts);
                (sim, est)
            })
            .collect();
        let refs: Vec<_> = runs.iter().map(|(s, e)| (e.as_slice(), &s.trajectory)).collect();
        let manual = score_many(&refs, &p.ou, cfg.burn_in(), cfg.seed).unwrap();
        let auto = &run_experiment(&cfg, &[EstimatorKind::OuBayesian]).unwrap()[0];
        assert_eq!(manual.var_over_sigma2, auto.var_over_sigma2);
        assert_eq!(manual.stderr, auto.stderr);
    }

    #[test]
    fn trajectories_are_uncorrelated() {
        let cfg = ExperimentConfig { sim_duration: 1.0, ..small() };
        let a = simulate(&cfg, 0).unwrap().trajectory.samples;
        let b = simulate(&cfg, 1).unwrap().trajectory.samples;
        let n = a.len() as f64;
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let rho = dot(&a, &b) / (dot(&a, &a) * dot(&b, &b)).sqrt();
        // effective sample count is duration / (2 tau_c)
        let n_eff = n * cfg.update_interval / (2.0 * cfg.tau_c);
        assert!(rho.abs() < 3.0 / n_eff.sqrt(), "rho = {rho}");
    }
}
