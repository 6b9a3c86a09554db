//! Wall-clock cost of one OU filter update.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::experiment::{simulate, Prepared};
use crate::error::{Error, Result};
use crate::estimators::{BayesFilter, Estimator};
use crate::photon::CountRecord;

pub const BENCH_HEADER: &str = "p50_ns,p99_ns,max_ns";

const WARMUP: usize = 10_000;
// longest simulated stream replayed by the bench
const STREAM_CAP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
    pub updates: usize,
    pub n_bins: usize,
}

impl LatencyReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{BENCH_HEADER}")?;
        writeln!(out, "{},{},{}", self.p50_ns, self.p99_ns, self.max_ns)?;
        out.flush()
    }
}

/// Times `updates` steps of the OU filter (prediction, Bayes update and
/// posterior mean) on a simulated stream, after precomputing the kernel and
/// a warm-up. The configured estimator kind is ignored.
pub fn bench_update_latency(cfg: &ExperimentConfig, updates: usize) -> Result<LatencyReport> {
    if updates == 0 {
        return Err(Error::invalid("bench needs at least one update"));
    }
    let p = Prepared::new(cfg)?;
    let stream_cfg = ExperimentConfig { sim_duration: cfg.sim_duration.min(STREAM_CAP), ..cfg.clone() };
    let stream = simulate(&stream_cfg, 0)?.counts;
    let mut filter = BayesFilter::ou(&p.ou, &p.model, p.tau(), cfg.grid())?;
    let tau = p.tau();
    let record = |k: usize| {
        let src = &stream[k % stream.len()];
        CountRecord { n: k as u64, t: k as f64 * tau, ..*src }
    };

    for k in 0..WARMUP {
        black_box(filter.step(&record(k)).x_hat);
    }
    let mut ns = Vec::with_capacity(updates);
    for k in WARMUP..WARMUP + updates {
        let rec = record(k);
        let t0 = Instant::now();
        let x = filter.step(black_box(&rec)).x_hat;
        let dt = t0.elapsed();
        black_box(x);
        ns.push(dt.as_nanos() as u64);
    }
    let max_ns = *ns.iter().max().expect("non-empty");
    let mut pick = |q: f64| {
        let i = ((q * (ns.len() - 1) as f64).round() as usize).min(ns.len() - 1);
        *ns.select_nth_unstable(i).1
    };
    let p50_ns = pick(0.50);
    let p99_ns = pick(0.99);
    Ok(LatencyReport { p50_ns, p99_ns, max_ns, updates, n_bins: cfg.n_bins })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn larger_grids_cost_more() {
        let small = ExperimentConfig { n_bins: 64, ..Default::default() };
        let large = ExperimentConfig { n_bins: 1024, ..Default::default() };
        let a = bench_update_latency(&small, 20_000).unwrap();
        let b = bench_update_latency(&large, 20_000).unwrap();
        assert!(a.p50_ns < b.p50_ns, "{a:?} vs {b:?}");
        assert!(a.p50_ns <= a.p99_ns && a.p99_ns <= a.max_ns);
    }

    #[test]
    fn csv_layout() {
        let r = LatencyReport { p50_ns: 7000, p99_ns: 9000, max_ns: 40000, updates: 1, n_bins: 1024 };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p50_ns,p99_ns,max_ns\n7000,9000,40000\n");
    }
}
