//! Per-update latency of the OU filter at several grid sizes.
//!
//! cargo run --release --example latency

use cptsense::harness::{bench_update_latency, ExperimentConfig};

fn main() -> cptsense::error::Result<()> {
    for n_bins in [64, 256, 512, 1024] {
        let cfg = ExperimentConfig { n_bins, ..Default::default() };
        let r = bench_update_latency(&cfg, 200_000)?;
        println!("{n_bins:>5} bins: p50 {:>6} ns  p99 {:>6} ns  max {:>8} ns", r.p50_ns, r.p99_ns, r.max_ns);
    }
    Ok(())
}
