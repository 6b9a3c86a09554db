//! Feed a counts file through the streaming estimator and check it against
//! the batch filter.
//!
//! cargo run --release --example streaming

use cptsense::estimators::{run_ou_bayesian, write_estimates};
use cptsense::harness::{simulate, stream_estimate, ExperimentConfig, Prepared};
use cptsense::photon::write_counts;

fn main() -> cptsense::error::Result<()> {
    let cfg = ExperimentConfig { sim_duration: 0.2, ..Default::default() };
    let sim = simulate(&cfg, 0)?;
    let mut counts = Vec::new();
    write_counts(&sim.counts, &mut counts)?;

    let mut streamed = Vec::new();
    let t0 = std::time::Instant::now();
    let s = stream_estimate(counts.as_slice(), &mut streamed, std::io::stderr(), &cfg, true)?;
    let per_line = t0.elapsed().as_secs_f64() / s.emitted as f64;

    let p = Prepared::new(&cfg)?;
    let mut batch = Vec::new();
    write_estimates(&run_ou_bayesian(&sim.counts, &p.ou, &p.model, p.tau(), cfg.grid())?, &mut batch)?;

    println!("{} lines, {:.2} us per line including parse and format", s.emitted, per_line * 1e6);
    println!("identical to batch: {}", streamed == batch);
    Ok(())
}
