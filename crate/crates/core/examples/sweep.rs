//! A small tau_c sweep of all three estimators next to the bound. Scale up
//! with the first argument (trajectories per point).
//!
//! cargo run --release --example sweep -- 8

use cptsense::estimators::EstimatorKind;
use cptsense::harness::{sweep_tau_c, write_tau_c_csv, ExperimentConfig};

fn main() -> cptsense::error::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let base = ExperimentConfig { n_trajectories: n, sim_duration: 2.0, n_bins: 512, ..Default::default() };
    let rows = sweep_tau_c(&base, &[1e-3, 5e-3, 10e-3], &EstimatorKind::ALL)?;
    write_tau_c_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
