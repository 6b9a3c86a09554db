//! One photon after a dark stretch moves the posterior mean.
//!
//! cargo run --release --example single_photon

use cptsense::estimators::{BayesFilter, Estimator, GridSpec};
use cptsense::harness::{ExperimentConfig, Prepared};
use cptsense::photon::CountRecord;
use cptsense::units::rad_to_hz;

fn main() -> cptsense::error::Result<()> {
    let cfg = ExperimentConfig::default();
    let p = Prepared::new(&cfg)?;
    let mut filter = BayesFilter::ou(&p.ou, &p.model, p.tau(), GridSpec::default())?;
    let tau = p.tau();
    let rec = |n: u64, y: u32| CountRecord { n, t: n as f64 * tau, y, in_init: false, charge_ok: true };

    let mut last = 0.0;
    for n in 0..50 {
        last = filter.step(&rec(n, 0)).x_hat;
    }
    let after = filter.step(&rec(50, 1));
    println!("after 50 dark intervals: {:+.4} MHz", rad_to_hz(last) / 1e6);
    println!("after one photon:        {:+.4} MHz", rad_to_hz(after.x_hat) / 1e6);
    println!("jump = {:.4} sigma", (after.x_hat - last).abs() / p.ou.sigma);
    Ok(())
}
