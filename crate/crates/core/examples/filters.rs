//! Run the OU-aware filter, the static filter and the average-count
//! estimator on one simulated trajectory and score each.
//!
//! cargo run --release --example filters

use cptsense::estimators::{Estimator, EstimatorKind};
use cptsense::harness::{score_variance, simulate, ExperimentConfig, Prepared};
use cptsense::units::rad_to_hz;

fn main() -> cptsense::error::Result<()> {
    let cfg = ExperimentConfig { sim_duration: 2.0, n_bins: 512, ..Default::default() };
    let p = Prepared::new(&cfg)?;
    let sim = simulate(&cfg, 0)?;

    for kind in EstimatorKind::ALL {
        let est = p.estimator(kind, &cfg)?.run(&sim.counts);
        let r = score_variance(&est, &sim.trajectory, &p.ou, cfg.burn_in())?;
        println!("{:<13} Var/sigma^2 = {:.3} +- {:.3}", kind, r.var_over_sigma2, r.stderr);
        if kind == EstimatorKind::OuBayesian {
            let n = 150_000;
            println!(
                "  at t = {:.2} s: truth {:+.3} MHz, estimate {:+.3} +- {:.3} MHz",
                est[n].t,
                rad_to_hz(sim.trajectory.samples[n]) / 1e6,
                rad_to_hz(est[n].x_hat) / 1e6,
                rad_to_hz(est[n].posterior_sd) / 1e6
            );
        }
    }
    Ok(())
}
