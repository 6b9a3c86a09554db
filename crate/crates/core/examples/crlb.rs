//! Bayesian Cramer-Rao bound against tau_c and bias.
//!
//! cargo run --release --example crlb

use cptsense::bounds::{bayesian_crlb, mean_information};
use cptsense::harness::{ExperimentConfig, Prepared};

fn main() -> cptsense::error::Result<()> {
    println!("{:>8} {:>12} {:>10}", "tau_c ms", "bound/sig^2", "iters");
    for tau_c in [0.5e-3, 1e-3, 2e-3, 5e-3, 10e-3, 20e-3] {
        let p = Prepared::new(&ExperimentConfig { tau_c, ..Default::default() })?;
        let r = bayesian_crlb(&p.ou, p.tau(), &p.model)?;
        println!("{:>8.1} {:>12.4} {:>10}", tau_c * 1e3, r.bound_over_sigma2, r.iterations);
    }
    println!();
    println!("{:>8} {:>14} {:>12}", "bias MHz", "info/interval", "bound/sig^2");
    for bias in [0.0, 2.0, 4.0, 6.0, 8.0, 12.0] {
        let p = Prepared::new(&ExperimentConfig { bias_hz: bias * 1e6, ..Default::default() })?;
        let info = mean_information(&p.ou, p.tau(), &p.model) * p.ou.variance();
        let r = bayesian_crlb(&p.ou, p.tau(), &p.model)?;
        println!("{bias:>8.1} {info:>14.3e} {:>12.4}", r.bound_over_sigma2);
    }
    Ok(())
}
