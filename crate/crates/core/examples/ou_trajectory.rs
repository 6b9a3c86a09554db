//! Generate an OU field trajectory and recover sigma and tau_c from it.
//!
//! cargo run --release --example ou_trajectory

use cptsense::ou::{fit_autocorrelation, generate_trajectory, OuParams};
use cptsense::units::rad_to_hz;

fn main() -> cptsense::error::Result<()> {
    let ou = OuParams::from_hz(2.2e6, 5e-3)?;
    let traj = generate_trajectory(&ou, 10e-6, 1_000_000, 2024)?;
    let fit = fit_autocorrelation(&traj)?;

    println!("configured  sigma/2pi = {:.3} MHz  tau_c = {:.3} ms", rad_to_hz(ou.sigma) / 1e6, ou.tau_c * 1e3);
    println!(
        "fitted      sigma/2pi = {:.3} MHz  tau_c = {:.3} ms  ({} lags, rms residual {:.2e})",
        rad_to_hz(fit.sigma_hat) / 1e6,
        fit.tau_c_hat * 1e3,
        fit.lags_used,
        fit.residual
    );

    // one step of the exact transition
    let (m, v) = ou.transition(ou.sigma, 10e-6);
    println!("from x = sigma, one 10 us step: mean {:.7} sigma, sd {:.5} sigma", m / ou.sigma, v.sqrt() / ou.sigma);
    Ok(())
}
