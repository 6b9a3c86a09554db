//! The CPT dip: Lorentzian model, Lindblad steady state of the Lambda system,
//! and a Lorentzian fit to the latter.
//!
//! cargo run --release --example cpt_lineshape

use cptsense::cpt::{fit_lorentzian_dip, rho_ee_lindblad, CptLineshape, LambdaSystemParams};
use cptsense::units::{hz_to_rad, rad_to_hz};

fn main() -> cptsense::error::Result<()> {
    let shape = CptLineshape::default();
    let lambda = LambdaSystemParams::nv_defaults();

    println!("{:>10} {:>12} {:>12}", "delta MHz", "lorentzian", "lindblad");
    for mhz in [-20.0, -10.0, -5.8, -2.0, 0.0, 2.0, 5.8, 10.0, 20.0] {
        let d = hz_to_rad(mhz * 1e6);
        let l = rho_ee_lindblad(&lambda.with_raman_detuning(d))?;
        println!("{mhz:>10.1} {:>12.5} {:>12.6}", shape.rho_ee(d), l);
    }

    let dark = LambdaSystemParams { gamma_s: 0.0, ..lambda };
    println!("dark state (gamma_s = 0, on resonance): rho_ee = {:.2e}", rho_ee_lindblad(&dark)?);

    let deltas: Vec<f64> = (-200..=200).map(|k| hz_to_rad(k as f64 * 1e5)).collect();
    let values = deltas
        .iter()
        .map(|&d| rho_ee_lindblad(&lambda.with_raman_detuning(d)))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = fit_lorentzian_dip(&deltas, &values)?;
    println!(
        "Lorentzian fit over +-20 MHz: FWHM {:.2} MHz, contrast {:.3}, R^2 {:.3}",
        rad_to_hz(fit.fwhm) / 1e6,
        fit.depth / fit.background,
        fit.r_squared
    );
    Ok(())
}
