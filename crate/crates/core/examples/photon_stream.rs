//! Turn a field trajectory into a photon-count stream with the green/CPT
//! cycle and imperfect charge initialization, and print the first cycles.
//!
//! cargo run --release --example photon_stream

use cptsense::cpt::{CptLineshape, SignalModel};
use cptsense::ou::{generate_trajectory, OuParams};
use cptsense::photon::{simulate_counts, write_counts, ChargeModel, CycleTiming};

fn main() -> cptsense::error::Result<()> {
    let ou = OuParams::from_hz(2.2e6, 5e-3)?;
    let model = SignalModel::calibrated(CptLineshape::default(), 4e6, &ou, 5400.0)?;
    let timing = CycleTiming::default();
    let charge = ChargeModel::new(0.75, 0.0)?;

    let traj = generate_trajectory(&ou, timing.update_interval, 500_000, 11)?;
    let counts = simulate_counts(&traj, &timing, &model, &charge, 12)?;

    let photons: u64 = counts.iter().map(|r| u64::from(r.y)).sum();
    let duration = counts.len() as f64 * timing.update_interval;
    let cycles = counts.len() / timing.cycle_intervals();
    let dark = counts.iter().filter(|r| timing.phase(r.n as usize) == 0 && !r.charge_ok).count();
    println!("{} intervals, {:.1} s, {} photons ({:.0} /s)", counts.len(), duration, photons, photons as f64 / duration);
    println!("live fraction {:.4}, {} of {} cycles lost to charge", timing.live_fraction(), dark, cycles);

    let stdout = std::io::stdout();
    write_counts(&counts[..2 * timing.cycle_intervals()], stdout.lock())?;
    Ok(())
}
