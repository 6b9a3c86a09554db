//! Load a config, override a key, and write the resolved config and a
//! manifest the way the CLI does.
//!
//! cargo run --release --example config_file

use std::time::Duration;

use cptsense::harness::{write_manifest, ExperimentConfig};

const TEXT: &str = "\
# experimental charge fidelity, dimmer source
charge.fidelity = 0.75
cpt.mean_rate_hz = 4000
filter.estimator = ou-bayes
";

fn main() -> cptsense::error::Result<()> {
    let mut cfg = ExperimentConfig::from_text(TEXT)?;
    cfg.apply_override("cpt.bias_hz=6e6")?;
    cfg.validate()?;
    println!("fingerprint {}", cfg.fingerprint());
    print!("{}", cfg.echo());

    let dir = std::env::temp_dir().join("cptsense-config-example");
    std::fs::create_dir_all(&dir)?;
    write_manifest(&dir, "example", &cfg, Duration::ZERO, &[])?;
    println!("manifest written to {}", dir.display());
    Ok(())
}
