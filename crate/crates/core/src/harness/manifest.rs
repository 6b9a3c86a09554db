//! Provenance files written next to every run's outputs.

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.txt";

/// `git describe --always --dirty` of the working directory, or `unknown`.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Writes `config.txt` (the resolved config, loadable with `--config`) and
/// `manifest.txt` (command, seed, version, wall time, outputs and config).
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    wall_time: Duration,
    outputs: &[&str],
) -> Result<()> {
    let file_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::File { path, source }
    };
    let echo = cfg.echo();
    let config_path = dir.join(CONFIG_FILE);
    std::fs::write(&config_path, &echo).map_err(file_err(&config_path))?;

    let mut m = String::new();
    m.push_str(&format!("command = {command}\n"));
    m.push_str(&format!("seed = {}\n", cfg.seed));
    m.push_str(&format!("fingerprint = {}\n", cfg.fingerprint()));
    m.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    m.push_str(&format!("git_describe = {}\n", git_describe()));
    m.push_str(&format!("wall_time_s = {:.3}\n", wall_time.as_secs_f64()));
    m.push_str(&format!("outputs = {}\n", outputs.join(",")));
    m.push_str("\n[config]\n");
    m.push_str(&echo);
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, m).map_err(file_err(&manifest_path))?;
    Ok(())
}
