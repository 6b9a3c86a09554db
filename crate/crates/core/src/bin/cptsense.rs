use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cptsense::bounds::{bayesian_crlb, write_crlb_csv};
use cptsense::cpt::{rho_ee_lindblad, CptLineshape};
use cptsense::error::{Error, Result};
use cptsense::estimators::{write_estimates, Estimator, EstimatorKind};
use cptsense::harness::{self, ExperimentConfig, Prepared, BIAS_HEADER, SIGMA_HEADER};
use cptsense::photon::{replay_counts, write_counts, write_truth};
use cptsense::units::hz_to_rad;

#[derive(Parser, Debug)]
#[command(name = "cptsense", version, about = "CPT photon-count magnetometry: simulate, estimate, sweep, bound, bench, stream")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file with `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set cpt.bias_hz=12e6
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    /// Seconds simulated per trajectory
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// ou-bayes, simple-bayes or avg-count
    #[arg(long, global = true)]
    estimator: Option<EstimatorKind>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Output directory
    #[arg(long, default_value = ".", global = true)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Field trajectory, photon counts and lineshape for one trajectory
    Simulate {
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// Also write the true field and charge state per interval
        #[arg(long)]
        debug_truth: bool,
    },
    /// Estimate from a counts file, or score a full Monte Carlo run
    Estimate {
        /// Replay this counts CSV instead of simulating
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Estimators to score (default: the configured one)
        #[arg(long, value_delimiter = ',')]
        estimators: Vec<EstimatorKind>,
    },
    /// Var/sigma^2 against tau_c with the bound column
    SweepTauc {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 2e-3, 5e-3, 10e-3])]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = EstimatorKind::ALL)]
        estimators: Vec<EstimatorKind>,
    },
    /// Var/sigma^2 against bias/2pi (Hz)
    SweepBias {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2e6, 4e6, 6e6, 8e6, 12e6, 16e6])]
        values: Vec<f64>,
    },
    /// Var/sigma^2 against sigma/2pi (Hz)
    SweepSigma {
        #[arg(long, value_delimiter = ',', default_values_t = [0.25e6, 0.5e6, 1.1e6, 2.2e6, 4.4e6])]
        values: Vec<f64>,
    },
    /// Bayesian Cramer-Rao bound against tau_c
    Crlb {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 2e-3, 5e-3, 10e-3])]
        values: Vec<f64>,
    },
    /// Per-update latency of the OU filter
    Bench {
        #[arg(long, default_value_t = 1_000_000)]
        updates: usize,
    },
    /// Count records on stdin, estimates on stdout
    Stream {
        /// Abort on the first bad line instead of skipping it
        #[arg(long)]
        strict: bool,
    },
}

fn resolve(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for pair in &c.set {
        cfg.apply_override(pair)?;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.trajectories {
        cfg.n_trajectories = v;
    }
    if let Some(v) = c.duration {
        cfg.sim_duration = v;
    }
    if let Some(v) = c.estimator {
        cfg.estimator = v;
    }
    if let Some(v) = c.bins {
        cfg.n_bins = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|source| Error::File { path, source })
}

fn lineshape_csv(cfg: &ExperimentConfig, shape: &CptLineshape, dir: &Path) -> Result<()> {
    let deltas: Vec<f64> = (-300..=300).map(|k| hz_to_rad(k as f64 * 1e5)).collect();
    shape.write_sweep_csv(&deltas, create(dir, "lineshape.csv")?)?;
    let mut out = create(dir, "lineshape_lindblad.csv")?;
    writeln!(out, "delta_hz,rho_ee")?;
    let base = cfg.lambda();
    for k in -200..=200 {
        let d_hz = k as f64 * 1e5;
        let rho = rho_ee_lindblad(&base.with_raman_detuning(hz_to_rad(d_hz)))?;
        writeln!(out, "{d_hz},{rho}")?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.common)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    if let Cmd::Stream { strict } = cli.command {
        let stdin = std::io::stdin().lock();
        let stdout = std::io::stdout().lock();
        harness::stream_estimate(stdin, stdout, std::io::stderr(), &cfg, strict)?;
        return Ok(());
    }

    let dir = cli.common.out.as_path();
    std::fs::create_dir_all(dir).map_err(|source| Error::File { path: dir.to_path_buf(), source })?;
    let started = Instant::now();
    let (name, outputs): (&str, Vec<&str>) = match &cli.command {
        Cmd::Simulate { index, debug_truth } => {
            let sim = harness::simulate(&cfg, *index)?;
            sim.trajectory.write_csv(create(dir, "trajectory.csv")?)?;
            write_counts(&sim.counts, create(dir, "counts.csv")?)?;
            lineshape_csv(&cfg, &cfg.lineshape()?, dir)?;
            let mut files = vec!["trajectory.csv", "counts.csv", "lineshape.csv", "lineshape_lindblad.csv"];
            if *debug_truth {
                write_truth(&sim.counts, &sim.trajectory, create(dir, "truth.csv")?)?;
                files.push("truth.csv");
            }
            ("simulate", files)
        }
        Cmd::Estimate { counts: Some(path), .. } => {
            let records = replay_counts(path)?;
            let p = Prepared::new(&cfg)?;
            let est = p.estimator(cfg.estimator, &cfg)?.run(&records);
            write_estimates(&est, create(dir, "estimates.csv")?)?;
            ("estimate", vec!["estimates.csv"])
        }
        Cmd::Estimate { counts: None, estimators } => {
            let kinds = if estimators.is_empty() { vec![cfg.estimator] } else { estimators.clone() };
            let reports = harness::run_experiment(&cfg, &kinds)?;
            let mut out = create(dir, "variance.csv")?;
            writeln!(out, "estimator,var_over_sigma2,stderr,n_samples,fingerprint")?;
            for r in &reports {
                writeln!(out, "{},{},{},{},{}", r.estimator, r.var_over_sigma2, r.stderr, r.n_samples, r.fingerprint)?;
                println!("{:<13} Var/sigma^2 = {:.4} +- {:.4}", r.estimator, r.var_over_sigma2, r.stderr);
            }
            out.flush()?;
            ("estimate", vec!["variance.csv"])
        }
        Cmd::SweepTauc { values, estimators } => {
            let rows = harness::sweep_tau_c(&cfg, values, estimators)?;
            harness::write_tau_c_csv(&rows, create(dir, "sweep_tauc.csv")?)?;
            ("sweep-tauc", vec!["sweep_tauc.csv"])
        }
        Cmd::SweepBias { values } => {
            let rows = harness::sweep_bias(&cfg, values)?;
            harness::write_sweep_csv(BIAS_HEADER, &rows, create(dir, "sweep_bias.csv")?)?;
            ("sweep-bias", vec!["sweep_bias.csv"])
        }
        Cmd::SweepSigma { values } => {
            let rows = harness::sweep_sigma(&cfg, values)?;
            harness::write_sweep_csv(SIGMA_HEADER, &rows, create(dir, "sweep_sigma.csv")?)?;
            ("sweep-sigma", vec!["sweep_sigma.csv"])
        }
        Cmd::Crlb { values } => {
            let rows = values
                .iter()
                .map(|&tau_c| {
                    let p = Prepared::new(&ExperimentConfig { tau_c, ..cfg.clone() })?;
                    Ok((tau_c, bayesian_crlb(&p.ou, p.tau(), &p.model)?))
                })
                .collect::<Result<Vec<_>>>()?;
            write_crlb_csv(&rows, create(dir, "crlb.csv")?)?;
            ("crlb", vec!["crlb.csv"])
        }
        Cmd::Bench { updates } => {
            let r = harness::bench_update_latency(&cfg, *updates)?;
            r.write_csv(create(dir, "bench.csv")?)?;
            println!("{} bins, {} updates: p50 {} ns, p99 {} ns, max {} ns", r.n_bins, r.updates, r.p50_ns, r.p99_ns, r.max_ns);
            ("bench", vec!["bench.csv"])
        }
        Cmd::Stream { .. } => unreachable!("handled above"),
    };
    harness::write_manifest(dir, name, &cfg, started.elapsed(), &outputs)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
