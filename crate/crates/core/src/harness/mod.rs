//! Experiment orchestration: configuration, Monte Carlo runs and scoring,
//! sweeps, latency bench, streaming and run manifests.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod manifest;
pub mod stream;
pub mod sweep;

pub use bench::{bench_update_latency, LatencyReport, BENCH_HEADER};
pub use config::ExperimentConfig;
pub use experiment::{
    estimate_one, run_experiment, score_many, score_variance, simulate, BlockErrors, Prepared, Simulated,
    VarianceReport,
};
pub use manifest::{git_describe, write_manifest};
pub use stream::{stream_estimate, StreamSummary};
pub use sweep::{
    sweep_bias, sweep_sigma, sweep_tau_c, write_sweep_csv, write_tau_c_csv, SweepRow, TauCRow, BIAS_HEADER,
    SIGMA_HEADER, TAU_C_HEADER,
};
