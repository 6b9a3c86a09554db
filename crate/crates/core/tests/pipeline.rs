//! End-to-end library paths: simulate, serialize, replay, estimate, score.

use cptsense::estimators::{write_estimates, AnyEstimator, Estimator, EstimatorKind};
use cptsense::harness::{score_variance, simulate, stream_estimate, ExperimentConfig, Prepared};
use cptsense::photon::{read_counts, write_counts, write_truth};
use proptest::prelude::*;

fn small() -> ExperimentConfig {
    ExperimentConfig { sim_duration: 0.05, n_bins: 128, charge_fidelity: 0.75, ..Default::default() }
}

#[test]
fn replayed_counts_give_the_same_estimates() {
    let cfg = small();
    let p = Prepared::new(&cfg).unwrap();
    let sim = simulate(&cfg, 3).unwrap();
    let mut buf = Vec::new();
    write_counts(&sim.counts, &mut buf).unwrap();
    let replayed = read_counts(buf.as_slice()).unwrap();
    assert_eq!(replayed.len(), sim.counts.len());

    for kind in EstimatorKind::ALL {
        let est = p.estimator(kind, &cfg).unwrap();
        let direct = est.clone().run(&sim.counts);
        let again = est.clone().run(&replayed);
        assert_eq!(direct, again, "{kind}");
    }
}

#[test]
fn truth_file_lines_up_with_counts() {
    let sim = simulate(&small(), 0).unwrap();
    let mut buf = Vec::new();
    write_truth(&sim.counts, &sim.trajectory, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), sim.counts.len() + 1);
    let lost = sim.counts.iter().filter(|r| !r.charge_ok).count();
    let flagged = text.lines().skip(1).filter(|l| l.ends_with(",0")).count();
    assert_eq!(lost, flagged);
}

#[test]
fn ou_filter_beats_guessing_on_a_long_run() {
    let cfg = ExperimentConfig { sim_duration: 1.0, n_bins: 256, ..Default::default() };
    let p = Prepared::new(&cfg).unwrap();
    let sim = simulate(&cfg, 0).unwrap();
    let est = p.estimator(EstimatorKind::OuBayesian, &cfg).unwrap().run(&sim.counts);
    let r = score_variance(&est, &sim.trajectory, &p.ou, cfg.burn_in()).unwrap();
    assert!(r.var_over_sigma2 < 0.8, "{r:?}");
    let sd_mean = est.iter().map(|e| e.posterior_sd).sum::<f64>() / est.len() as f64;
    assert!(sd_mean < p.ou.sigma);
}

#[test]
fn stream_emits_estimator_records_for_every_kind() {
    for kind in EstimatorKind::ALL {
        let cfg = ExperimentConfig { estimator: kind, ..small() };
        let sim = simulate(&cfg, 1).unwrap();
        let mut input = Vec::new();
        write_counts(&sim.counts, &mut input).unwrap();
        let mut streamed = Vec::new();
        stream_estimate(input.as_slice(), &mut streamed, std::io::sink(), &cfg, true).unwrap();
        let p = Prepared::new(&cfg).unwrap();
        let batch = AnyEstimator::build(kind, &p.ou, &p.model, p.tau(), &cfg.estimator_settings()).unwrap().run(&sim.counts);
        let mut expected = Vec::new();
        write_estimates(&batch, &mut expected).unwrap();
        assert_eq!(streamed, expected, "{kind}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn config_echo_round_trips(
        sigma in 1e5f64..1e7,
        tau_c in 1e-4f64..1e-1,
        bias in -2e7f64..2e7,
        fidelity in 0.0f64..=1.0,
        bins in 64usize..4096,
        seed in any::<u64>(),
    ) {
        let cfg = ExperimentConfig {
            sigma_hz: sigma, tau_c, bias_hz: bias, charge_fidelity: fidelity, n_bins: bins, seed,
            ..Default::default()
        };
        let back = ExperimentConfig::from_text(&cfg.echo()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.fingerprint(), cfg.fingerprint());
    }

    #[test]
    fn estimates_stay_on_the_grid(seed in 0u64..1000, bias in 0.0f64..12.0) {
        let cfg = ExperimentConfig { sim_duration: 0.01, n_bins: 64, bias_hz: bias * 1e6, seed, ..Default::default() };
        let p = Prepared::new(&cfg).unwrap();
        let sim = simulate(&cfg, 0).unwrap();
        let half = cfg.span_sigmas * p.ou.sigma;
        for kind in EstimatorKind::ALL {
            for e in p.estimator(kind, &cfg).unwrap().run(&sim.counts) {
                prop_assert!(e.x_hat.abs() <= half && e.posterior_sd >= 0.0 && e.posterior_sd <= half);
            }
        }
    }
}
