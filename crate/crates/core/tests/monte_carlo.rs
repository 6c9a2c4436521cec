//! Statistical checks of the event simulation against exact rates.

use timebin::analysis::{fit_fringe, half_turn_grid, FringePoint};
use timebin::analyzers::{AnalyzerConfig, LoopConfig, TwoWayConfig};
use timebin::lab::{
    expected_accidentals_per_trial, run_experiment, sample_outcome_distribution, select_window, tac_histogram,
    window_counts_by_phase, DetectorModel, ExperimentConfig,
};
use timebin::PulseTrain;

fn config(d: usize, analyzer: AnalyzerConfig, detectors: DetectorModel, mu: f64, n: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        train: PulseTrain::uniform(d, 13.0).unwrap(),
        analyzer,
        detectors,
        mean_pairs_per_train: mu,
        n_trains: n,
        rng_seed: seed,
    }
}

fn two_way() -> AnalyzerConfig {
    AnalyzerConfig::TwoWay(TwoWayConfig::default())
}

/// `|observed - expected| <= k sqrt(expected)` for a Poisson count.
fn within_sigma(observed: u64, expected: f64, k: f64) -> bool {
    (observed as f64 - expected).abs() <= k * expected.sqrt().max(1.0)
}

#[test]
fn ideal_tau0_counts_follow_exact_table() {
    let cfg = config(5, two_way(), DetectorModel::ideal(), 0.2, 2_000_000, 3);
    let phases = [0.0, 0.4, 1.2];
    let records = run_experiment(&cfg, &phases).unwrap();
    let counts = window_counts_by_phase(&records, phases.len(), 0.0, 1.0);
    for (i, &phase) in phases.iter().enumerate() {
        let table = sample_outcome_distribution(&cfg.train, &cfg.analyzer.with_phase(phase)).unwrap();
        let expected = cfg.n_trains as f64 * cfg.mean_pairs_per_train * table.monitored_probability() * table.tau0_probability();
        assert!(within_sigma(counts[i], expected, 4.0), "phase {phase}: {} vs {expected}", counts[i]);
    }
}

#[test]
fn side_peaks_follow_exact_table() {
    let cfg = config(4, two_way(), DetectorModel::ideal(), 0.2, 2_000_000, 8);
    let records = run_experiment(&cfg, &[0.3]).unwrap();
    let table = sample_outcome_distribution(&cfg.train, &cfg.analyzer.with_phase(0.3)).unwrap();
    let scale = cfg.n_trains as f64 * cfg.mean_pairs_per_train * table.monitored_probability();
    for k in [-1i64, 1] {
        let expected: f64 = table
            .entries()
            .iter()
            .filter(|((a, b), _)| *b as i64 - *a as i64 == k)
            .map(|(_, p)| p * scale)
            .sum();
        let observed = select_window(&records, 13.0 * k as f64, 1.0).unwrap();
        assert!(within_sigma(observed, expected, 4.0), "tau {k}: {observed} vs {expected}");
    }
}

#[test]
fn efficiency_scales_coincidences() {
    let full = config(3, two_way(), DetectorModel::ideal(), 0.3, 1_000_000, 21);
    let half = ExperimentConfig {
        detectors: DetectorModel { eta_ge: 0.5, eta_ingaas: 0.4, ..DetectorModel::ideal() },
        rng_seed: 22,
        ..full.clone()
    };
    let n_full = select_window(&run_experiment(&full, &[0.0]).unwrap(), 0.0, 1.0).unwrap();
    let n_half = select_window(&run_experiment(&half, &[0.0]).unwrap(), 0.0, 1.0).unwrap();
    assert!(within_sigma(n_half, n_full as f64 * 0.2, 5.0), "{n_half} vs 0.2 * {n_full}");
}

#[test]
fn channel_loss_scales_both_arms() {
    let base = config(3, two_way(), DetectorModel::ideal(), 0.3, 1_000_000, 31);
    let lossy = ExperimentConfig {
        detectors: DetectorModel { channel_loss_db: 3.0, ..DetectorModel::ideal() },
        rng_seed: 32,
        ..base.clone()
    };
    let t = 10f64.powf(-0.3);
    let n_base = select_window(&run_experiment(&base, &[0.0]).unwrap(), 0.0, 1.0).unwrap();
    let n_lossy = select_window(&run_experiment(&lossy, &[0.0]).unwrap(), 0.0, 1.0).unwrap();
    assert!(within_sigma(n_lossy, n_base as f64 * t * t, 5.0), "{n_lossy} vs {} * {}", n_base, t * t);
}

#[test]
fn accidental_rate_matches_prediction() {
    for (dark, noise) in [(30_000.0, 5e-5), (200_000.0, 2e-4)] {
        let detectors = DetectorModel { dark_rate_ge: dark, noise_prob_ingaas: noise, ..DetectorModel::default() };
        let cfg = config(11, two_way(), detectors, 0.0, 50_000_000, 5);
        let records = run_experiment(&cfg, &[0.0]).unwrap();
        assert!(records.iter().all(|r| !r.true_coincidence));
        let expected = expected_accidentals_per_trial(&cfg).unwrap() * cfg.n_trains as f64;
        let observed = select_window(&records, 0.0, 1.0).unwrap();
        assert!(within_sigma(observed, expected, 4.0), "dark {dark}: {observed} vs {expected}");
        // accidentals are flat across gate slots
        let side = select_window(&records, 26.0, 1.0).unwrap();
        assert!(within_sigma(side, expected, 4.0), "side slot: {side} vs {expected}");
    }
}

#[test]
fn discarded_edges_give_full_contrast() {
    let analyzer = AnalyzerConfig::TwoWay(TwoWayConfig { discard_edges: true, ..Default::default() });
    let cfg = config(5, analyzer, DetectorModel::ideal(), 0.1, 500_000, 13);
    let phases = half_turn_grid(12);
    let records = run_experiment(&cfg, &phases).unwrap();
    let counts = window_counts_by_phase(&records, phases.len(), 0.0, 1.0);
    let points: Vec<FringePoint> = phases.iter().zip(&counts).map(|(&d, &n)| FringePoint::poisson(d, n as f64)).collect();
    let fit = fit_fringe(&points).unwrap();
    assert!((fit.visibility - 1.0).abs() <= 3.0 * fit.visibility_err, "{fit:?}");
}

#[test]
fn loop_analyzer_tau0_rate() {
    let analyzer = AnalyzerConfig::Loop(LoopConfig::new(1.0 / 3.0, 0.0, 0.0));
    let cfg = config(30, analyzer, DetectorModel::ideal(), 0.2, 1_000_000, 17);
    let phases = [0.0, std::f64::consts::PI];
    let records = run_experiment(&cfg, &phases).unwrap();
    let counts = window_counts_by_phase(&records, 2, 0.0, 1.0);
    for (i, &phase) in phases.iter().enumerate() {
        let table = sample_outcome_distribution(&cfg.train, &cfg.analyzer.with_phase(phase)).unwrap();
        let expected = cfg.n_trains as f64 * cfg.mean_pairs_per_train * table.monitored_probability() * table.tau0_probability();
        assert!(within_sigma(counts[i], expected, 4.0), "phase {phase}: {} vs {expected}", counts[i]);
    }
    // near-complete cancellation at the optimum
    assert!(counts[1] * 20 < counts[0], "{counts:?}");
}

#[test]
fn seeds_control_the_stream() {
    let a = config(6, two_way(), DetectorModel::default(), 0.05, 5_000_000, 1);
    let b = ExperimentConfig { rng_seed: 2, ..a.clone() };
    let ra = run_experiment(&a, &[0.0, 1.0]).unwrap();
    assert_eq!(ra, run_experiment(&a, &[0.0, 1.0]).unwrap());
    assert_ne!(ra, run_experiment(&b, &[0.0, 1.0]).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    // more than one block per phase so scheduling has room to differ
    let cfg = config(4, two_way(), DetectorModel::default(), 0.05, 9_000_000, 77);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = single.install(|| run_experiment(&cfg, &[0.0, 0.5]).unwrap());
    let b = multi.install(|| run_experiment(&cfg, &[0.0, 0.5]).unwrap());
    assert_eq!(a, b);
}

#[test]
fn histogram_peaks_sit_on_pump_grid() {
    let cfg = config(11, two_way(), DetectorModel::default(), 0.05, 20_000_000, 4);
    let records = run_experiment(&cfg, &[0.0]).unwrap();
    let hist = tac_histogram(&records, 0.5, 60.0).unwrap();
    for (center, n) in hist.iter() {
        if n > 0 {
            let k = center / 13.0;
            assert!((k - k.round()).abs() < 1e-9, "counts at {center}");
        }
    }
    assert_eq!(hist.total() + hist.overflow(), records.len() as u64);
}
