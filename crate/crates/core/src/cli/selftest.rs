//! Brute-force oracle suites run by `timebin selftest`.

use std::f64::consts::{PI, TAU};

use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::fringe_contrast;
use crate::analyzers::{
    apply_two_way, fp_coincidence_closed, fp_coincidence_series, fp_visibility, loop_exit_amplitude,
    loops_for_tolerance, Arm, LoopConfig, TwoWayConfig,
};
use crate::state::{make_pulse_train, pdc_state, AmplitudeSpec, PhaseSpec, PulseTrain, TwoPhotonState};

pub const DEFAULT_SEED: u64 = 0x5eed_7131;

/// Deliberate defects for checking that the oracles can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Negate the `e^{2i delta}` (both-long) path in the reference transfer.
    SignFlip,
}

pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Joint transfer of both photons by listing the four short/long path
/// combinations per source pair.
fn enumerate_joint_paths(train: &PulseTrain, delta: f64, fault: Option<Fault>) -> TwoPhotonState {
    let s = Complex64::new(0.5, 0.0);
    let l = Complex64::from_polar(0.5, delta);
    let both_long = match fault {
        Some(Fault::SignFlip) => -(l * l),
        None => l * l,
    };
    let mut out = TwoPhotonState::empty();
    for j in 1..=train.dimension() {
        let c = train.bin_amplitude(j);
        out.accumulate((j, j), c * s * s);
        out.accumulate((j + 1, j), c * l * s);
        out.accumulate((j, j + 1), c * s * l);
        out.accumulate((j + 1, j + 1), c * both_long);
    }
    out
}

fn max_map_difference(a: &TwoPhotonState, b: &TwoPhotonState) -> f64 {
    a.iter()
        .map(|(k, v)| (v - b.amplitude(k)).norm())
        .chain(b.iter().map(|(k, v)| (v - a.amplitude(k)).norm()))
        .fold(0.0, f64::max)
}

fn random_train(rng: &mut ChaCha8Rng) -> PulseTrain {
    let d = rng.random_range(1..=6);
    let amps: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let phases: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..TAU)).collect();
    make_pulse_train(d, AmplitudeSpec::Explicit(amps), PhaseSpec::Explicit(phases), 13.0).expect("valid random train")
}

fn enumeration(seed: u64, fault: Option<Fault>) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trains: Vec<PulseTrain> = (1..=6).map(|d| PulseTrain::uniform(d, 13.0).expect("d >= 1")).collect();
    trains.extend((0..20).map(|_| random_train(&mut rng)));
    let mut worst = 0.0f64;
    for train in &trains {
        for _ in 0..8 {
            let delta = rng.random_range(0.0..TAU);
            let got = apply_two_way(&pdc_state(train), &TwoWayConfig::with_delta(delta));
            worst = worst.max(max_map_difference(&got, &enumerate_joint_paths(train, delta, fault)));
        }
    }
    PropertyOutcome {
        name: "two-way transfer matches joint-path enumeration (D <= 6)",
        passed: worst <= 1e-12,
        detail: format!("max deviation {worst:.3e}, tolerance 1e-12"),
    }
}

fn series_vs_closed(seed: u64) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t2 = rng.random_range(0.0..=0.95);
        let phi = rng.random_range(0.0..TAU);
        let mut cfg = LoopConfig::new(t2, phi, 0.0);
        cfg.max_loops = loops_for_tolerance(t2, 1e-13);
        worst = worst.max((fp_coincidence_series(&cfg) - fp_coincidence_closed(&cfg)).abs());
    }
    PropertyOutcome {
        name: "loop series matches closed form (t2 <= 0.95)",
        passed: worst <= 1e-10,
        detail: format!("max deviation {worst:.3e}, tolerance 1e-10"),
    }
}

fn loop_unitarity() -> PropertyOutcome {
    let mut worst = 0.0f64;
    for t2 in [0.01, 1.0 / 3.0, 0.9] {
        let cfg = LoopConfig::new(t2, 0.7, 0.0);
        let sum: f64 = (0..=500).map(|n| loop_exit_amplitude(n, &cfg, Arm::A).norm_sqr()).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    PropertyOutcome {
        name: "single-photon loop exit probabilities sum to 1",
        passed: worst <= 1e-10,
        detail: format!("max deviation {worst:.3e}, tolerance 1e-10"),
    }
}

fn two_way_visibility() -> PropertyOutcome {
    let grid: Vec<f64> = (0..64).map(|k| PI * k as f64 / 64.0).collect();
    let mut worst = 0.0f64;
    for d in 2..=12usize {
        let train = PulseTrain::uniform(d, 13.0).expect("d >= 1");
        for (discard, expected) in [(false, (d - 1) as f64 / d as f64), (true, 1.0)] {
            let curve = grid.iter().map(|&delta| {
                crate::analyzers::coincidence_probability_two_way(&train, delta, discard).expect("valid train")
            });
            worst = worst.max((fringe_contrast(curve) - expected).abs());
        }
    }
    PropertyOutcome {
        name: "uniform-train fringe contrast is (D-1)/D, or 1 without edges",
        passed: worst <= 1e-12,
        detail: format!("max deviation {worst:.3e}, tolerance 1e-12"),
    }
}

fn loop_optimum() -> PropertyOutcome {
    let v = fp_visibility(1.0 / 3.0, 64).unwrap_or(f64::NAN);
    PropertyOutcome {
        name: "loop visibility is 1 at t2 = 1/3",
        passed: (v - 1.0).abs() <= 1e-9,
        detail: format!("visibility {v:.17}"),
    }
}

pub fn run_properties(seed: u64, fault: Option<Fault>) -> Vec<PropertyOutcome> {
    vec![enumeration(seed, fault), series_vs_closed(seed), loop_unitarity(), two_way_visibility(), loop_optimum()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pass_without_fault() {
        for seed in [DEFAULT_SEED, 1, 2] {
            for p in run_properties(seed, None) {
                assert!(p.passed, "{}: {}", p.name, p.detail);
            }
        }
    }

    #[test]
    fn sign_flip_is_caught() {
        let out = run_properties(DEFAULT_SEED, Some(Fault::SignFlip));
        assert!(!out[0].passed);
        assert!(out[1..].iter().all(|p| p.passed));
    }
}
