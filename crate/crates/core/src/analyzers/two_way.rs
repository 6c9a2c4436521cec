//! Unbalanced two-way (Michelson) analyzer with a one-bin delay.
//!
//! Per photon, the monitored output port maps bin `j` to
//! `s |j> + l e^{i delta} |j+1>`, where `s = l = per_path_amplitude`.
//! The two photons pass through the same interferometer, so the pair map is
//! the tensor product of two single-photon passes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{pdc_state, total_probability, PulseTrain, TwoPhotonState};

/// 50/50 beam splitter traversed twice.
pub const DEFAULT_PER_PATH_AMPLITUDE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayConfig {
    /// Phase acquired in the long arm, radians.
    pub delta: f64,
    pub per_path_amplitude: f64,
    /// Drop the first and last output bins (the two processes without an
    /// interfering partner).
    pub discard_edges: bool,
}

impl Default for TwoWayConfig {
    fn default() -> Self {
        TwoWayConfig { delta: 0.0, per_path_amplitude: DEFAULT_PER_PATH_AMPLITUDE, discard_edges: false }
    }
}

impl TwoWayConfig {
    pub fn with_delta(delta: f64) -> Self {
        TwoWayConfig { delta, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        // short and long paths share the amplitude; s + l <= 1 for a passive device
        if !(self.per_path_amplitude > 0.0 && self.per_path_amplitude <= 0.5) {
            return Err(Error::invalid(
                "per_path_amplitude",
                format!("must lie in (0, 1/2], got {}", self.per_path_amplitude),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Photon {
    A,
    B,
}

fn single_photon_pass(state: &TwoPhotonState, photon: Photon, short: Complex64, long: Complex64) -> TwoPhotonState {
    let mut out = TwoPhotonState::with_prune_threshold(state.prune_threshold());
    for ((ja, jb), amp) in state.iter() {
        let delayed = match photon {
            Photon::A => (ja + 1, jb),
            Photon::B => (ja, jb + 1),
        };
        out.accumulate((ja, jb), amp * short);
        out.accumulate(delayed, amp * long);
    }
    out
}

/// Propagates both photons through the monitored port of the analyzer.
///
/// Output norm never exceeds the input norm; the remainder leaves through
/// the unmonitored port.
pub fn apply_two_way(state: &TwoPhotonState, cfg: &TwoWayConfig) -> TwoPhotonState {
    let short = Complex64::new(cfg.per_path_amplitude, 0.0);
    let long = Complex64::from_polar(cfg.per_path_amplitude, cfg.delta);
    let after_a = single_photon_pass(state, Photon::A, short, long);
    let mut out = single_photon_pass(&after_a, Photon::B, short, long);
    out.prune();
    out
}

/// Diagonal amplitudes `j -> amp(j, j)`: the detections with `tau = 0`.
pub fn postselect_tau0(state: &TwoPhotonState) -> BTreeMap<usize, Complex64> {
    state.iter().filter(|((a, b), _)| a == b).map(|((a, _), amp)| (a, amp)).collect()
}

/// Output bins kept by the edge switches, for a train of `dimension` pulses.
pub fn retained_bins(dimension: usize, discard_edges: bool) -> Result<std::ops::RangeInclusive<usize>> {
    if discard_edges {
        if dimension < 2 {
            return Err(Error::NoInteriorBins(dimension));
        }
        Ok(2..=dimension)
    } else {
        Ok(1..=dimension + 1)
    }
}

/// `tau = 0` coincidence probability at the monitored port, using the
/// default 1/2 per-path convention.
pub fn coincidence_probability_two_way(train: &PulseTrain, delta: f64, discard_edges: bool) -> Result<f64> {
    let cfg = TwoWayConfig { delta, discard_edges, ..Default::default() };
    coincidence_probability_with(train, &cfg)
}

pub fn coincidence_probability_with(train: &PulseTrain, cfg: &TwoWayConfig) -> Result<f64> {
    cfg.validate()?;
    let keep = retained_bins(train.dimension(), cfg.discard_edges)?;
    let out = apply_two_way(&pdc_state(train), cfg);
    Ok(postselect_tau0(&out).into_iter().filter(|(j, _)| keep.contains(j)).map(|(_, a)| a.norm_sqr()).sum())
}

/// Probability that both photons leave through the monitored port.
pub fn monitored_probability(train: &PulseTrain, cfg: &TwoWayConfig) -> f64 {
    total_probability(&apply_two_way(&pdc_state(train), cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_pulse_train, AmplitudeSpec, PhaseSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn one_pair() -> TwoPhotonState {
        TwoPhotonState::from_contributions([((1, 1), Complex64::new(1.0, 0.0))])
    }

    /// Direct enumeration of the four joint paths of every input pair.
    fn enumerate_paths(state: &TwoPhotonState, cfg: &TwoWayConfig) -> TwoPhotonState {
        let s = cfg.per_path_amplitude;
        let mut out = TwoPhotonState::empty();
        for ((ja, jb), amp) in state.iter() {
            for da in 0..2usize {
                for db in 0..2usize {
                    let phase = Complex64::from_polar(1.0, cfg.delta * (da + db) as f64);
                    out.accumulate((ja + da, jb + db), amp * s * s * phase);
                }
            }
        }
        out.prune();
        out
    }

    #[test]
    fn single_pair_at_zero_phase() {
        let out = apply_two_way(&one_pair(), &TwoWayConfig::with_delta(0.0));
        assert_eq!(out.len(), 4);
        for pair in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!((out.amplitude(pair) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
        let diag = postselect_tau0(&out);
        assert_eq!(diag.len(), 2);
        assert!((diag[&1] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((diag[&2] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn interior_bin_factor_for_two_pulses() {
        let train = PulseTrain::uniform(2, 13.0).unwrap();
        for delta in [0.0, 0.3, 1.1, 2.9] {
            let out = apply_two_way(&pdc_state(&train), &TwoWayConfig::with_delta(delta));
            let want = 0.25 * FRAC_1_SQRT_2 * (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * delta));
            assert!((out.amplitude((2, 2)) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_wave_cancels_interior_diagonal() {
        let train = PulseTrain::uniform(3, 13.0).unwrap();
        let cfg = TwoWayConfig::with_delta(FRAC_PI_2);
        let out = apply_two_way(&pdc_state(&train), &cfg);
        assert!(out.amplitude((2, 2)).norm() < 1e-12);
        assert!(out.amplitude((3, 3)).norm() < 1e-12);
        let diag = postselect_tau0(&out);
        let surviving: Vec<usize> = diag.iter().filter(|(_, a)| a.norm() > 1e-12).map(|(j, _)| *j).collect();
        assert_eq!(surviving, vec![1, 4]);
        let oracle = enumerate_paths(&pdc_state(&train), &cfg);
        for (pair, amp) in oracle.iter() {
            assert!((amp - out.amplitude(pair)).norm() < 1e-15);
        }
    }

    #[test]
    fn diagonal_structure_for_uniform_trains() {
        for d in [2usize, 5, 11] {
            let delta = 0.37;
            let train = PulseTrain::uniform(d, 13.0).unwrap();
            let diag = postselect_tau0(&apply_two_way(&pdc_state(&train), &TwoWayConfig::with_delta(delta)));
            let k = 0.25 / (d as f64).sqrt();
            let e2 = Complex64::from_polar(1.0, 2.0 * delta);
            assert_eq!(diag.len(), d + 1);
            assert!((diag[&1] - k).norm() < 1e-15);
            for j in 2..=d {
                assert!((diag[&j] - k * (1.0 + e2)).norm() < 1e-15);
            }
            assert!((diag[&(d + 1)] - k * e2).norm() < 1e-15);
        }
    }

    #[test]
    fn off_diagonal_only_state_has_no_tau0_support() {
        let s = TwoPhotonState::from_contributions([((1, 2), Complex64::new(1.0, 0.0))]);
        assert!(postselect_tau0(&s).is_empty());
    }

    #[test]
    fn monitored_norm_for_two_pulses() {
        // 8 paths of weight 1/32 each, plus the (2,2) cross term 2 cos(2 delta)/32.
        let train = PulseTrain::uniform(2, 13.0).unwrap();
        for delta in [0.0, 0.4, FRAC_PI_2, 2.0] {
            let p = monitored_probability(&train, &TwoWayConfig::with_delta(delta));
            assert_abs_diff_eq!(p, (8.0 + 2.0 * (2.0 * delta).cos()) / 32.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_pulse_has_no_fringe() {
        let train = PulseTrain::uniform(1, 13.0).unwrap();
        let p0 = coincidence_probability_two_way(&train, 0.0, false).unwrap();
        for k in 1..50 {
            let delta = PI * k as f64 / 50.0;
            let p = coincidence_probability_two_way(&train, delta, false).unwrap();
            assert_abs_diff_eq!(p, p0, epsilon = 1e-12);
        }
    }

    #[test]
    fn discard_edges_needs_two_pulses() {
        let train = PulseTrain::uniform(1, 13.0).unwrap();
        assert_eq!(coincidence_probability_two_way(&train, 0.0, true), Err(Error::NoInteriorBins(1)));
    }

    #[test]
    fn config_validation() {
        assert!(TwoWayConfig { per_path_amplitude: 0.0, ..Default::default() }.validate().is_err());
        assert!(TwoWayConfig { per_path_amplitude: 1.5, ..Default::default() }.validate().is_err());
        assert!(TwoWayConfig { per_path_amplitude: 0.6, ..Default::default() }.validate().is_err());
        assert!(TwoWayConfig { delta: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(TwoWayConfig::default().validate().is_ok());
    }

    fn arb_state() -> impl Strategy<Value = TwoPhotonState> {
        proptest::collection::vec(((1usize..6, 1usize..6), (-1.0f64..1.0, -1.0f64..1.0)), 1..8).prop_map(|v| {
            TwoPhotonState::from_contributions(v.into_iter().map(|(p, (re, im))| (p, Complex64::new(re, im))))
        })
    }

    proptest! {
        #[test]
        fn linear_in_the_input_state(a in arb_state(), b in arb_state(), delta in -PI..PI, s in 0.05f64..1.0) {
            let cfg = TwoWayConfig { delta, per_path_amplitude: s, discard_edges: false };
            let lhs = apply_two_way(&a.superpose(&b), &cfg);
            let rhs = apply_two_way(&a, &cfg).superpose(&apply_two_way(&b, &cfg));
            for (pair, amp) in lhs.iter().chain(rhs.iter()) {
                prop_assert!((lhs.amplitude(pair) - rhs.amplitude(pair)).norm() < 1e-12, "{pair:?} {amp}");
            }
        }

        #[test]
        fn norm_never_grows(a in arb_state(), delta in -PI..PI) {
            let out = apply_two_way(&a, &TwoWayConfig::with_delta(delta));
            prop_assert!(total_probability(&out) <= total_probability(&a) + 1e-12);
        }

        #[test]
        fn matches_joint_path_enumeration(
            d in 1usize..=6,
            w in proptest::collection::vec(0.05f64..2.0, 6),
            ph in proptest::collection::vec(-PI..PI, 6),
            delta in -PI..PI,
        ) {
            let train = make_pulse_train(
                d, AmplitudeSpec::Explicit(w[..d].to_vec()), PhaseSpec::Explicit(ph[..d].to_vec()), 13.0,
            ).unwrap();
            let cfg = TwoWayConfig::with_delta(delta);
            let got = apply_two_way(&pdc_state(&train), &cfg);
            let want = enumerate_paths(&pdc_state(&train), &cfg);
            for (pair, _) in got.iter().chain(want.iter()) {
                prop_assert!((got.amplitude(pair) - want.amplitude(pair)).norm() < 1e-12);
            }
        }
    }
}
