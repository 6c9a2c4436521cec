//! Pump pulse trains and two-photon time-bin states.
//!
//! Time bins are 1-based: the first pump pulse defines bin 1 at t = 0 and
//! bin `j` sits at `(j - 1) * bin_spacing_ns`. Analyzers may push photons
//! past the last pump bin, so state maps are not limited to `1..=D`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Laser repetition period of the reference setup, in ns.
pub const DEFAULT_BIN_SPACING_NS: f64 = 13.0;

/// Amplitudes below this magnitude are dropped from a [`TwoPhotonState`].
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-15;

/// Sum-of-squares tolerance below which an amplitude vector is treated as
/// already normalized and left untouched.
const NORM_TOLERANCE: f64 = 1e-12;

/// Inputs that move by more than this under renormalization are flagged.
const RENORM_FLAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeSpec {
    /// `c_j = 1/sqrt(D)` for every pulse.
    Uniform,
    /// Nonnegative weights, renormalized to unit sum of squares.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    /// All pulse phases zero.
    Constant,
    Explicit(Vec<f64>),
}

/// A train of `D` mutually coherent pump pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    bin_spacing_ns: f64,
    renormalized: bool,
}

impl PulseTrain {
    /// Uniform, constant-phase train.
    pub fn uniform(dimension: usize, bin_spacing_ns: f64) -> Result<Self> {
        make_pulse_train(dimension, AmplitudeSpec::Uniform, PhaseSpec::Constant, bin_spacing_ns)
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn bin_spacing_ns(&self) -> f64 {
        self.bin_spacing_ns
    }

    /// True when explicit amplitudes had to be rescaled by more than 1e-9.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// Complex pump amplitude `c_j e^{i phi_j}` of 1-based bin `j`.
    pub fn bin_amplitude(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.amplitudes[j - 1], self.phases[j - 1])
    }

    /// Returns the same train with its amplitudes passed through the
    /// normalization step again.
    pub fn renormalize(&self) -> Self {
        let (amplitudes, changed) = normalize(&self.amplitudes);
        PulseTrain { amplitudes, renormalized: self.renormalized || changed, ..self.clone() }
    }
}

fn normalize(weights: &[f64]) -> (Vec<f64>, bool) {
    let sum_sq: f64 = weights.iter().map(|c| c * c).sum();
    if (sum_sq - 1.0).abs() <= NORM_TOLERANCE {
        return (weights.to_vec(), false);
    }
    let norm = sum_sq.sqrt();
    let out: Vec<f64> = weights.iter().map(|c| c / norm).collect();
    let changed = weights.iter().zip(&out).any(|(a, b)| (a - b).abs() > RENORM_FLAG_TOLERANCE);
    (out, changed)
}

/// Builds a validated pulse train.
///
/// Explicit amplitudes are renormalized to unit sum of squares; the result
/// records whether that changed any entry by more than 1e-9.
pub fn make_pulse_train(
    dimension: usize,
    amplitudes: AmplitudeSpec,
    phases: PhaseSpec,
    bin_spacing_ns: f64,
) -> Result<PulseTrain> {
    if dimension == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(bin_spacing_ns.is_finite() && bin_spacing_ns > 0.0) {
        return Err(Error::invalid("bin_spacing_ns", format!("must be positive, got {bin_spacing_ns}")));
    }

    let (amplitudes, renormalized) = match amplitudes {
        AmplitudeSpec::Uniform => (vec![(1.0 / dimension as f64).sqrt(); dimension], false),
        AmplitudeSpec::Explicit(c) => {
            if c.len() != dimension {
                return Err(Error::LengthMismatch { what: "amplitudes", expected: dimension, got: c.len() });
            }
            if let Some(bad) = c.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::invalid("amplitudes", format!("entries must be finite and nonnegative, got {bad}")));
            }
            if c.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroNorm);
            }
            normalize(&c)
        }
    };

    let phases = match phases {
        PhaseSpec::Constant => vec![0.0; dimension],
        PhaseSpec::Explicit(p) => {
            if p.len() != dimension {
                return Err(Error::LengthMismatch { what: "phases", expected: dimension, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("phases", "entries must be finite"));
            }
            p
        }
    };

    Ok(PulseTrain { amplitudes, phases, bin_spacing_ns, renormalized })
}

/// Pair of 1-based time bins `(j_a, j_b)` for the two down-converted photons.
pub type BinPair = (usize, usize);

/// Sparse complex amplitude map over joint time-bin pairs.
///
/// Entries with magnitude below the prune threshold are never stored. The
/// norm may be below one after a lossy analyzer.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    amps: BTreeMap<BinPair, Complex64>,
    prune_threshold: f64,
}

impl Default for TwoPhotonState {
    fn default() -> Self {
        Self::empty()
    }
}

impl TwoPhotonState {
    pub fn empty() -> Self {
        Self::with_prune_threshold(DEFAULT_PRUNE_THRESHOLD)
    }

    pub fn with_prune_threshold(prune_threshold: f64) -> Self {
        TwoPhotonState { amps: BTreeMap::new(), prune_threshold }
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    /// Adds `amp` coherently to the entry at `pair`.
    pub fn accumulate(&mut self, pair: BinPair, amp: Complex64) {
        *self.amps.entry(pair).or_default() += amp;
    }

    /// Drops every entry whose magnitude is below the prune threshold.
    pub fn prune(&mut self) {
        let threshold = self.prune_threshold;
        self.amps.retain(|_, a| a.norm() >= threshold);
    }

    /// Builds a pruned state from `(pair, amplitude)` contributions, summing
    /// repeated pairs.
    pub fn from_contributions<I>(contributions: I) -> Self
    where
        I: IntoIterator<Item = (BinPair, Complex64)>,
    {
        let mut state = Self::empty();
        for (pair, amp) in contributions {
            state.accumulate(pair, amp);
        }
        state.prune();
        state
    }

    pub fn amplitude(&self, pair: BinPair) -> Complex64 {
        self.amps.get(&pair).copied().unwrap_or_default()
    }

    /// Entries in ascending `(j_a, j_b)` order.
    pub fn iter(&self) -> impl Iterator<Item = (BinPair, Complex64)> + '_ {
        self.amps.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude-level superposition `self + other`.
    pub fn superpose(&self, other: &TwoPhotonState) -> TwoPhotonState {
        let mut out = self.clone();
        for (pair, amp) in other.iter() {
            out.accumulate(pair, amp);
        }
        out.prune();
        out
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> TwoPhotonState {
        let mut out = TwoPhotonState::with_prune_threshold(self.prune_threshold);
        for (pair, amp) in self.iter() {
            out.accumulate(pair, amp * factor);
        }
        out.prune();
        out
    }

    /// Largest bin index present on either photon, or 0 when empty.
    pub fn max_bin(&self) -> usize {
        self.amps.keys().map(|(a, b)| (*a).max(*b)).max().unwrap_or(0)
    }
}

/// The down-converted state `sum_j c_j e^{i phi_j} |j, j>`.
pub fn pdc_state(train: &PulseTrain) -> TwoPhotonState {
    TwoPhotonState::from_contributions((1..=train.dimension()).map(|j| ((j, j), train.bin_amplitude(j))))
}

/// Sum of squared amplitude magnitudes.
pub fn total_probability(state: &TwoPhotonState) -> f64 {
    state.iter().map(|(_, a)| a.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn uniform_two_bin_train() {
        let t = PulseTrain::uniform(2, 13.0).unwrap();
        assert_eq!(t.amplitudes(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert_eq!(t.phases(), &[0.0, 0.0]);
        assert!(!t.was_renormalized());
    }

    #[test]
    fn uniform_eleven_bins() {
        let t = PulseTrain::uniform(11, DEFAULT_BIN_SPACING_NS).unwrap();
        for c in t.amplitudes() {
            assert_abs_diff_eq!(*c, 1.0 / 11f64.sqrt(), epsilon = 1e-15);
        }
        assert_eq!(t.bin_spacing_ns(), 13.0);
    }

    #[test]
    fn explicit_weights_are_renormalized() {
        let t = make_pulse_train(3, AmplitudeSpec::Explicit(vec![2.0, 1.0, 1.0]), PhaseSpec::Constant, 13.0).unwrap();
        let s6 = 6f64.sqrt();
        assert_abs_diff_eq!(t.amplitudes()[0], 2.0 / s6, epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitudes()[1], 1.0 / s6, epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitudes()[2], 1.0 / s6, epsilon = 1e-15);
        assert!(t.was_renormalized());
    }

    #[test]
    fn rejects_bad_trains() {
        assert_eq!(PulseTrain::uniform(0, 13.0), Err(Error::ZeroDimension));
        assert_eq!(
            make_pulse_train(2, AmplitudeSpec::Explicit(vec![0.0, 0.0]), PhaseSpec::Constant, 13.0),
            Err(Error::ZeroNorm)
        );
        assert!(matches!(
            make_pulse_train(2, AmplitudeSpec::Explicit(vec![1.0]), PhaseSpec::Constant, 13.0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            make_pulse_train(2, AmplitudeSpec::Uniform, PhaseSpec::Explicit(vec![0.0; 3]), 13.0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(make_pulse_train(2, AmplitudeSpec::Explicit(vec![-1.0, 1.0]), PhaseSpec::Constant, 13.0).is_err());
        assert!(PulseTrain::uniform(2, 0.0).is_err());
    }

    #[test]
    fn pdc_single_bin() {
        let s = pdc_state(&PulseTrain::uniform(1, 13.0).unwrap());
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude((1, 1)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn pdc_two_bins() {
        let s = pdc_state(&PulseTrain::uniform(2, 13.0).unwrap());
        assert_abs_diff_eq!(s.amplitude((1, 1)).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude((2, 2)).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn pdc_weighted_with_phase() {
        let t = make_pulse_train(
            3,
            AmplitudeSpec::Explicit(vec![2.0, 1.0, 1.0]),
            PhaseSpec::Explicit(vec![0.0, FRAC_PI_2, 0.0]),
            13.0,
        )
        .unwrap();
        let s = pdc_state(&t);
        let s6 = 6f64.sqrt();
        let expect = [
            ((1, 1), Complex64::new(2.0 / s6, 0.0)),
            ((2, 2), Complex64::new(0.0, 1.0 / s6)),
            ((3, 3), Complex64::new(1.0 / s6, 0.0)),
        ];
        for (pair, want) in expect {
            assert!((s.amplitude(pair) - want).norm() < 1e-15, "{pair:?}");
        }
    }

    #[test]
    fn total_probability_cases() {
        let s = pdc_state(&PulseTrain::uniform(5, 13.0).unwrap());
        assert_abs_diff_eq!(total_probability(&s), 1.0, epsilon = 1e-12);
        assert_eq!(total_probability(&TwoPhotonState::empty()), 0.0);
    }

    #[test]
    fn pruning_drops_tiny_entries() {
        let mut s = TwoPhotonState::empty();
        s.accumulate((1, 1), Complex64::new(1e-16, 0.0));
        s.accumulate((2, 2), Complex64::new(0.5, 0.0));
        s.accumulate((3, 3), Complex64::new(0.25, 0.0));
        s.accumulate((3, 3), Complex64::new(-0.25, 0.0));
        s.prune();
        assert_eq!(s.len(), 1);
        assert_eq!(s.max_bin(), 2);
    }

    proptest! {
        #[test]
        fn pdc_is_diagonal_and_normalized(
            d in 1usize..=64,
            seed_weights in proptest::collection::vec(0.01f64..10.0, 64),
            seed_phases in proptest::collection::vec(-10.0f64..10.0, 64),
        ) {
            let t = make_pulse_train(
                d,
                AmplitudeSpec::Explicit(seed_weights[..d].to_vec()),
                PhaseSpec::Explicit(seed_phases[..d].to_vec()),
                13.0,
            ).unwrap();
            let s = pdc_state(&t);
            prop_assert!(s.iter().all(|((a, b), _)| a == b));
            prop_assert!((total_probability(&s) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn renormalization_is_idempotent(
            d in 1usize..=64,
            w in proptest::collection::vec(0.0f64..100.0, 64),
        ) {
            let mut w = w[..d].to_vec();
            w[0] += 0.5;
            let once = make_pulse_train(d, AmplitudeSpec::Explicit(w), PhaseSpec::Constant, 13.0).unwrap();
            let twice = once.renormalize();
            prop_assert_eq!(once.amplitudes(), twice.amplitudes());
            let rebuilt = make_pulse_train(
                d, AmplitudeSpec::Explicit(once.amplitudes().to_vec()), PhaseSpec::Constant, 13.0
            ).unwrap();
            prop_assert_eq!(once.amplitudes(), rebuilt.amplitudes());
            prop_assert!(!rebuilt.was_renormalized());
        }
    }
}
