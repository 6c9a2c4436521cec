use serde::Serialize;

use crate::analyzers::two_way::coincidence_probability_two_way;
use crate::error::{Error, Result};
use crate::state::PulseTrain;

/// Highest two-way fringe visibility for a uniform train of `dimension`
/// pulses with the edge bins kept: of the `2D` processes reaching
/// `tau = 0`, two have no indistinguishable partner, giving `(D - 1) / D`.
pub fn max_visibility(dimension: usize) -> Result<f64> {
    if dimension == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok((dimension - 1) as f64 / dimension as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionBound {
    /// `1 / (1 - V)`.
    pub bound: f64,
    /// Largest whole dimension certified by `bound`.
    pub claimed_dimension: u64,
    /// Bound at `V - V_err`.
    pub lower: f64,
    /// Bound at `V + V_err`; `None` when `V + V_err >= 1`.
    pub upper: Option<f64>,
}

impl DimensionBound {
    pub fn is_upper_unbounded(&self) -> bool {
        self.upper.is_none()
    }
}

/// Relative slack when flooring the bound, so that `V = (D-1)/D` certifies
/// exactly `D` despite rounding in `1 - V`.
const FLOOR_SLACK: f64 = 1e-9;

/// Minimum entanglement dimension compatible with a measured visibility.
pub fn dimension_bound(visibility: f64, visibility_err: f64) -> Result<DimensionBound> {
    if !visibility.is_finite() || visibility < 0.0 {
        return Err(Error::invalid("visibility", format!("must lie in [0, 1), got {visibility}")));
    }
    if visibility >= 1.0 {
        return Err(Error::VisibilityTooHigh(visibility));
    }
    if !(visibility_err.is_finite() && visibility_err >= 0.0) {
        return Err(Error::invalid("visibility_err", format!("must be nonnegative, got {visibility_err}")));
    }
    let bound = 1.0 / (1.0 - visibility);
    let claimed_dimension = (bound * (1.0 + FLOOR_SLACK)).floor() as u64;
    let lower = 1.0 / (1.0 - visibility + visibility_err);
    let upper = (visibility + visibility_err < 1.0).then(|| 1.0 / (1.0 - visibility - visibility_err));
    Ok(DimensionBound { bound, claimed_dimension, lower, upper })
}

/// `(max - min) / (max + min)` of a sampled curve; 0 for an all-zero curve.
pub fn fringe_contrast(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > 0.0) {
        return 0.0;
    }
    (hi - lo) / (hi + lo)
}

/// Analytic `tau = 0` coincidence probability of the two-way analyzer over a
/// grid of long-arm phases.
pub fn predicted_fringe(train: &PulseTrain, discard_edges: bool, delta_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    delta_grid.iter().map(|&d| Ok((d, coincidence_probability_two_way(train, d, discard_edges)?))).collect()
}

/// `n` evenly spaced phases in `[0, pi)`, which covers one full period of
/// the `cos(2 delta)` fringe and contains `pi/2` whenever `n` is even.
pub fn half_turn_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| std::f64::consts::PI * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_pulse_train, AmplitudeSpec, PhaseSpec};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn max_visibility_values() {
        assert_eq!(max_visibility(11).unwrap(), 10.0 / 11.0);
        assert_eq!(max_visibility(1).unwrap(), 0.0);
        assert_eq!(max_visibility(2).unwrap(), 0.5);
        assert!(max_visibility(0).is_err());
    }

    #[test]
    fn dimension_bound_values() {
        let b = dimension_bound(0.91, 0.06).unwrap();
        assert_abs_diff_eq!(b.bound, 100.0 / 9.0, epsilon = 1e-12);
        assert_eq!(b.claimed_dimension, 11);
        assert_abs_diff_eq!(b.lower, 1.0 / 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(b.upper.unwrap(), 1.0 / 0.03, epsilon = 1e-9);
        assert!(dimension_bound(0.95, 0.06).unwrap().is_upper_unbounded());
        assert!(dimension_bound(0.94, 0.06).unwrap().is_upper_unbounded());

        let b = dimension_bound(0.0, 0.0).unwrap();
        assert_eq!((b.bound, b.claimed_dimension), (1.0, 1));
        let b = dimension_bound(0.5, 0.1).unwrap();
        assert_eq!((b.bound, b.claimed_dimension), (2.0, 2));
        assert_abs_diff_eq!(b.upper.unwrap(), 2.5, epsilon = 1e-12);

        assert_eq!(dimension_bound(1.0, 0.0), Err(Error::VisibilityTooHigh(1.0)));
        assert!(dimension_bound(-0.1, 0.0).is_err());
    }

    #[test]
    fn uniform_fringes() {
        let grid = half_turn_grid(64);
        let train = PulseTrain::uniform(11, 13.0).unwrap();
        let curve = predicted_fringe(&train, false, &grid).unwrap();
        assert_abs_diff_eq!(fringe_contrast(curve.iter().map(|p| p.1)), 10.0 / 11.0, epsilon = 1e-12);
        let curve = predicted_fringe(&train, true, &grid).unwrap();
        assert_abs_diff_eq!(fringe_contrast(curve.iter().map(|p| p.1)), 1.0, epsilon = 1e-12);
    }

    /// Diagonal amplitude at output bin j is `s^2 (A_j + e^{2i delta} A_{j-1})`,
    /// summed here directly from the pump amplitudes.
    fn diagonal_oracle(train: &PulseTrain, delta: f64) -> f64 {
        let d = train.dimension();
        let pump = |j: usize| if (1..=d).contains(&j) { train.bin_amplitude(j) } else { Complex64::new(0.0, 0.0) };
        (1..=d + 1).map(|j| (0.25 * (pump(j) + Complex64::from_polar(1.0, 2.0 * delta) * pump(j - 1))).norm_sqr()).sum()
    }

    #[test]
    fn weighted_train_matches_oracle() {
        let train = make_pulse_train(3, AmplitudeSpec::Explicit(vec![2.0, 1.0, 1.0]), PhaseSpec::Constant, 13.0).unwrap();
        let grid = half_turn_grid(200);
        let curve = predicted_fringe(&train, false, &grid).unwrap();
        for (delta, p) in &curve {
            assert_abs_diff_eq!(*p, diagonal_oracle(&train, *delta), epsilon = 1e-15);
        }
        // contrast is the neighbour overlap c1 c2 + c2 c3 = (2 + 1) / 6
        let v = fringe_contrast(curve.iter().map(|p| p.1));
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn weighted_four_pulse_train_contrast() {
        let train =
            make_pulse_train(4, AmplitudeSpec::Explicit(vec![1.0, 2.0, 3.0, 1.0]), PhaseSpec::Constant, 13.0).unwrap();
        let c = train.amplitudes();
        let overlap: f64 = c.windows(2).map(|w| w[0] * w[1]).sum();
        let curve = predicted_fringe(&train, false, &half_turn_grid(64)).unwrap();
        assert_abs_diff_eq!(fringe_contrast(curve.iter().map(|p| p.1)), overlap, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn max_visibility_increases(a in 1usize..10_000, b in 1usize..10_000) {
            prop_assume!(a != b);
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            prop_assert!(max_visibility(hi).unwrap() > max_visibility(lo).unwrap());
        }

        #[test]
        fn bound_inverts_max_visibility(d in 2usize..100_000) {
            let b = dimension_bound(max_visibility(d).unwrap(), 0.0).unwrap();
            prop_assert!((b.bound - d as f64).abs() <= 1e-9 * d as f64);
            prop_assert_eq!(b.claimed_dimension, d as u64);
        }
    }
}
