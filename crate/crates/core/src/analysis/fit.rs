//! Weighted least-squares fits of coincidence fringes.
//!
//! The model is `baseline * (1 + V cos(2 delta + phase_offset))`. With the
//! fringe period fixed it is linear in `(a, b, c)` for
//! `a + b cos(2 delta) + c sin(2 delta)`, so the fit is a single normal-
//! equation solve and the parameter covariance comes out exactly.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringePoint {
    pub delta: f64,
    pub count: f64,
    /// One-sigma error of `count`; must be positive.
    pub count_err: f64,
}

impl FringePoint {
    /// Point with Poisson error `sqrt(count)`, floored at 1.
    pub fn poisson(delta: f64, count: f64) -> Self {
        FringePoint { delta, count, count_err: count.max(1.0).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    /// Not clamped to 1; noisy data near full contrast can exceed it.
    pub visibility: f64,
    pub visibility_err: f64,
    pub phase_offset: f64,
    pub baseline: f64,
    pub baseline_err: f64,
    /// RMS of `count - model` over the points.
    pub residual_rms: f64,
    /// Fringe frequency in `delta`; 2 unless fitted freely.
    pub frequency: f64,
    pub converged: bool,
}

const FIXED_FREQUENCY: f64 = 2.0;

fn check_points(points: &[FringePoint]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    for p in points {
        if !(p.delta.is_finite() && p.count.is_finite() && p.count >= 0.0) {
            return Err(Error::Fit(format!("invalid point at delta = {}", p.delta)));
        }
        if !(p.count_err.is_finite() && p.count_err > 0.0) {
            return Err(Error::Fit(format!("count error must be positive at delta = {}", p.delta)));
        }
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.delta), hi.max(p.delta)));
    if hi == lo {
        return Err(Error::Fit("all phase settings are equal".into()));
    }
    // half a period of cos(2 delta)
    if hi - lo < std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9) {
        return Err(Error::Fit(format!("phase span {:.4} rad covers less than half a fringe", hi - lo)));
    }
    Ok(())
}

fn linear_fit(points: &[FringePoint], frequency: f64) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for p in points {
        let (s, c) = (frequency * p.delta).sin_cos();
        let row = Vector3::new(1.0, c, s);
        let w = 1.0 / (p.count_err * p.count_err);
        normal += w * row * row.transpose();
        rhs += w * p.count * row;
    }
    let cov = normal.try_inverse().ok_or_else(|| Error::Fit("singular design: phase settings do not resolve the fringe".into()))?;
    Ok((cov * rhs, cov))
}

fn residual_rms(points: &[FringePoint], model: impl Fn(f64) -> f64) -> f64 {
    (points.iter().map(|p| (p.count - model(p.delta)).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
}

/// Converts `(a, b, c)` with covariance into visibility, phase and baseline.
fn to_fringe(params: Vector3<f64>, cov: &Matrix3<f64>) -> Result<(f64, f64, f64, f64, f64)> {
    let (a, b, c) = (params[0], params[1], params[2]);
    if !(a > 0.0) {
        return Err(Error::NoSignal(format!("fitted baseline {a} is not positive")));
    }
    let amp = b.hypot(c);
    let visibility = amp / a;
    // b = a V cos(phi), c = -a V sin(phi)
    let phase_offset = (-c).atan2(b);
    let visibility_err = if amp > 0.0 {
        let grad = Vector3::new(-amp / (a * a), b / (amp * a), c / (amp * a));
        (grad.transpose() * cov * grad)[0].max(0.0).sqrt()
    } else {
        (0.5 * (cov[(1, 1)] + cov[(2, 2)])).max(0.0).sqrt() / a
    };
    Ok((visibility, visibility_err, phase_offset, a, cov[(0, 0)].max(0.0).sqrt()))
}

/// Fits `baseline * (1 + V cos(2 delta + phase_offset))` by weighted least
/// squares, weights `1 / count_err^2`. Errors are the unscaled covariance.
pub fn fit_fringe(points: &[FringePoint]) -> Result<FitResult> {
    check_points(points)?;
    let (params, cov) = linear_fit(points, FIXED_FREQUENCY)?;
    let (visibility, visibility_err, phase_offset, baseline, baseline_err) = to_fringe(params, &cov)?;
    let rms = residual_rms(points, |d| params[0] + params[1] * (2.0 * d).cos() + params[2] * (2.0 * d).sin());
    Ok(FitResult {
        visibility,
        visibility_err,
        phase_offset,
        baseline,
        baseline_err,
        residual_rms: rms,
        frequency: FIXED_FREQUENCY,
        converged: true,
    })
}

/// Diagnostic fit with the fringe frequency free, by damped Gauss-Newton
/// started from the fixed-frequency solution. A result that fails to settle
/// within `max_iterations` is returned with `converged = false`.
pub fn fit_fringe_free_frequency(points: &[FringePoint], max_iterations: usize) -> Result<FitResult> {
    check_points(points)?;
    let (start, _) = linear_fit(points, FIXED_FREQUENCY)?;
    let mut theta = Vector4::new(start[0], start[1], start[2], FIXED_FREQUENCY);

    let chi2 = |t: &Vector4<f64>| -> f64 {
        points
            .iter()
            .map(|p| {
                let (s, c) = (t[3] * p.delta).sin_cos();
                ((p.count - (t[0] + t[1] * c + t[2] * s)) / p.count_err).powi(2)
            })
            .sum()
    };
    let normal_eq = |t: &Vector4<f64>| -> (Matrix4<f64>, Vector4<f64>) {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for p in points {
            let (s, c) = (t[3] * p.delta).sin_cos();
            let r = p.count - (t[0] + t[1] * c + t[2] * s);
            let j = Vector4::new(1.0, c, s, p.delta * (-t[1] * s + t[2] * c));
            let w = 1.0 / (p.count_err * p.count_err);
            jtj += w * j * j.transpose();
            jtr += w * r * j;
        }
        (jtj, jtr)
    };

    let mut lambda = 1e-3;
    let mut current = chi2(&theta);
    let mut converged = false;
    for _ in 0..max_iterations {
        let (jtj, jtr) = normal_eq(&theta);
        let mut damped = jtj;
        for i in 0..4 {
            damped[(i, i)] *= 1.0 + lambda;
        }
        let Some(inv) = damped.try_inverse() else { break };
        let step = inv * jtr;
        let trial = theta + step;
        let next = chi2(&trial);
        if next <= current {
            let settled = (current - next) <= 1e-12 * current.max(1.0) && step.norm() <= 1e-10 * theta.norm().max(1.0);
            theta = trial;
            current = next;
            lambda = (lambda * 0.3).max(1e-12);
            if settled {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                converged = true;
                break;
            }
        }
    }

    let (jtj, _) = normal_eq(&theta);
    let cov4 = jtj.try_inverse().ok_or_else(|| Error::Fit("singular covariance in free-frequency fit".into()))?;
    let cov3 = cov4.fixed_view::<3, 3>(0, 0).into_owned();
    let (visibility, visibility_err, phase_offset, baseline, baseline_err) =
        to_fringe(Vector3::new(theta[0], theta[1], theta[2]), &cov3)?;
    let rms = residual_rms(points, |d| theta[0] + theta[1] * (theta[3] * d).cos() + theta[2] * (theta[3] * d).sin());
    Ok(FitResult {
        visibility,
        visibility_err,
        phase_offset,
        baseline,
        baseline_err,
        residual_rms: rms,
        frequency: theta[3],
        converged,
    })
}

/// Removes a flat accidental background from a fitted fringe:
/// `V_net = V_raw * B / (B - accidentals)`, errors propagated to first order
/// with the accidental level taken as known.
pub fn net_visibility(raw: &FitResult, accidental_rate: f64) -> Result<FitResult> {
    if !(accidental_rate.is_finite() && accidental_rate >= 0.0) {
        return Err(Error::invalid("accidental_rate", format!("must be nonnegative, got {accidental_rate}")));
    }
    let b = raw.baseline;
    if accidental_rate >= b {
        return Err(Error::NoSignal(format!("accidental level {accidental_rate} is not below the baseline {b}")));
    }
    let signal = b - accidental_rate;
    let gain = b / signal;
    let d_gain_d_b = -accidental_rate / (signal * signal);
    let visibility_err = ((gain * raw.visibility_err).powi(2) + (raw.visibility * d_gain_d_b * raw.baseline_err).powi(2)).sqrt();
    Ok(FitResult { visibility: raw.visibility * gain, visibility_err, baseline: signal, ..*raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::visibility::half_turn_grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn noiseless(v: f64, offset: f64, n: usize) -> Vec<FringePoint> {
        half_turn_grid(n)
            .into_iter()
            .map(|d| FringePoint { delta: d, count: 100.0 * (1.0 + v * (2.0 * d + offset).cos()), count_err: 1.0 })
            .collect()
    }

    #[test]
    fn exact_model_roundtrip() {
        let fit = fit_fringe(&noiseless(0.8, 0.0, 12)).unwrap();
        assert_abs_diff_eq!(fit.visibility, 0.8, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.phase_offset, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.baseline, 100.0, epsilon = 1e-9);
        assert!(fit.residual_rms < 1e-9);
        assert!(fit.converged);

        let fit = fit_fringe(&noiseless(0.3, 1.1, 12)).unwrap();
        assert_abs_diff_eq!(fit.visibility, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.phase_offset, 1.1, epsilon = 1e-9);
    }

    #[test]
    fn constant_data_has_no_fringe() {
        let pts: Vec<_> = half_turn_grid(10).into_iter().map(|d| FringePoint::poisson(d, 400.0)).collect();
        let fit = fit_fringe(&pts).unwrap();
        assert!(fit.visibility <= fit.visibility_err);
        assert!(fit.visibility < 1e-12);
    }

    #[test]
    fn poisson_fringe_recovers_truth() {
        let truth = 10.0 / 11.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pts: Vec<_> = half_turn_grid(12)
            .into_iter()
            .map(|d| {
                let mean = 1e4 * (1.0 + truth * (2.0 * d).cos());
                FringePoint::poisson(d, Poisson::new(mean).unwrap().sample(&mut rng))
            })
            .collect();
        let fit = fit_fringe(&pts).unwrap();
        assert!((fit.visibility - truth).abs() < 3.0 * fit.visibility_err, "{fit:?}");
        assert!(fit.visibility_err < 0.01);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let same: Vec<_> = (0..5).map(|_| FringePoint::poisson(0.3, 10.0)).collect();
        assert!(matches!(fit_fringe(&same), Err(Error::Fit(_))));
        assert!(matches!(fit_fringe(&noiseless(0.5, 0.0, 3)), Err(Error::Fit(_))));
        let narrow: Vec<_> = (0..6).map(|k| FringePoint::poisson(0.1 * k as f64, 10.0)).collect();
        assert!(matches!(fit_fringe(&narrow), Err(Error::Fit(_))));
        let zeros: Vec<_> = half_turn_grid(8).into_iter().map(|d| FringePoint::poisson(d, 0.0)).collect();
        assert!(matches!(fit_fringe(&zeros), Err(Error::NoSignal(_))));
        let mut bad = noiseless(0.5, 0.0, 8);
        bad[2].count_err = 0.0;
        assert!(fit_fringe(&bad).is_err());
    }

    #[test]
    fn free_frequency_finds_the_fixed_period() {
        let fit = fit_fringe_free_frequency(&noiseless(0.6, 0.4, 16), 200).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.frequency, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.visibility, 0.6, epsilon = 1e-6);
    }

    #[test]
    fn free_frequency_flags_iteration_cap() {
        let pts: Vec<_> = (0..24)
            .map(|k| {
                let d = 0.15 * k as f64;
                FringePoint { delta: d, count: 100.0 * (1.0 + 0.7 * (2.3 * d).cos()), count_err: 1.0 }
            })
            .collect();
        let capped = fit_fringe_free_frequency(&pts, 1).unwrap();
        assert!(!capped.converged);
        let full = fit_fringe_free_frequency(&pts, 500).unwrap();
        assert!(full.converged);
        assert_abs_diff_eq!(full.frequency, 2.3, epsilon = 1e-6);
    }

    #[test]
    fn net_visibility_cases() {
        let raw = FitResult {
            visibility: 0.5,
            visibility_err: 0.05,
            phase_offset: 0.0,
            baseline: 100.0,
            baseline_err: 2.0,
            residual_rms: 0.0,
            frequency: 2.0,
            converged: true,
        };
        assert_eq!(net_visibility(&raw, 0.0).unwrap(), raw);
        let net = net_visibility(&raw, 40.0).unwrap();
        assert_abs_diff_eq!(net.visibility, 0.5 * 100.0 / 60.0, epsilon = 1e-15);
        assert_abs_diff_eq!(net.baseline, 60.0, epsilon = 1e-15);
        assert!(net.visibility_err > raw.visibility_err);
        assert!(matches!(net_visibility(&raw, 100.0), Err(Error::NoSignal(_))));
        // continuity as the accidental level vanishes
        let tiny = net_visibility(&raw, 1e-9).unwrap();
        assert_abs_diff_eq!(tiny.visibility, raw.visibility, epsilon = 1e-10);
        assert_abs_diff_eq!(tiny.visibility_err, raw.visibility_err, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn invariant_under_count_scaling(
            v in 0.0f64..0.95, off in -3.0f64..3.0, k in 1e-3f64..1e4,
            noise in proptest::collection::vec(-0.05f64..0.05, 12),
        ) {
            let pts: Vec<_> = half_turn_grid(12).into_iter().zip(&noise).map(|(d, e)| {
                let c = 500.0 * (1.0 + v * (2.0 * d + off).cos()) * (1.0 + e);
                FringePoint { delta: d, count: c, count_err: c.max(1.0).sqrt() }
            }).collect();
            let scaled: Vec<_> = pts.iter().map(|p| FringePoint { count: k * p.count, count_err: k * p.count_err, ..*p }).collect();
            let a = fit_fringe(&pts).unwrap();
            let b = fit_fringe(&scaled).unwrap();
            prop_assert!((a.visibility - b.visibility).abs() < 1e-9);
            let dphi = (a.phase_offset - b.phase_offset).sin().abs();
            prop_assert!(dphi < 1e-9);
        }
    }
}
