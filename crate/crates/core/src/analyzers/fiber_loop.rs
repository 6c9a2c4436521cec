//! Fiber-loop analyzer: a coupler with one output fed back into one input,
//! the loop delay being one pump period.
//!
//! A photon either passes straight through (amplitude `t`) or is coupled
//! into the loop, circulates, and is coupled out after `n >= 1` round trips
//! with amplitude `r^2 t^{n-1} e^{i n phi}`. Coupler amplitudes are real.
//! With both photons analyzed and only `tau = 0` kept, the pair amplitude
//! is `t^2 + r^4 sum_{n>=0} t^{2n} e^{i(n+1) Phi}` with `Phi = phi_a + phi_b`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Enough loops for a tail bound below 1e-12 whenever `t2 <= 0.87`.
/// Sweeps closer to `t2 = 1` need a larger value, see [`loops_for_tolerance`].
pub const DEFAULT_MAX_LOOPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Coupler transmission probability `t^2`.
    pub t2: f64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub max_loops: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig { t2: 1.0 / 3.0, phase_a: 0.0, phase_b: 0.0, max_loops: DEFAULT_MAX_LOOPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A,
    B,
}

impl LoopConfig {
    pub fn new(t2: f64, phase_a: f64, phase_b: f64) -> Self {
        LoopConfig { t2, phase_a, phase_b, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t2) {
            return Err(Error::invalid("t2", format!("must lie in [0, 1], got {}", self.t2)));
        }
        if !(self.phase_a.is_finite() && self.phase_b.is_finite()) {
            return Err(Error::invalid("phase", "loop phases must be finite"));
        }
        if self.max_loops == 0 {
            return Err(Error::invalid("max_loops", "must be at least 1"));
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.t2.sqrt()
    }

    /// Reflection probability `r^2 = 1 - t^2`.
    pub fn r2(&self) -> f64 {
        1.0 - self.t2
    }

    pub fn phase_sum(&self) -> f64 {
        self.phase_a + self.phase_b
    }

    pub fn phase(&self, arm: Arm) -> f64 {
        match arm {
            Arm::A => self.phase_a,
            Arm::B => self.phase_b,
        }
    }
}

/// Amplitude for one photon to leave the loop after `n` round trips.
pub fn loop_exit_amplitude(n: usize, cfg: &LoopConfig, arm: Arm) -> Complex64 {
    if n == 0 {
        return Complex64::new(cfg.t(), 0.0);
    }
    let magnitude = cfg.r2() * cfg.t().powi(n as i32 - 1);
    Complex64::from_polar(magnitude, n as f64 * cfg.phase(arm))
}

/// Closed-form `tau = 0` pair amplitude.
pub fn fp_amplitude_closed(cfg: &LoopConfig) -> Complex64 {
    let t2 = cfg.t2;
    if t2 >= 1.0 {
        // Bare transmission; also the limit at the Phi = 0 singularity.
        return Complex64::new(1.0, 0.0);
    }
    let r4 = cfg.r2() * cfg.r2();
    let e = Complex64::from_polar(1.0, cfg.phase_sum());
    t2 + r4 * e / (1.0 - t2 * e)
}

/// Coincidence probability `|t^2 + r^4 e^{i Phi} / (1 - t^2 e^{i Phi})|^2`.
pub fn fp_coincidence_closed(cfg: &LoopConfig) -> f64 {
    fp_amplitude_closed(cfg).norm_sqr()
}

/// Pair amplitude from the series truncated after `max_loops` terms.
pub fn fp_amplitude_series(cfg: &LoopConfig) -> Complex64 {
    let r4 = cfg.r2() * cfg.r2();
    let phi = cfg.phase_sum();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut weight = 1.0;
    for n in 0..cfg.max_loops {
        sum += Complex64::from_polar(weight, (n + 1) as f64 * phi);
        weight *= cfg.t2;
    }
    cfg.t2 + r4 * sum
}

pub fn fp_coincidence_series(cfg: &LoopConfig) -> f64 {
    fp_amplitude_series(cfg).norm_sqr()
}

/// Bound on `|series - closed|` for the pair amplitude:
/// `r^4 t^{2 max_loops} / (1 - t^2)`. Infinite at `t2 = 1`.
pub fn series_tail_bound(t2: f64, max_loops: usize) -> f64 {
    if t2 >= 1.0 {
        return f64::INFINITY;
    }
    let r2 = 1.0 - t2;
    r2 * r2 * t2.powi(max_loops as i32) / (1.0 - t2)
}

/// Smallest loop count whose tail bound is at most `tolerance`.
pub fn loops_for_tolerance(t2: f64, tolerance: f64) -> usize {
    if t2 <= 0.0 {
        return 1;
    }
    let mut n = 1;
    while series_tail_bound(t2, n) > tolerance {
        n += 1;
        if n > 1_000_000 {
            break;
        }
    }
    n
}

/// Fringe visibility of the closed-form curve, sampled at `grid_points`
/// evenly spaced values of `Phi` in `[0, 2 pi)`.
pub fn fp_visibility(t2: f64, grid_points: usize) -> Result<f64> {
    if grid_points < 8 {
        return Err(Error::invalid("grid_points", format!("need at least 8, got {grid_points}")));
    }
    let probe = LoopConfig::new(t2, 0.0, 0.0);
    probe.validate()?;
    let (lo, hi) = phi_grid(grid_points)
        .map(|phi| fp_coincidence_closed(&LoopConfig::new(t2, phi, 0.0)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    Ok((hi - lo) / (hi + lo))
}

/// `n` evenly spaced phases in `[0, 2 pi)`, starting at 0.
pub fn phi_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| TAU * k as f64 / n as f64)
}
