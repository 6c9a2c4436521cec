//! Analyzer transfer functions applied to two-photon states.

pub mod fiber_loop;
pub mod outcomes;
pub mod two_way;

pub use fiber_loop::{
    fp_amplitude_closed, fp_amplitude_series, fp_coincidence_closed, fp_coincidence_series, fp_visibility,
    loop_exit_amplitude, loops_for_tolerance, series_tail_bound, Arm, LoopConfig,
};
pub use outcomes::{enumerate_outcomes, OutcomeDescriptor, Port};
pub use two_way::{apply_two_way, coincidence_probability_two_way, postselect_tau0, TwoWayConfig};

use serde::{Deserialize, Serialize};

/// Either analyzer, as selected by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyzerConfig {
    TwoWay(TwoWayConfig),
    Loop(LoopConfig),
}

impl AnalyzerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        match self {
            AnalyzerConfig::TwoWay(c) => c.validate(),
            AnalyzerConfig::Loop(c) => c.validate(),
        }
    }

    /// Copy of this analyzer with its scanned phase set to `phase`: the
    /// long-arm phase for the two-way analyzer, the loop phase sum for the
    /// fiber loop (carried on arm A).
    pub fn with_phase(&self, phase: f64) -> Self {
        match *self {
            AnalyzerConfig::TwoWay(c) => AnalyzerConfig::TwoWay(TwoWayConfig { delta: phase, ..c }),
            AnalyzerConfig::Loop(c) => AnalyzerConfig::Loop(LoopConfig { phase_a: phase, phase_b: 0.0, ..c }),
        }
    }
}
