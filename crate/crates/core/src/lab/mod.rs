//! Monte-Carlo model of the detection experiment.

pub mod detector;
pub mod experiment;
pub mod histogram;
pub mod table;

pub use detector::DetectorModel;
pub use experiment::{
    expected_accidentals_per_trial, run_experiment, trial_window_ns, CoincidenceRecord, ExperimentConfig,
};
pub use histogram::{select_window, tac_histogram, window_counts_by_phase, Histogram, WindowCount};
pub use table::{sample_outcome_distribution, OutcomeTable};
