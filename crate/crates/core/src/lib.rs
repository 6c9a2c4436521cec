//! Simulation and analysis of high-dimensional time-bin entangled photon
//! pairs created by a coherent train of pump pulses.
//!
//! The crate is layered bottom-up:
//!
//! - [`state`]: pump pulse trains and sparse two-photon amplitude maps.
//! - [`analyzers`]: the unbalanced two-way interferometer and the fiber-loop
//!   (two-photon Fabry-Perot) analyzer.
//! - [`lab`]: a seeded Monte-Carlo model of the detection chain (gated
//!   detectors, dark counts, TAC histogram).
//! - [`analysis`]: visibility bounds, fringe fitting, accidental subtraction
//!   and the entanglement-dimension bound.
//! - [`cli`]: the `timebin` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod analyzers;
pub mod cli;
pub mod error;
pub mod lab;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use state::{make_pulse_train, pdc_state, total_probability, AmplitudeSpec, PhaseSpec, PulseTrain, TwoPhotonState};
