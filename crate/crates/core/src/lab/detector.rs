use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detection chain of the two arms.
///
/// The 1310 nm photon goes to a free-running Ge APD; every Ge click opens
/// gates on the InGaAs APD (1550 nm) at `-gate_slots..=gate_slots` pump
/// periods around the click, each `gate_width_ns` wide. Optical delays are
/// taken as perfectly compensated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub eta_ge: f64,
    /// Ge dark counts per second.
    pub dark_rate_ge: f64,
    pub eta_ingaas: f64,
    /// InGaAs noise click probability per ns of open gate.
    pub noise_prob_ingaas: f64,
    pub gate_width_ns: f64,
    pub coincidence_window_ns: f64,
    /// Flat optical loss per photon, dB.
    pub channel_loss_db: f64,
    /// Gates opened on each side of the Ge click, in pump periods.
    pub gate_slots: usize,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            eta_ge: 0.10,
            dark_rate_ge: 30_000.0,
            eta_ingaas: 0.20,
            noise_prob_ingaas: 5e-5,
            gate_width_ns: 1.0,
            coincidence_window_ns: 1.0,
            channel_loss_db: 12.0,
            gate_slots: 2,
        }
    }
}

impl DetectorModel {
    /// Unit efficiency, no loss, no noise.
    pub fn ideal() -> Self {
        DetectorModel {
            eta_ge: 1.0,
            dark_rate_ge: 0.0,
            eta_ingaas: 1.0,
            noise_prob_ingaas: 0.0,
            channel_loss_db: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_ge", self.eta_ge), ("eta_ingaas", self.eta_ingaas)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("efficiency must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("dark_rate_ge", self.dark_rate_ge),
            ("noise_prob_ingaas", self.noise_prob_ingaas),
            ("channel_loss_db", self.channel_loss_db),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and nonnegative, got {v}")));
            }
        }
        for (name, v) in [("gate_width_ns", self.gate_width_ns), ("coincidence_window_ns", self.coincidence_window_ns)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.noise_prob_ingaas * self.gate_width_ns > 1.0 {
            return Err(Error::invalid("noise_prob_ingaas", "noise probability per gate exceeds 1"));
        }
        Ok(())
    }

    pub fn channel_transmission(&self) -> f64 {
        10f64.powf(-self.channel_loss_db / 10.0)
    }

    /// Probability that a 1310 nm photon reaching the analyzer output clicks.
    pub fn ge_detection_probability(&self) -> f64 {
        self.eta_ge * self.channel_transmission()
    }

    /// Probability that a 1550 nm photon inside an open gate clicks.
    pub fn ingaas_detection_probability(&self) -> f64 {
        self.eta_ingaas * self.channel_transmission()
    }

    pub fn noise_per_gate(&self) -> f64 {
        self.noise_prob_ingaas * self.gate_width_ns
    }

    pub fn dark_rate_per_ns(&self) -> f64 {
        self.dark_rate_ge * 1e-9
    }
}
