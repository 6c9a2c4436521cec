//! Event-level simulation of the detection chain.
//!
//! Each trial is one pump-train window. A pair is emitted with probability
//! `mean_pairs_per_train`, routed through the analyzer by sampling the
//! exact outcome table, and each photon then survives loss and detector
//! efficiency independently. The Ge arm also produces Poisson dark clicks
//! anywhere in the window. Every Ge click opens InGaAs gates one pump
//! period apart; a gate yields a coincidence record when the 1550 nm photon
//! falls inside it or when the InGaAs detector fires a noise click.
//!
//! Only trials with at least one Ge click can produce a record, so trials
//! are visited by geometric skipping over the inactive ones. Trials are
//! grouped in fixed blocks, each with its own ChaCha stream derived from
//! the seed, so results do not depend on how blocks are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzers::AnalyzerConfig;
use crate::error::{Error, Result};
use crate::lab::detector::DetectorModel;
use crate::lab::table::{sample_outcome_distribution, OutcomeTable};
use crate::state::PulseTrain;

/// Trials per independently seeded block.
pub const TRIALS_PER_BLOCK: u64 = 1 << 22;

pub const DEFAULT_MEAN_PAIRS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: PulseTrain,
    pub analyzer: AnalyzerConfig,
    pub detectors: DetectorModel,
    /// Pair-emission probability per train window.
    pub mean_pairs_per_train: f64,
    /// Trial count per phase setting.
    pub n_trains: u64,
    pub rng_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.analyzer.validate()?;
        self.detectors.validate()?;
        if !(0.0..1.0).contains(&self.mean_pairs_per_train) {
            return Err(Error::invalid(
                "mean_pairs_per_train",
                format!("must lie in [0, 1), got {}", self.mean_pairs_per_train),
            ));
        }
        if self.n_trains == 0 {
            return Err(Error::invalid("n_trains", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    /// InGaAs minus Ge detection time, ns; always a whole number of pump periods.
    pub tau: f64,
    /// Time bin of the Ge click (1-based).
    pub detection_bin: usize,
    /// Both clicks came from the photon pair.
    pub true_coincidence: bool,
    pub phase_setting: f64,
    /// Position of `phase_setting` in the requested sweep.
    pub phase_index: usize,
}

/// Per-trial event probabilities for one phase setting.
struct TrialModel<'a> {
    table: &'a OutcomeTable,
    sampler: Option<WeightedIndex<f64>>,
    /// Pair emitted and routed to the detectors.
    p_pair: f64,
    p_ge: f64,
    p_ingaas: f64,
    p_noise: f64,
    /// Mean Ge dark clicks per window.
    dark_mean: f64,
    window_ns: f64,
    spacing: f64,
    gate_half: f64,
    gate_slots: i64,
}

struct Photons {
    bin_a: usize,
    bin_b: usize,
    ge_clicks: bool,
    ingaas_alive: bool,
}

impl<'a> TrialModel<'a> {
    fn new(cfg: &ExperimentConfig, table: &'a OutcomeTable) -> Result<Self> {
        let sampler = if table.entries().is_empty() {
            None
        } else {
            Some(
                WeightedIndex::new(table.entries().iter().map(|(_, p)| *p))
                    .map_err(|e| Error::invalid("outcome table", e.to_string()))?,
            )
        };
        let spacing = cfg.train.bin_spacing_ns();
        let window_ns = table.span_bins() as f64 * spacing;
        let d = &cfg.detectors;
        Ok(TrialModel {
            table,
            p_pair: if sampler.is_some() { cfg.mean_pairs_per_train * table.monitored_probability() } else { 0.0 },
            sampler,
            p_ge: d.ge_detection_probability(),
            p_ingaas: d.ingaas_detection_probability(),
            p_noise: d.noise_per_gate(),
            dark_mean: d.dark_rate_per_ns() * window_ns,
            window_ns,
            spacing,
            gate_half: 0.5 * d.gate_width_ns,
            gate_slots: d.gate_slots as i64,
        })
    }

    /// Probability that the pair yields a Ge click.
    fn p_ge_photon(&self) -> f64 {
        self.p_pair * self.p_ge
    }

    fn p_dark(&self) -> f64 {
        -(-self.dark_mean).exp_m1()
    }

    fn p_active(&self) -> f64 {
        1.0 - (1.0 - self.p_ge_photon()) * (1.0 - self.p_dark())
    }

    fn sample_pair<R: Rng>(&self, rng: &mut R, ge_clicks: bool) -> Photons {
        let sampler = self.sampler.as_ref().expect("pair sampled from an empty table");
        let ((bin_a, bin_b), _) = self.table.entries()[sampler.sample(rng)];
        Photons { bin_a, bin_b, ge_clicks, ingaas_alive: rng.random::<f64>() < self.p_ingaas }
    }

    /// One trial conditioned on at least one Ge click.
    fn active_trial<R: Rng>(&self, rng: &mut R, phase: f64, phase_index: usize, out: &mut Vec<CoincidenceRecord>) {
        let pa = self.p_ge_photon();
        let pb = self.p_dark();
        let p_act = self.p_active();
        let u = rng.random::<f64>() * p_act;
        let (photon_click, dark) = if u < pa * (1.0 - pb) {
            (true, false)
        } else if u < pa * (1.0 - pb) + (1.0 - pa) * pb {
            (false, true)
        } else {
            (true, true)
        };

        let photons = if photon_click {
            Some(self.sample_pair(rng, true))
        } else if self.p_pair > 0.0 {
            // given no Ge photon click: pair present but missed by the Ge APD
            let p_missed = self.p_pair * (1.0 - self.p_ge) / (1.0 - pa);
            (rng.random::<f64>() < p_missed).then(|| self.sample_pair(rng, false))
        } else {
            None
        };

        let n_dark = if dark { zero_truncated_poisson(rng, self.dark_mean) } else { 0 };

        // Ge click times (ns, bin 1 at t = 0) and whether each is the photon
        let mut ge_clicks: Vec<(f64, bool)> = Vec::with_capacity(1 + n_dark as usize);
        if let Some(p) = photons.as_ref().filter(|p| p.ge_clicks) {
            ge_clicks.push(((p.bin_a - 1) as f64 * self.spacing, true));
        }
        for _ in 0..n_dark {
            let t = rng.random::<f64>() * self.window_ns - 0.5 * self.spacing;
            ge_clicks.push((t, false));
        }
        ge_clicks.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut ingaas_pending = photons.as_ref().filter(|p| p.ingaas_alive).map(|p| (p.bin_b - 1) as f64 * self.spacing);
        for (t_ge, from_photon) in ge_clicks {
            let detection_bin = ((t_ge / self.spacing).round() as i64 + 1).max(1) as usize;
            for k in -self.gate_slots..=self.gate_slots {
                let gate_center = t_ge + k as f64 * self.spacing;
                let caught = ingaas_pending.is_some_and(|t_b| (t_b - gate_center).abs() <= self.gate_half);
                if caught {
                    ingaas_pending = None;
                }
                let noise = self.p_noise > 0.0 && rng.random::<f64>() < self.p_noise;
                if caught || noise {
                    out.push(CoincidenceRecord {
                        tau: k as f64 * self.spacing,
                        detection_bin,
                        true_coincidence: caught && from_photon,
                        phase_setting: phase,
                        phase_index,
                    });
                }
            }
        }
    }
}

/// `K ~ Poisson(mean)` conditioned on `K >= 1`, by inversion.
fn zero_truncated_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    let u = rng.random::<f64>();
    let norm = -(-mean).exp_m1();
    let mut k = 1u64;
    let mut pk = mean * (-mean).exp() / norm;
    let mut cdf = pk;
    while u > cdf && k < 10_000 {
        k += 1;
        pk *= mean / k as f64;
        cdf += pk;
        if pk == 0.0 {
            break;
        }
    }
    k
}

fn block_rng(seed: u64, phase_index: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((phase_index as u64) << 40) | block);
    rng
}

fn run_block(
    model: &TrialModel<'_>,
    seed: u64,
    phase: f64,
    phase_index: usize,
    block: u64,
    trials: u64,
) -> Vec<CoincidenceRecord> {
    let mut out = Vec::new();
    let p_act = model.p_active();
    if p_act <= 0.0 {
        return out;
    }
    let mut rng = block_rng(seed, phase_index, block);
    let skip = Geometric::new(p_act).expect("activity probability in (0, 1]");
    let mut next = 0u64;
    loop {
        next = next.saturating_add(skip.sample(&mut rng));
        if next >= trials {
            break;
        }
        model.active_trial(&mut rng, phase, phase_index, &mut out);
        next += 1;
    }
    out
}

/// Simulates `cfg.n_trains` train windows at every phase setting and
/// returns the coincidence records in phase order.
///
/// The scanned phase is the long-arm phase of a two-way analyzer or the
/// loop phase sum of a fiber-loop analyzer. Output is a pure function of
/// `cfg` and `phase_settings`.
pub fn run_experiment(cfg: &ExperimentConfig, phase_settings: &[f64]) -> Result<Vec<CoincidenceRecord>> {
    cfg.validate()?;
    let tables = phase_settings
        .iter()
        .map(|&phase| sample_outcome_distribution(&cfg.train, &cfg.analyzer.with_phase(phase)))
        .collect::<Result<Vec<_>>>()?;
    let models = tables.iter().map(|t| TrialModel::new(cfg, t)).collect::<Result<Vec<_>>>()?;

    let n_blocks = cfg.n_trains.div_ceil(TRIALS_PER_BLOCK);
    let tasks: Vec<(usize, u64)> =
        (0..phase_settings.len()).flat_map(|p| (0..n_blocks).map(move |b| (p, b))).collect();
    let chunks: Vec<Vec<CoincidenceRecord>> = tasks
        .par_iter()
        .map(|&(p, b)| {
            let trials = (cfg.n_trains - b * TRIALS_PER_BLOCK).min(TRIALS_PER_BLOCK);
            run_block(&models[p], cfg.rng_seed, phase_settings[p], p, b, trials)
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Expected accidental records per trial inside the central gate when no
/// pairs are emitted: Ge dark clicks in the window times the InGaAs noise
/// probability of one gate.
pub fn expected_accidentals_per_trial(cfg: &ExperimentConfig) -> Result<f64> {
    let table = sample_outcome_distribution(&cfg.train, &cfg.analyzer)?;
    let window_ns = table.span_bins() as f64 * cfg.train.bin_spacing_ns();
    Ok(cfg.detectors.dark_rate_per_ns() * window_ns * cfg.detectors.noise_per_gate())
}

/// Length of one trial window in ns.
pub fn trial_window_ns(cfg: &ExperimentConfig) -> Result<f64> {
    let table = sample_outcome_distribution(&cfg.train, &cfg.analyzer)?;
    Ok(table.span_bins() as f64 * cfg.train.bin_spacing_ns())
}
