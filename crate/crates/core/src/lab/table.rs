//! Exact Born-rule tables of joint detection bins.
//!
//! Amplitudes from every creation bin are summed before squaring; the
//! creation bin is never sampled on its own, which would erase the
//! coherence between pump pulses.

use num_complex::Complex64;

use crate::analyzers::fiber_loop::loop_exit_amplitude;
use crate::analyzers::two_way::{apply_two_way, retained_bins};
use crate::analyzers::{AnalyzerConfig, Arm, LoopConfig, TwoWayConfig};
use crate::error::Result;
use crate::state::{pdc_state, total_probability, BinPair, PulseTrain, TwoPhotonState};

/// Single-photon loop tail probability below which further round trips are
/// dropped from the table.
const LOOP_TAIL_CUTOFF: f64 = 1e-14;

/// Normalized joint distribution over `(bin_a, bin_b)` at the detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    entries: Vec<(BinPair, f64)>,
    monitored_probability: f64,
    span_bins: usize,
}

impl OutcomeTable {
    /// Entries in ascending pair order; probabilities sum to 1 unless the
    /// table is empty.
    pub fn entries(&self) -> &[(BinPair, f64)] {
        &self.entries
    }

    /// Probability that the pair reaches the detectors at all (both photons
    /// in the monitored port and not blocked by edge switches). The entries
    /// are conditioned on this event.
    pub fn monitored_probability(&self) -> f64 {
        self.monitored_probability
    }

    /// Number of detection bins covered by the analyzer output.
    pub fn span_bins(&self) -> usize {
        self.span_bins
    }

    pub fn probability(&self, pair: BinPair) -> f64 {
        self.entries.binary_search_by(|(p, _)| p.cmp(&pair)).map(|i| self.entries[i].1).unwrap_or(0.0)
    }

    /// Total probability of equal detection bins.
    pub fn tau0_probability(&self) -> f64 {
        self.entries.iter().filter(|((a, b), _)| a == b).map(|(_, p)| p).sum()
    }

    fn from_state(state: &TwoPhotonState, span_bins: usize) -> Self {
        let norm = total_probability(state);
        let entries = if norm > 0.0 {
            state.iter().map(|(pair, a)| (pair, a.norm_sqr() / norm)).filter(|(_, p)| *p > 0.0).collect()
        } else {
            Vec::new()
        };
        OutcomeTable { entries, monitored_probability: norm, span_bins }
    }
}

/// Detection-bin distribution for a pump train sent through `analyzer`.
pub fn sample_outcome_distribution(train: &PulseTrain, analyzer: &AnalyzerConfig) -> Result<OutcomeTable> {
    analyzer.validate()?;
    match analyzer {
        AnalyzerConfig::TwoWay(cfg) => two_way_table(train, cfg),
        AnalyzerConfig::Loop(cfg) => Ok(loop_table(train, cfg)),
    }
}

fn two_way_table(train: &PulseTrain, cfg: &TwoWayConfig) -> Result<OutcomeTable> {
    let keep = retained_bins(train.dimension(), cfg.discard_edges)?;
    let mut out = apply_two_way(&pdc_state(train), cfg);
    if cfg.discard_edges {
        out = TwoPhotonState::from_contributions(
            out.iter().filter(|((a, b), _)| keep.contains(a) && keep.contains(b)),
        );
    }
    Ok(OutcomeTable::from_state(&out, train.dimension() + 1))
}

/// Round trips kept per photon.
pub(crate) fn loop_depth(cfg: &LoopConfig) -> usize {
    let t2 = cfg.t2;
    let mut n = 1;
    // still circulating after n round trips: r^2 t^{2n}
    while n < cfg.max_loops && (1.0 - t2) * t2.powi(n as i32) > LOOP_TAIL_CUTOFF {
        n += 1;
    }
    n
}

/// Exit amplitude with a reflection amplitude of `i r` at the coupler.
///
/// Each looped path reflects twice, so it differs from the real-coupler
/// amplitude by a sign. Pair amplitudes with equal loop counts (all of
/// `tau = 0`) are unchanged, and the map from creation bin to exit bin
/// becomes an isometry, which the joint table needs for the cross terms
/// between different creation bins.
pub(crate) fn coupler_exit_amplitude(n: usize, cfg: &LoopConfig, arm: Arm) -> Complex64 {
    let a = loop_exit_amplitude(n, cfg, arm);
    if n == 0 {
        a
    } else {
        -a
    }
}

fn loop_table(train: &PulseTrain, cfg: &LoopConfig) -> OutcomeTable {
    let depth = loop_depth(cfg);
    let exit_a: Vec<Complex64> = (0..=depth).map(|n| coupler_exit_amplitude(n, cfg, Arm::A)).collect();
    let exit_b: Vec<Complex64> = (0..=depth).map(|n| coupler_exit_amplitude(n, cfg, Arm::B)).collect();
    let mut state = TwoPhotonState::empty();
    for j in 1..=train.dimension() {
        let pump = train.bin_amplitude(j);
        for (na, ea) in exit_a.iter().enumerate() {
            let pa = pump * ea;
            for (nb, eb) in exit_b.iter().enumerate() {
                state.accumulate((j + na, j + nb), pa * eb);
            }
        }
    }
    state.prune();
    OutcomeTable::from_state(&state, train.dimension() + depth)
}
