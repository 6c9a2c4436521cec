//! Outcome bookkeeping for the two-way analyzer: `D + 1` output bins times
//! two interferometer ports, so `2(D + 1)` results for a `D`-level photon.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Port {
    Monitored,
    Unmonitored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeDescriptor {
    /// 1-based output time bin.
    pub bin: usize,
    pub port: Port,
    /// Input (creation) bins that can reach this outcome: `bin` via the
    /// short arm and `bin - 1` via the long arm, clipped to `1..=D`.
    pub fed_by: Vec<usize>,
}

impl OutcomeDescriptor {
    /// More than one input bin means two indistinguishable paths interfere.
    pub fn is_interfering(&self) -> bool {
        self.fed_by.len() > 1
    }
}

pub fn enumerate_outcomes(dimension: usize) -> Vec<OutcomeDescriptor> {
    let mut out = Vec::with_capacity(2 * (dimension + 1));
    for bin in 1..=dimension + 1 {
        let fed_by: Vec<usize> = [bin.checked_sub(1), Some(bin)]
            .into_iter()
            .flatten()
            .filter(|j| (1..=dimension).contains(j))
            .collect();
        for port in [Port::Monitored, Port::Unmonitored] {
            out.push(OutcomeDescriptor { bin, port, fed_by: fed_by.clone() });
        }
    }
    out
}
