//! TAC-style histograms of detection-time differences and SCA windows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lab::experiment::CoincidenceRecord;

/// Counts of `tau` in bins of `bin_width` centred on integer multiples of
/// the bin width, covering `[-span, span]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    bin_width: f64,
    first_index: i64,
    counts: Vec<u64>,
    /// Records outside the span.
    overflow: u64,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|i| (self.first_index + i as i64) as f64 * self.bin_width)
    }

    /// `(center, count)` pairs in ascending `tau`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.centers().zip(self.counts.iter().copied())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn tac_histogram(records: &[CoincidenceRecord], bin_width: f64, span: f64) -> Result<Histogram> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::invalid("bin_width", format!("must be positive, got {bin_width}")));
    }
    if !(span.is_finite() && span >= 0.0) {
        return Err(Error::invalid("span", format!("must be nonnegative, got {span}")));
    }
    let half_bins = (span / bin_width).ceil() as i64;
    let mut counts = vec![0u64; (2 * half_bins + 1) as usize];
    let mut overflow = 0;
    for r in records {
        let idx = (r.tau / bin_width).round() as i64;
        if idx.abs() <= half_bins {
            counts[(idx + half_bins) as usize] += 1;
        } else {
            overflow += 1;
        }
    }
    Ok(Histogram { bin_width, first_index: -half_bins, counts, overflow })
}

/// Sources that can be gated with a single-channel-analyzer window.
pub trait WindowCount {
    /// Events with `|tau - center| <= width / 2`. For a histogram, whole bins
    /// whose centre lies in the window.
    fn window_count(&self, center: f64, width: f64) -> u64;
}

impl WindowCount for [CoincidenceRecord] {
    fn window_count(&self, center: f64, width: f64) -> u64 {
        self.iter().filter(|r| (r.tau - center).abs() <= 0.5 * width).count() as u64
    }
}

impl WindowCount for Vec<CoincidenceRecord> {
    fn window_count(&self, center: f64, width: f64) -> u64 {
        self.as_slice().window_count(center, width)
    }
}

impl WindowCount for Histogram {
    fn window_count(&self, center: f64, width: f64) -> u64 {
        self.iter().filter(|(c, _)| (c - center).abs() <= 0.5 * width).map(|(_, n)| n).sum()
    }
}

pub fn select_window<W: WindowCount + ?Sized>(source: &W, center: f64, width: f64) -> Result<u64> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    Ok(source.window_count(center, width))
}

/// Window counts split by phase setting.
pub fn window_counts_by_phase(records: &[CoincidenceRecord], n_phases: usize, center: f64, width: f64) -> Vec<u64> {
    let mut counts = vec![0u64; n_phases];
    for r in records.iter().filter(|r| (r.tau - center).abs() <= 0.5 * width) {
        counts[r.phase_index] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(tau: f64) -> CoincidenceRecord {
        CoincidenceRecord { tau, detection_bin: 1, true_coincidence: true, phase_setting: 0.0, phase_index: 0 }
    }

    fn sample() -> Vec<CoincidenceRecord> {
        [0.0, 0.0, 0.0, 13.0, 13.0, -13.0, 26.0].into_iter().map(rec).collect()
    }

    #[test]
    fn window_selection() {
        let r = sample();
        assert_eq!(select_window(&r, 0.0, 1.0).unwrap(), 3);
        assert_eq!(select_window(&r, 13.0, 1.0).unwrap(), 2);
        assert_eq!(select_window(&r, 0.0, 30.0).unwrap(), 6);
        assert!(select_window(&r, 0.0, 0.0).is_err());
    }

    #[test]
    fn histogram_places_peaks() {
        let h = tac_histogram(&sample(), 1.0, 20.0).unwrap();
        assert_eq!(h.counts().len(), 41);
        assert_eq!(h.total(), 6);
        assert_eq!(h.overflow(), 1);
        let nonzero: Vec<(f64, u64)> = h.iter().filter(|(_, n)| *n > 0).collect();
        assert_eq!(nonzero, vec![(-13.0, 1), (0.0, 3), (13.0, 2)]);
        assert_eq!(select_window(&h, 0.0, 1.0).unwrap(), 3);
    }

    #[test]
    fn empty_records_give_zero_histogram() {
        let h = tac_histogram(&[], 0.5, 10.0).unwrap();
        assert!(h.counts().iter().all(|n| *n == 0));
        assert!(tac_histogram(&[], 0.0, 10.0).is_err());
    }

    #[test]
    fn per_phase_counts() {
        let mut r = sample();
        r[1].phase_index = 1;
        assert_eq!(window_counts_by_phase(&r, 2, 0.0, 1.0), vec![2, 1]);
    }
}
