//! Command implementations. Each returns the table it wrote so tests can
//! inspect results without re-parsing the CSV.

use std::path::Path;

use serde::Serialize;

use super::config::{config_hash, FpCurveSettings, RunConfig};
use super::output::{real, write_outputs, CsvTable, RunManifest};
use super::CliError;
use crate::analysis::{dimension_bound, fit_fringe, net_visibility, FitResult, FringePoint};
use crate::analyzers::two_way::coincidence_probability_with;
use crate::analyzers::{fp_coincidence_closed, fp_visibility, fiber_loop::phi_grid, AnalyzerConfig, LoopConfig};
use crate::lab::{
    expected_accidentals_per_trial, run_experiment, select_window, tac_histogram, window_counts_by_phase,
    ExperimentConfig,
};
use crate::Error;

/// Stream offset separating the accidental-calibration run from the main run.
const CALIBRATION_SEED_SALT: u64 = 0xca11_b4a7_e000_0001;

fn analysis_err(e: Error) -> CliError {
    match e {
        Error::NoSignal(msg) => CliError::Analysis(format!("no signal: {msg}")),
        other => CliError::Analysis(other.to_string()),
    }
}

pub struct Accidentals {
    /// Window counts per trial measured with pair emission switched off.
    pub measured_per_trial: f64,
    pub measured_per_trial_err: f64,
    pub predicted_per_trial: f64,
    /// Calibrated level per phase point, in counts.
    pub per_point: f64,
    pub net: FitResult,
}

pub struct FringeReport {
    pub phases: Vec<f64>,
    pub counts: Vec<u64>,
    pub predicted: Vec<f64>,
    pub fit: FitResult,
    pub accidentals: Option<Accidentals>,
    pub window_total: u64,
}

fn two_way_experiment(cfg: &RunConfig) -> Result<&ExperimentConfig, CliError> {
    let exp = cfg.experiment().map_err(|e| CliError::Config(e.0))?;
    match exp.analyzer {
        AnalyzerConfig::TwoWay(_) => Ok(exp),
        AnalyzerConfig::Loop(_) => {
            Err(CliError::Config("fringe needs analyzer.kind = \"two-way\"; use fp-curve for the loop".into()))
        }
    }
}

pub fn compute_fringe(cfg: &RunConfig) -> Result<FringeReport, CliError> {
    let exp = two_way_experiment(cfg)?;
    let AnalyzerConfig::TwoWay(analyzer) = exp.analyzer else { unreachable!() };
    if exp.mean_pairs_per_train == 0.0 {
        return Err(CliError::Analysis("no signal: mean_pairs_per_train is 0, there is no fringe to fit".into()));
    }
    let h = &cfg.histogram;
    let records = run_experiment(exp, &cfg.phases).map_err(analysis_err)?;
    let counts = window_counts_by_phase(&records, cfg.phases.len(), h.window_center_ns, h.window_width_ns);
    let predicted = cfg
        .phases
        .iter()
        .map(|&delta| coincidence_probability_with(&exp.train, &crate::analyzers::TwoWayConfig { delta, ..analyzer }))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(analysis_err)?;
    let points: Vec<FringePoint> =
        cfg.phases.iter().zip(&counts).map(|(&d, &n)| FringePoint::poisson(d, n as f64)).collect();
    let fit = fit_fringe(&points).map_err(analysis_err)?;

    let accidentals = if cfg.analysis.subtract_accidentals {
        let calib = ExperimentConfig {
            mean_pairs_per_train: 0.0,
            n_trains: cfg.analysis.calibration_trains,
            rng_seed: exp.rng_seed ^ CALIBRATION_SEED_SALT,
            ..exp.clone()
        };
        let calib_records = run_experiment(&calib, &cfg.phases).map_err(analysis_err)?;
        let n = select_window(&calib_records, h.window_center_ns, h.window_width_ns).map_err(analysis_err)? as f64;
        let trials = calib.n_trains as f64 * cfg.phases.len() as f64;
        let measured = n / trials;
        let per_point = measured * exp.n_trains as f64;
        let net = net_visibility(&fit, per_point).map_err(analysis_err)?;
        Some(Accidentals {
            measured_per_trial: measured,
            measured_per_trial_err: n.max(1.0).sqrt() / trials,
            predicted_per_trial: expected_accidentals_per_trial(exp).map_err(analysis_err)?,
            per_point,
            net,
        })
    } else {
        None
    };

    Ok(FringeReport {
        window_total: counts.iter().sum(),
        phases: cfg.phases.clone(),
        counts,
        predicted,
        fit,
        accidentals,
    })
}

fn push_fit(table: &mut CsvTable, prefix: &str, fit: &FitResult) {
    table.comment(format!("{prefix}.visibility = {}", real(fit.visibility)));
    table.comment(format!("{prefix}.visibility_err = {}", real(fit.visibility_err)));
    table.comment(format!("{prefix}.phase_offset_rad = {}", real(fit.phase_offset)));
    table.comment(format!("{prefix}.baseline = {}", real(fit.baseline)));
    table.comment(format!("{prefix}.baseline_err = {}", real(fit.baseline_err)));
    match dimension_bound(fit.visibility.max(0.0), fit.visibility_err) {
        Ok(b) => {
            table.comment(format!("{prefix}.dimension_bound = {}", real(b.bound)));
            table.comment(format!("{prefix}.claimed_dimension = {}", b.claimed_dimension));
            let upper = b.upper.map_or("unbounded".to_string(), real);
            table.comment(format!("{prefix}.dimension_interval = {} .. {upper}", real(b.lower)));
        }
        Err(_) => table.comment(format!("{prefix}.dimension_bound = unbounded")),
    }
}

pub fn fringe_table(report: &FringeReport) -> CsvTable {
    let mut t = CsvTable::new(vec!["delta_rad", "counts", "counts_err", "predicted_probability"]);
    push_fit(&mut t, "fit", &report.fit);
    t.comment(format!("fit.residual_rms = {}", real(report.fit.residual_rms)));
    if let Some(acc) = &report.accidentals {
        t.comment(format!("accidentals.measured_per_trial = {}", real(acc.measured_per_trial)));
        t.comment(format!("accidentals.measured_per_trial_err = {}", real(acc.measured_per_trial_err)));
        t.comment(format!("accidentals.predicted_per_trial = {}", real(acc.predicted_per_trial)));
        t.comment(format!("accidentals.per_point = {}", real(acc.per_point)));
        push_fit(&mut t, "net", &acc.net);
    }
    t.comment(format!("window_total = {}", report.window_total));
    for ((&d, &n), &p) in report.phases.iter().zip(&report.counts).zip(&report.predicted) {
        let pt = FringePoint::poisson(d, n as f64);
        t.row(vec![real(d), n.to_string(), real(pt.count_err), real(p)]);
    }
    t
}

pub fn cmd_fringe(cfg: &RunConfig, out: &Path) -> Result<FringeReport, CliError> {
    let report = compute_fringe(cfg)?;
    let seed = cfg.experiment().map_err(|e| CliError::Config(e.0))?.rng_seed;
    write_outputs(out, &fringe_table(&report), RunManifest::new("fringe", cfg.hash(), seed))?;
    Ok(report)
}

pub struct HistogramReport {
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub window_count: u64,
}

pub fn compute_histogram(cfg: &RunConfig) -> Result<HistogramReport, CliError> {
    let exp = cfg.experiment().map_err(|e| CliError::Config(e.0))?;
    let h = &cfg.histogram;
    let records = run_experiment(exp, &cfg.phases).map_err(analysis_err)?;
    let hist = tac_histogram(&records, h.bin_width_ns, h.span_ns).map_err(analysis_err)?;
    let window_count = select_window(&hist, h.window_center_ns, h.window_width_ns).map_err(analysis_err)?;
    Ok(HistogramReport {
        centers: hist.centers().collect(),
        counts: hist.counts().to_vec(),
        overflow: hist.overflow(),
        window_count,
    })
}

pub fn histogram_table(cfg: &RunConfig, report: &HistogramReport) -> CsvTable {
    let h = &cfg.histogram;
    let mut t = CsvTable::new(vec!["tau_ns", "counts"]);
    t.comment(format!("window.center_ns = {}", real(h.window_center_ns)));
    t.comment(format!("window.width_ns = {}", real(h.window_width_ns)));
    t.comment(format!("window.counts = {}", report.window_count));
    t.comment(format!("overflow = {}", report.overflow));
    for (&c, &n) in report.centers.iter().zip(&report.counts) {
        t.row(vec![real(c), n.to_string()]);
    }
    t
}

pub fn cmd_histogram(cfg: &RunConfig, out: &Path) -> Result<HistogramReport, CliError> {
    let report = compute_histogram(cfg)?;
    let seed = cfg.experiment().map_err(|e| CliError::Config(e.0))?.rng_seed;
    write_outputs(out, &histogram_table(cfg, &report), RunManifest::new("histogram", cfg.hash(), seed))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpCurveReport {
    pub rows: Vec<(f64, f64, f64)>,
    pub visibilities: Vec<(f64, f64)>,
}

pub fn compute_fp_curve(settings: &FpCurveSettings) -> Result<FpCurveReport, CliError> {
    let mut rows = Vec::new();
    let mut visibilities = Vec::new();
    for &t2 in &settings.t2_values {
        let v = fp_visibility(t2, settings.phi_points).map_err(|e| CliError::Config(e.to_string()))?;
        visibilities.push((t2, v));
        for phi in phi_grid(settings.phi_points) {
            rows.push((t2, phi, fp_coincidence_closed(&LoopConfig::new(t2, phi, 0.0))));
        }
    }
    Ok(FpCurveReport { rows, visibilities })
}

pub fn fp_curve_table(report: &FpCurveReport) -> CsvTable {
    let mut t = CsvTable::new(vec!["t2", "phi_sum_rad", "p_coinc"]);
    for &(t2, phi, p) in &report.rows {
        t.row(vec![real(t2), real(phi), real(p)]);
    }
    for &(t2, v) in &report.visibilities {
        t.trailer(format!("visibility t2 = {} v = {}", real(t2), real(v)));
    }
    if let Some(&(t2, v)) = report.visibilities.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        t.trailer(format!("best t2 = {} v = {}", real(t2), real(v)));
    }
    t
}

#[derive(Serialize)]
struct FpCurveIdentity<'a> {
    fp_curve: &'a FpCurveSettings,
}

pub fn cmd_fp_curve(settings: &FpCurveSettings, out: &Path) -> Result<FpCurveReport, CliError> {
    let report = compute_fp_curve(settings)?;
    let hash = config_hash(&FpCurveIdentity { fp_curve: settings });
    write_outputs(out, &fp_curve_table(&report), RunManifest::new("fp-curve", hash, 0))?;
    Ok(report)
}
