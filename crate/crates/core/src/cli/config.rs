//! Experiment configuration files.
//!
//! A config is TOML: `key = value` lines grouped in `[section]` tables or
//! written with dotted keys (`train.dimension = 11`). Numeric values may
//! also come from the environment as `TIMEBIN_<SECTION>__<KEY>`, e.g.
//! `TIMEBIN_EXPERIMENT__N_TRAINS=200000`. A key set in the file wins over
//! the environment, with a warning on stderr.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::half_turn_grid;
use crate::analyzers::{AnalyzerConfig, LoopConfig, TwoWayConfig};
use crate::lab::{DetectorModel, ExperimentConfig};
use crate::state::{make_pulse_train, AmplitudeSpec, PhaseSpec, DEFAULT_BIN_SPACING_NS};

pub const ENV_PREFIX: &str = "TIMEBIN_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ListOrKeyword {
    Keyword(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    dimension: usize,
    #[serde(default)]
    amplitudes: Option<ListOrKeyword>,
    #[serde(default)]
    phases: Option<ListOrKeyword>,
    #[serde(default)]
    bin_spacing_ns: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalyzer {
    #[serde(default = "default_kind")]
    kind: String,
    per_path_amplitude: Option<f64>,
    discard_edges: Option<bool>,
    t2: Option<f64>,
    phase_b: Option<f64>,
    max_loops: Option<usize>,
}

fn default_kind() -> String {
    "two-way".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectors {
    preset: Option<String>,
    eta_ge: Option<f64>,
    dark_rate_ge: Option<f64>,
    eta_ingaas: Option<f64>,
    noise_prob_ingaas: Option<f64>,
    gate_width_ns: Option<f64>,
    coincidence_window_ns: Option<f64>,
    channel_loss_db: Option<f64>,
    gate_slots: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    mean_pairs_per_train: Option<f64>,
    n_trains: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    values: Option<Vec<f64>>,
    points: Option<usize>,
    start: Option<f64>,
    stop: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistogram {
    bin_width_ns: Option<f64>,
    span_ns: Option<f64>,
    window_center_ns: Option<f64>,
    window_width_ns: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    subtract_accidentals: Option<bool>,
    calibration_trains: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFpCurve {
    t2: Option<Vec<f64>>,
    scan: Option<String>,
    phi_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    train: Option<RawTrain>,
    analyzer: Option<RawAnalyzer>,
    #[serde(default)]
    detectors: RawDetectors,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    histogram: RawHistogram,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    fp_curve: RawFpCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSettings {
    pub bin_width_ns: f64,
    pub span_ns: f64,
    pub window_center_ns: f64,
    pub window_width_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSettings {
    pub subtract_accidentals: bool,
    pub calibration_trains: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpCurveSettings {
    pub t2_values: Vec<f64>,
    pub phi_points: usize,
}

/// A fully resolved experiment description; its JSON form is what gets
/// hashed into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Option<ExperimentConfig>,
    pub phases: Vec<f64>,
    pub histogram: HistogramSettings,
    pub analysis: AnalysisSettings,
    pub fp_curve: Option<FpCurveSettings>,
}

impl RunConfig {
    pub fn experiment(&self) -> Result<&ExperimentConfig, ConfigError> {
        self.experiment.as_ref().ok_or_else(|| cfg_err("config has no [train] section"))
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// Hex SHA-256 of the value's JSON serialization.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes to JSON");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

pub const DEFAULT_FP_PHI_POINTS: usize = 64;

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_scan(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || cfg_err(format!("scan `{spec}` must look like start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match n {
        0 => Err(cfg_err(format!("scan `{spec}` has zero points"))),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
    }
}

pub fn check_t2_values(values: &[f64]) -> Result<(), ConfigError> {
    if let Some(bad) = values.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(cfg_err(format!("t2 = {bad} is outside [0, 1]")));
    }
    Ok(())
}

/// Numeric overrides from `(name, value)` environment pairs.
pub fn env_overrides<I>(vars: I) -> Result<Vec<(Vec<String>, toml::Value)>, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut out = Vec::new();
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.len() != 2 || path.iter().any(|p| p.is_empty()) {
            return Err(cfg_err(format!("environment override {name}: expected {ENV_PREFIX}<SECTION>__<KEY>")));
        }
        let value = if let Ok(i) = raw.trim().parse::<i64>() {
            toml::Value::Integer(i)
        } else if let Ok(f) = raw.trim().parse::<f64>() {
            toml::Value::Float(f)
        } else {
            return Err(cfg_err(format!("environment override {name}={raw:?} is not a number")));
        };
        out.push((path, value));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Reads `TIMEBIN_*` variables from the process environment.
pub fn process_env_overrides() -> Result<Vec<(Vec<String>, toml::Value)>, ConfigError> {
    env_overrides(std::env::vars())
}

fn apply_overrides(
    table: &mut toml::Table,
    overrides: &[(Vec<String>, toml::Value)],
    warnings: &mut Vec<String>,
) -> Result<(), ConfigError> {
    for (path, value) in overrides {
        let section = table
            .entry(path[0].clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| cfg_err(format!("override {}: `{}` is not a section", path.join("."), path[0])))?;
        if section.contains_key(&path[1]) {
            warnings.push(format!(
                "warning: {}.{} is set in the config file; ignoring environment override",
                path[0], path[1]
            ));
        } else {
            section.insert(path[1].clone(), value.clone());
        }
    }
    Ok(())
}

pub struct LoadedConfig {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

pub fn load_file(path: &Path, overrides: &[(Vec<String>, toml::Value)]) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides).map_err(|e| cfg_err(format!("{}: {}", path.display(), e.0)))
}

fn describe_toml_error(text: &str, err: &toml::de::Error) -> String {
    let msg = err.message().trim().to_string();
    match err.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            let src = text.lines().nth(line - 1).unwrap_or("").trim();
            format!("line {line}: {msg} (`{src}`)")
        }
        None => msg,
    }
}

pub fn parse_config(text: &str, overrides: &[(Vec<String>, toml::Value)]) -> Result<LoadedConfig, ConfigError> {
    // first pass on the raw text keeps line numbers in diagnostics
    toml::from_str::<RawConfig>(text).map_err(|e| cfg_err(describe_toml_error(text, &e)))?;
    let mut table: toml::Table = toml::from_str(text).map_err(|e| cfg_err(describe_toml_error(text, &e)))?;
    let mut warnings = Vec::new();
    apply_overrides(&mut table, overrides, &mut warnings)?;
    let raw: RawConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| cfg_err(format!("after environment overrides: {}", e.message())))?;
    Ok(LoadedConfig { config: resolve(raw)?, warnings })
}

fn list_or(
    field: &str,
    value: Option<ListOrKeyword>,
    keyword: &str,
) -> Result<Option<Vec<f64>>, ConfigError> {
    match value {
        None => Ok(None),
        Some(ListOrKeyword::Keyword(k)) if k == keyword => Ok(None),
        Some(ListOrKeyword::Keyword(k)) => {
            Err(cfg_err(format!("field `train.{field}`: expected \"{keyword}\" or a list of numbers, got \"{k}\"")))
        }
        Some(ListOrKeyword::List(v)) => Ok(Some(v)),
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let detectors = resolve_detectors(&raw.detectors)?;
    let experiment = match raw.train {
        None => None,
        Some(t) => {
            let amplitudes = match list_or("amplitudes", t.amplitudes, "uniform")? {
                None => AmplitudeSpec::Uniform,
                Some(v) => AmplitudeSpec::Explicit(v),
            };
            let phases = match list_or("phases", t.phases, "constant")? {
                None => PhaseSpec::Constant,
                Some(v) => PhaseSpec::Explicit(v),
            };
            let train = make_pulse_train(t.dimension, amplitudes, phases, t.bin_spacing_ns.unwrap_or(DEFAULT_BIN_SPACING_NS))
                .map_err(|e| cfg_err(format!("section [train]: {e}")))?;
            let analyzer = resolve_analyzer(raw.analyzer.as_ref())?;
            let cfg = ExperimentConfig {
                train,
                analyzer,
                detectors,
                mean_pairs_per_train: raw.experiment.mean_pairs_per_train.unwrap_or(crate::lab::experiment::DEFAULT_MEAN_PAIRS),
                n_trains: raw.experiment.n_trains.unwrap_or(1_000_000),
                rng_seed: raw.experiment.seed.unwrap_or(1),
            };
            cfg.validate().map_err(|e| cfg_err(format!("experiment: {e}")))?;
            Some(cfg)
        }
    };

    let phases = match (&raw.sweep.values, raw.sweep.points) {
        (Some(v), _) if v.is_empty() => return Err(cfg_err("field `sweep.values`: must not be empty")),
        (Some(v), _) => v.clone(),
        (None, points) => {
            let n = points.unwrap_or(12);
            if n == 0 {
                return Err(cfg_err("field `sweep.points`: must be at least 1"));
            }
            match (raw.sweep.start, raw.sweep.stop) {
                (None, None) => half_turn_grid(n),
                (start, stop) => {
                    let a = start.unwrap_or(0.0);
                    let b = stop.unwrap_or(std::f64::consts::PI);
                    // stop is exclusive, matching the default half-turn grid
                    (0..n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
                }
            }
        }
    };
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(cfg_err("field `sweep`: phases must be finite"));
    }

    let histogram = HistogramSettings {
        bin_width_ns: raw.histogram.bin_width_ns.unwrap_or(1.0),
        span_ns: raw.histogram.span_ns.unwrap_or(40.0),
        window_center_ns: raw.histogram.window_center_ns.unwrap_or(0.0),
        window_width_ns: raw.histogram.window_width_ns.unwrap_or(detectors.coincidence_window_ns),
    };
    if !(histogram.bin_width_ns > 0.0) {
        return Err(cfg_err("field `histogram.bin_width_ns`: must be positive"));
    }
    if !(histogram.window_width_ns > 0.0) {
        return Err(cfg_err("field `histogram.window_width_ns`: must be positive"));
    }
    if !(histogram.span_ns >= 0.0) {
        return Err(cfg_err("field `histogram.span_ns`: must be nonnegative"));
    }

    let analysis = AnalysisSettings {
        subtract_accidentals: raw.analysis.subtract_accidentals.unwrap_or(false),
        calibration_trains: raw
            .analysis
            .calibration_trains
            .or(experiment.as_ref().map(|e| e.n_trains))
            .unwrap_or(1_000_000),
    };
    if analysis.calibration_trains == 0 {
        return Err(cfg_err("field `analysis.calibration_trains`: must be at least 1"));
    }

    let fp_curve = match (raw.fp_curve.t2, raw.fp_curve.scan) {
        (Some(_), Some(_)) => return Err(cfg_err("section [fp_curve]: give either `t2` or `scan`, not both")),
        (Some(t2), None) => Some(t2),
        (None, Some(scan)) => Some(parse_scan(&scan)?),
        (None, None) => None,
    }
    .map(|t2_values| -> Result<FpCurveSettings, ConfigError> {
        check_t2_values(&t2_values)?;
        let phi_points = raw.fp_curve.phi_points.unwrap_or(DEFAULT_FP_PHI_POINTS);
        if phi_points < 8 {
            return Err(cfg_err("field `fp_curve.phi_points`: need at least 8"));
        }
        Ok(FpCurveSettings { t2_values, phi_points })
    })
    .transpose()?;

    Ok(RunConfig { experiment, phases, histogram, analysis, fp_curve })
}

fn resolve_analyzer(raw: Option<&RawAnalyzer>) -> Result<AnalyzerConfig, ConfigError> {
    let Some(raw) = raw else {
        return Ok(AnalyzerConfig::TwoWay(TwoWayConfig::default()));
    };
    match raw.kind.as_str() {
        "two-way" => {
            if raw.t2.is_some() || raw.max_loops.is_some() || raw.phase_b.is_some() {
                return Err(cfg_err("section [analyzer]: t2/phase_b/max_loops only apply to kind = \"loop\""));
            }
            let cfg = TwoWayConfig {
                delta: 0.0,
                per_path_amplitude: raw.per_path_amplitude.unwrap_or(crate::analyzers::two_way::DEFAULT_PER_PATH_AMPLITUDE),
                discard_edges: raw.discard_edges.unwrap_or(false),
            };
            cfg.validate().map_err(|e| cfg_err(format!("section [analyzer]: {e}")))?;
            Ok(AnalyzerConfig::TwoWay(cfg))
        }
        "loop" => {
            if raw.per_path_amplitude.is_some() || raw.discard_edges.is_some() {
                return Err(cfg_err("section [analyzer]: per_path_amplitude/discard_edges only apply to kind = \"two-way\""));
            }
            let cfg = LoopConfig {
                t2: raw.t2.unwrap_or(1.0 / 3.0),
                phase_a: 0.0,
                phase_b: raw.phase_b.unwrap_or(0.0),
                max_loops: raw.max_loops.unwrap_or(crate::analyzers::fiber_loop::DEFAULT_MAX_LOOPS),
            };
            cfg.validate().map_err(|e| cfg_err(format!("section [analyzer]: {e}")))?;
            Ok(AnalyzerConfig::Loop(cfg))
        }
        other => Err(cfg_err(format!("field `analyzer.kind`: expected \"two-way\" or \"loop\", got \"{other}\""))),
    }
}

fn resolve_detectors(raw: &RawDetectors) -> Result<DetectorModel, ConfigError> {
    let mut d = match raw.preset.as_deref() {
        None | Some("reference") => DetectorModel::default(),
        Some("ideal") => DetectorModel::ideal(),
        Some(other) => {
            return Err(cfg_err(format!("field `detectors.preset`: expected \"reference\" or \"ideal\", got \"{other}\"")))
        }
    };
    macro_rules! set {
        ($($field:ident),*) => {$( if let Some(v) = raw.$field { d.$field = v; } )*};
    }
    set!(eta_ge, dark_rate_ge, eta_ingaas, noise_prob_ingaas, gate_width_ns, coincidence_window_ns, channel_loss_db, gate_slots);
    d.validate().map_err(|e| cfg_err(format!("section [detectors]: {e}")))?;
    Ok(d)
}
