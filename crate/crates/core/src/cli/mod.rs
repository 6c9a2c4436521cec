//! The `timebin` command-line tool.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 configuration or I/O
//! error, 3 analysis failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use config::{check_t2_values, load_file, parse_scan, process_env_overrides, FpCurveSettings, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Analysis(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Analysis(m) => write!(f, "analysis failed: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

#[derive(Debug, Parser)]
#[command(name = "timebin", version, about = "Time-bin entangled photon pair simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a phase sweep and fit the tau = 0 coincidence fringe.
    Fringe {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the TAC histogram of arrival-time differences.
    Histogram {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form fiber-loop coincidence curves.
    #[command(group(ArgGroup::new("source").required(true).args(["t2", "scan_t2", "config"])))]
    FpCurve {
        /// Single coupler transmission probability.
        #[arg(long)]
        t2: Option<f64>,
        /// Scan of t2 values as start:stop:count (inclusive).
        #[arg(long)]
        scan_t2: Option<String>,
        /// Read t2 values and phi points from a config's [fp_curve] section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        phi_points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the brute-force oracle checks.
    Selftest {
        #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
        seed: u64,
        /// Break the reference transfer on purpose to confirm the oracles notice.
        #[arg(long, value_enum)]
        inject_fault: Option<selftest::Fault>,
    },
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let overrides = process_env_overrides()?;
    let loaded = load_file(path, &overrides)?;
    for w in &loaded.warnings {
        eprintln!("{w}");
    }
    Ok(loaded.config)
}

fn fp_settings(
    t2: Option<f64>,
    scan: Option<String>,
    config: Option<PathBuf>,
    phi_points: Option<usize>,
) -> Result<FpCurveSettings, CliError> {
    let mut settings = match (t2, scan, config) {
        (Some(t), None, None) => FpCurveSettings { t2_values: vec![t], phi_points: config::DEFAULT_FP_PHI_POINTS },
        (None, Some(s), None) => FpCurveSettings { t2_values: parse_scan(&s)?, phi_points: config::DEFAULT_FP_PHI_POINTS },
        (None, None, Some(path)) => load(&path)?
            .fp_curve
            .ok_or_else(|| CliError::Config(format!("{}: no [fp_curve] section", path.display())))?,
        _ => return Err(CliError::Config("give exactly one of --t2, --scan-t2, --config".into())),
    };
    if let Some(n) = phi_points {
        settings.phi_points = n;
    }
    check_t2_values(&settings.t2_values)?;
    if settings.phi_points < 8 {
        return Err(CliError::Config(format!("--phi-points must be at least 8, got {}", settings.phi_points)));
    }
    Ok(settings)
}

fn summary_line(fit: &crate::analysis::FitResult) -> String {
    format!("visibility {:.4} +/- {:.4}", fit.visibility, fit.visibility_err)
}

/// Runs a parsed command; the returned code is the process exit status.
pub fn execute(cli: Cli) -> u8 {
    let result: Result<(), CliError> = match cli.command {
        Command::Fringe { config, out } => load(&config).and_then(|cfg| commands::cmd_fringe(&cfg, &out)).map(|r| {
            eprintln!("fringe: {} (window total {})", summary_line(&r.fit), r.window_total);
            if let Some(acc) = &r.accidentals {
                eprintln!("fringe: net {}", summary_line(&acc.net));
            }
        }),
        Command::Histogram { config, out } => load(&config)
            .and_then(|cfg| commands::cmd_histogram(&cfg, &out))
            .map(|r| eprintln!("histogram: window count {}, overflow {}", r.window_count, r.overflow)),
        Command::FpCurve { t2, scan_t2, config, phi_points, out } => fp_settings(t2, scan_t2, config, phi_points)
            .and_then(|s| commands::cmd_fp_curve(&s, &out))
            .map(|r| {
                for (t2, v) in r.visibilities {
                    eprintln!("fp-curve: t2 {t2:.6} visibility {v:.9}");
                }
            }),
        Command::Selftest { seed, inject_fault } => {
            let results = selftest::run_properties(seed, inject_fault);
            let mut failed = false;
            for p in &results {
                if p.passed {
                    println!("PASS {} ({})", p.name, p.detail);
                } else {
                    failed = true;
                    println!("FAIL {} ({}); reproduce with: timebin selftest --seed {seed}", p.name, p.detail);
                }
            }
            return u8::from(failed);
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("timebin: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(execute(cli))
}
