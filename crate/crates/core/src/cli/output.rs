//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Real number with 17 significant digits, round-trip exact.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with `#` comment lines before the header.
pub struct CsvTable {
    comments: Vec<String>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    trailer: Vec<String>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        CsvTable { comments: Vec::new(), header, rows: Vec::new(), trailer: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    /// Comment line written after the data rows.
    pub fn trailer(&mut self, line: impl Into<String>) {
        self.trailer.push(line.into());
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.header).expect("write to memory");
            for r in &self.rows {
                w.write_record(r).expect("write to memory");
            }
            w.flush().expect("write to memory");
        }
        for c in &self.trailer {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        out
    }
}

pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash,
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let outputs: Vec<String> = self.outputs.iter().map(|p| p.display().to_string()).collect();
        writeln!(s, "tool_version = {}", self.tool_version).unwrap();
        writeln!(s, "command = {}", self.command).unwrap();
        writeln!(s, "config_hash = {}", self.config_hash).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "outputs = {}", outputs.join(", ")).unwrap();
        s
    }

    /// Parses the `key = value` form written by [`RunManifest::render`].
    pub fn parse(text: &str) -> Option<RunManifest> {
        let get = |key: &str| {
            text.lines().find_map(|l| {
                let (k, v) = l.split_once('=')?;
                (k.trim() == key).then(|| v.trim().to_string())
            })
        };
        let outputs = get("outputs")?;
        Some(RunManifest {
            tool_version: get("tool_version")?,
            command: get("command")?,
            config_hash: get("config_hash")?,
            seed: get("seed")?.parse().ok()?,
            outputs: outputs.split(", ").filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
        })
    }
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Writes the table and its manifest sidecar; returns the manifest path.
pub fn write_outputs(csv_path: &Path, table: &CsvTable, mut manifest: RunManifest) -> std::io::Result<PathBuf> {
    let mpath = manifest_path(csv_path);
    std::fs::write(csv_path, table.to_bytes())?;
    manifest.outputs = vec![csv_path.to_path_buf(), mpath.clone()];
    std::fs::write(&mpath, manifest.render())?;
    Ok(mpath)
}
