//! Report files: `report.json` (deterministic), `meta.json` (timestamps and
//! environment) and one CSV per table.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Numbers carry 17 significant digits so every f64 round-trips.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) if x.is_infinite() => (if *x > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// A plottable grid or curve. Headers carry their unit, e.g. `v1 [m/s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self {
            name: name.into(),
            headers: headers.iter().map(|h| (*h).into()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Config(format!("csv encoding of {}: {e}", self.name));
        w.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Config(format!("csv encoding of {}: {e}", self.name)))
    }
}

/// Deterministic part of a run: same config and seed give the same bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub demo: String,
    pub seed: u64,
    pub config: Value,
    pub formulas: Vec<String>,
    pub verified: bool,
    pub failures: Vec<String>,
    pub result: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub started_unix_seconds: f64,
    pub finished_unix_seconds: f64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub files: Vec<String>,
}

pub fn unix_seconds() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::Config(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Creates the output directory, or fails if it cannot be written.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes the report and tables in the requested formats, then `meta.json`.
/// Returns the paths written.
pub fn write_outputs(
    out: &Path,
    formats: &[Format],
    report: &Report,
    tables: &[Table],
    started: f64,
) -> Result<Vec<PathBuf>> {
    prepare_dir(out)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = out.join("report.json");
        write_file(&path, &to_json_bytes(report)?)?;
        written.push(path);
    }
    if formats.contains(&Format::Csv) {
        for t in tables {
            let path = out.join(t.file_name());
            write_file(&path, &t.to_csv()?)?;
            written.push(path);
        }
    }
    let finished = unix_seconds();
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        started_unix_seconds: started,
        finished_unix_seconds: finished,
        elapsed_seconds: finished - started,
        threads: rayon::current_num_threads(),
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = out.join("meta.json");
    write_file(&path, &to_json_bytes(&meta)?)?;
    written.push(path);
    Ok(written)
}
