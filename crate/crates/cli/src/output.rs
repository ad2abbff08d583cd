//! CSV tables with a '#' metadata block, plus JSON sidecars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Run metadata shared by the CSV header and the sidecar.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.to_path_buf(), source }
}

/// Writes `<dir>/<command>.csv` and `<dir>/<command>.json`; returns the CSV path.
pub fn write_outputs(dir: &Path, meta: &RunMeta, table: &Table, summary: Value) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(fs_err(dir))?;
    let csv_path = dir.join(format!("{}.csv", meta.command));
    let mut buf = Vec::new();
    writeln!(buf, "# fano {VERSION}").unwrap();
    writeln!(buf, "# command: {}", meta.command).unwrap();
    writeln!(buf, "# config_sha256: {}", meta.config_sha256).unwrap();
    writeln!(buf, "# seed: {}", meta.seed).unwrap();
    writeln!(buf, "# columns: {}", table.columns.join(",")).unwrap();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let wrap = |source| IoError::Csv { path: csv_path.clone(), source };
        w.write_record(&table.columns).map_err(wrap)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(wrap)?;
        }
        w.flush().map_err(fs_err(&csv_path))?;
    }
    fs::write(&csv_path, buf).map_err(fs_err(&csv_path))?;

    let json_path = dir.join(format!("{}.json", meta.command));
    let doc = serde_json::json!({
        "tool": "fano",
        "version": VERSION,
        "command": meta.command,
        "config_sha256": meta.config_sha256,
        "seed": meta.seed,
        "csv": csv_path.file_name().and_then(|s| s.to_str()),
        "columns": table.columns,
        "rows": table.rows.len(),
        "summary": summary,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json values are finite or null");
    fs::write(&json_path, text + "\n").map_err(fs_err(&json_path))?;
    Ok(csv_path)
}

/// Two numeric columns of a CSV written by this tool (or any CSV with a header row).
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let data_err = |msg: String| IoError::Data { path: path.to_path_buf(), msg };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("no column '{name}' (have: {})", headers.iter().collect::<Vec<_>>().join(", "))))
    };
    let (ix, iy) = (find(x)?, find(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| data_err(format!("data row {}: column {} is not a number", n + 1, i + 1)))
        };
        xs.push(parse(ix)?);
        ys.push(parse(iy)?);
    }
    Ok((xs, ys))
}

/// JSON number, or null for non-finite values.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}
