//! Tabular output in CSV or JSON lines. The first line of every file names
//! the columns: the CSV header row, or `{"schema":[...]}` for JSON lines.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lcr_fista::io::format_real;
use lcr_fista::RestartTrace;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct ExportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
    JsonLines,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::JsonLines => "jsonl",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::JsonLines),
            _ => Err(format!("unknown format '{s}' (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Real(v) => format_real(*v),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Real(v) if v.is_finite() => format_real(*v),
            Self::Real(_) => "null".into(),
            Self::Text(s) => serde_json::to_string(s).expect("strings serialize"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W, format: TraceFormat) -> std::io::Result<()> {
        match format {
            TraceFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            TraceFormat::JsonLines => {
                let mut out = std::io::BufWriter::new(out);
                writeln!(
                    out,
                    "{{\"schema\":{}}}",
                    serde_json::to_string(&self.columns).expect("names serialize")
                )?;
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("\"{c}\":{}", v.json()))
                        .collect();
                    writeln!(out, "{{{}}}", fields.join(","))?;
                }
                out.flush()
            }
        }
    }

    pub fn save(&self, path: &Path, format: TraceFormat) -> Result<(), ExportError> {
        let wrap = |source| ExportError {
            path: path.to_owned(),
            source,
        };
        let file = std::fs::File::create(path).map_err(wrap)?;
        self.write(file, format).map_err(wrap)
    }
}

pub const ITERATION_COLUMNS: [&str; 5] = ["scheme", "j", "k", "objective", "g_dual_norm"];
pub const RESTART_COLUMNS: [&str; 9] = [
    "scheme",
    "j",
    "observed_n",
    "effective_n",
    "k_min",
    "f_start",
    "g_start",
    "f_end",
    "exit",
];
pub const LCR_NJ_COLUMNS: [&str; 3] = ["j", "observed_n", "effective_n"];

/// Per-iteration rows `(scheme, j, k, f(x_k), ‖g(y_{k−1})‖_*)`, where `k`
/// counts inner iterations cumulatively across restarts.
pub fn iteration_table<'a>(runs: impl IntoIterator<Item = &'a RestartTrace>) -> Table {
    let mut table = Table::new(&ITERATION_COLUMNS);
    for trace in runs {
        for (i, row) in trace.rows.iter().enumerate() {
            table.push(vec![
                trace.scheme.into(),
                row.j.into(),
                (i + 1).into(),
                row.objective.into(),
                row.g_dual_norm.into(),
            ]);
        }
    }
    table
}

pub fn restart_table<'a>(runs: impl IntoIterator<Item = &'a RestartTrace>) -> Table {
    let mut table = Table::new(&RESTART_COLUMNS);
    for trace in runs {
        for r in &trace.records {
            table.push(vec![
                trace.scheme.into(),
                r.j.into(),
                r.observed_n.into(),
                r.effective_n.into(),
                r.k_min.into(),
                r.f_start.into(),
                r.g_start.into(),
                r.f_end.into(),
                format!("{:?}", r.exit).to_lowercase().into(),
            ]);
        }
    }
    table
}

/// `(j, observed n_j, effective n_j)` of one LCR run.
pub fn lcr_nj_table(trace: &RestartTrace) -> Table {
    let mut table = Table::new(&LCR_NJ_COLUMNS);
    for r in &trace.records {
        table.push(vec![r.j.into(), r.observed_n.into(), r.effective_n.into()]);
    }
    table
}

/// Writes the iteration trace of one run.
pub fn export_trace(path: &Path, trace: &RestartTrace, format: TraceFormat) -> Result<(), ExportError> {
    iteration_table([trace]).save(path, format)
}
