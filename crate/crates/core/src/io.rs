//! Problem files: one JSON header line, a Matrix Market coordinate block for
//! `A`, then `b` and the diagonal of `W` as plain arrays.
//!
//! ```text
//! {"format":"lcr-fista-problem","version":1,"family":"lasso","spec":{...},"rows":N,"cols":n,"nnz":k}
//! %%MatrixMarket matrix coordinate real general
//! N n k
//! i j a_ij            (1-based, k lines)
//! b N
//! b_1                 (N lines)
//! w n
//! w_1                 (n lines)
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every `f64`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{Family, LassoProblem, LassoSpec};
use crate::sparse::CscMatrix;

pub const FORMAT_NAME: &str = "lcr-fista-problem";
pub const FORMAT_VERSION: u32 = 1;
const MM_BANNER: &str = "%%MatrixMarket matrix coordinate real general";

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    family: Family,
    spec: LassoSpec,
    rows: usize,
    cols: usize,
    nnz: usize,
}

pub fn write_matrix_market<W: Write>(out: &mut W, a: &CscMatrix) -> Result<()> {
    writeln!(out, "{MM_BANNER}")?;
    writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (r, c, v) in a.triplets() {
        writeln!(out, "{} {} {}", r + 1, c + 1, format_real(v))?;
    }
    Ok(())
}

pub fn write_problem<W: Write>(out: &mut W, instance: &LassoProblem) -> Result<()> {
    let a = instance.matrix();
    let header = Header {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        family: instance.family(),
        spec: *instance.spec(),
        rows: a.rows(),
        cols: a.cols(),
        nnz: a.nnz(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    write_matrix_market(out, a)?;
    writeln!(out, "b {}", instance.rhs().len())?;
    for v in instance.rhs() {
        writeln!(out, "{}", format_real(*v))?;
    }
    writeln!(out, "w {}", instance.weights().len())?;
    for v in instance.weights() {
        writeln!(out, "{}", format_real(*v))?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self, what: &str) -> Result<String> {
        loop {
            self.line_no += 1;
            match self.inner.next() {
                Some(line) => {
                    let line = line?;
                    let trimmed = line.trim();
                    // Matrix Market comments
                    if trimmed.is_empty() || (trimmed.starts_with('%') && !trimmed.starts_with("%%")) {
                        continue;
                    }
                    return Ok(trimmed.to_owned());
                }
                None => return Err(Error::Parse(format!("unexpected end of file, expected {what}"))),
            }
        }
    }

    fn error(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {msg}", self.line_no))
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let line = self.next_line(what)?;
        line.parse().map_err(|_| self.error(format!("bad {what} '{line}'")))
    }

    fn section(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        let line = self.next_line(name)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) || parts.next().and_then(|s| s.parse().ok()) != Some(len) {
            return Err(self.error(format!("expected section header '{name} {len}'")));
        }
        (0..len).map(|_| self.real(name)).collect()
    }
}

/// Reads a Matrix Market coordinate block (real, general).
pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CscMatrix> {
    let mut lines = Lines {
        inner: input.lines(),
        line_no: 0,
    };
    read_mm_block(&mut lines)
}

fn read_mm_block<R: BufRead>(lines: &mut Lines<R>) -> Result<CscMatrix> {
    let banner = lines.next_line("Matrix Market banner")?;
    if !banner.eq_ignore_ascii_case(MM_BANNER) {
        return Err(lines.error(format!("unsupported Matrix Market banner '{banner}'")));
    }
    let size = lines.next_line("Matrix Market size line")?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| lines.error(format!("bad size line '{size}'"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(lines.error(format!("size line needs 3 fields, got '{size}'")));
    };
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = lines.next_line("matrix entry")?;
        let mut parts = line.split_whitespace();
        let entry = (|| {
            let r: usize = parts.next()?.parse().ok()?;
            let c: usize = parts.next()?.parse().ok()?;
            let v: f64 = parts.next()?.parse().ok()?;
            (r >= 1 && c >= 1).then_some((r - 1, c - 1, v))
        })();
        triplets.push(entry.ok_or_else(|| lines.error(format!("bad matrix entry '{line}'")))?);
    }
    CscMatrix::from_triplets(rows, cols, &triplets)
}

pub fn read_problem<R: BufRead>(input: R) -> Result<LassoProblem> {
    let mut lines = Lines {
        inner: input.lines(),
        line_no: 0,
    };
    let header_line = lines.next_line("JSON header")?;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| lines.error(format!("bad header: {e}")))?;
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(lines.error(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let a = read_mm_block(&mut lines)?;
    if (a.rows(), a.cols()) != (header.rows, header.cols) {
        return Err(lines.error("matrix dimensions disagree with the header"));
    }
    let b = lines.section("b", header.rows)?;
    let w = lines.section("w", header.cols)?;
    LassoProblem::from_parts(header.family, header.spec, a, b, w)
}

pub fn save_problem(path: &std::path::Path, instance: &LassoProblem) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_problem(&mut out, instance)?;
    out.flush()?;
    Ok(())
}

pub fn load_problem(path: &std::path::Path) -> Result<LassoProblem> {
    read_problem(std::io::BufReader::new(std::fs::File::open(path)?))
}
