//! Re-checks the convergence inequalities against the files written by a run.
//!
//! Every check compares an observed quantity with its theoretical bound using
//! `observed ≤ bound·(1 + 1e−8) + 1e−12`, and yields one line per inequality
//! per trial: the tightest occurrence, or a skip with its reason.

use std::collections::HashMap;
use std::f64::consts::E;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::experiment::trace_path;
use crate::export::{Cell, Table};

pub const RELATIVE_SLACK: f64 = 1e-8;
pub const ABSOLUTE_SLACK: f64 = 1e-12;

pub fn within(observed: f64, bound: f64) -> bool {
    observed <= bound * (1.0 + RELATIVE_SLACK) + ABSOLUTE_SLACK
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("cannot read {path}")]
    Read {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("cannot read {path}")]
    Config {
        path: PathBuf,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{path}: {msg}")]
    Malformed { path: PathBuf, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "FAIL",
            Self::Skip => "skip",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub trial: usize,
    pub check: &'static str,
    /// Where the tightest case occurred (iteration `k` or restart `j`).
    pub at: Option<usize>,
    pub bound: f64,
    pub observed: f64,
    pub status: Status,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.lines.iter().filter(|l| l.status == Status::Fail).count()
    }

    pub fn count(&self, status: Status) -> usize {
        self.lines.iter().filter(|l| l.status == status).count()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["trial", "check", "at", "bound", "observed", "status", "note"]);
        for l in &self.lines {
            t.push(vec![
                l.trial.into(),
                l.check.into(),
                l.at.map_or(Cell::Text(String::new()), Cell::from),
                l.bound.into(),
                l.observed.into(),
                l.status.to_string().into(),
                l.note.clone().into(),
            ]);
        }
        t
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            let at = l.at.map_or_else(String::new, |a| format!("@{a}"));
            writeln!(
                f,
                "trial {:>4} {:<20}{:<8} bound {:>24} observed {:>24} {} {}",
                l.trial,
                l.check,
                at,
                lcr_fista::io::format_real(l.bound),
                lcr_fista::io::format_real(l.observed),
                l.status,
                l.note
            )?;
        }
        write!(
            f,
            "{} checks: {} pass, {} fail, {} skipped",
            self.lines.len(),
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Skip)
        )
    }
}

/// Reference values of one trial as read back from `oracle.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub trial: usize,
    pub f_star: f64,
    pub f_r0: f64,
    pub f_x0: f64,
    pub dist_r: f64,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRow {
    pub scheme: String,
    pub k: usize,
    pub objective: f64,
    pub g_dual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRow {
    pub scheme: String,
    pub j: usize,
    pub observed_n: usize,
    pub f_start: f64,
    pub g_start: f64,
    pub f_end: f64,
}

/// Everything the checks need for one trial.
#[derive(Debug, Clone, Default)]
pub struct TrialEvidence {
    pub trial: usize,
    pub oracle: Option<OracleRow>,
    pub iterations: Vec<IterRow>,
    pub restarts: Vec<RestartRow>,
    /// `(scheme, prox calls, final ‖g‖_*)`.
    pub totals: Vec<(String, u64, f64)>,
}

/// Tracks the tightest `observed / allowed` occurrence of one inequality.
struct Tightest {
    check: &'static str,
    worst: Option<(usize, f64, f64)>,
}

impl Tightest {
    fn new(check: &'static str) -> Self {
        Self { check, worst: None }
    }

    fn observe(&mut self, at: usize, bound: f64, observed: f64) {
        let allowed = bound * (1.0 + RELATIVE_SLACK) + ABSOLUTE_SLACK;
        let excess = observed - allowed;
        if self.worst.is_none_or(|(_, b, o)| {
            excess > o - (b * (1.0 + RELATIVE_SLACK) + ABSOLUTE_SLACK)
        }) {
            self.worst = Some((at, bound, observed));
        }
    }

    fn finish(self, trial: usize, empty_note: &str) -> CheckLine {
        match self.worst {
            Some((at, bound, observed)) => CheckLine {
                trial,
                check: self.check,
                at: Some(at),
                bound,
                observed,
                status: if within(observed, bound) { Status::Pass } else { Status::Fail },
                note: String::new(),
            },
            None => skip(trial, self.check, empty_note),
        }
    }
}

fn skip(trial: usize, check: &'static str, note: &str) -> CheckLine {
    CheckLine {
        trial,
        check,
        at: None,
        bound: f64::NAN,
        observed: f64::NAN,
        status: Status::Skip,
        note: note.into(),
    }
}

/// Runs every applicable inequality on one trial.
pub fn check_trial(ev: &TrialEvidence, epsilon: f64) -> Vec<CheckLine> {
    let trial = ev.trial;
    let mut lines = Vec::new();

    let mut accuracy = Tightest::new("final_accuracy");
    for (i, (_, _, g)) in ev.totals.iter().enumerate() {
        accuracy.observe(i, epsilon, *g);
    }
    lines.push(accuracy.finish(trial, "no runs"));

    let Some(o) = &ev.oracle else {
        for check in [
            "fista_rate",
            "fista_gradient_rate",
            "lcr_decrease",
            "lcr_monotone",
            "lcr_nj_bound",
            "lcr_total_bound",
            "growth_monotone",
            "growth_contraction",
        ] {
            lines.push(skip(trial, check, "missing oracle"));
        }
        return lines;
    };

    let plain: Vec<&IterRow> = ev.iterations.iter().filter(|r| r.scheme == "none").collect();
    let mut rate = Tightest::new("fista_rate");
    let mut grad_rate = Tightest::new("fista_gradient_rate");
    for r in &plain {
        let k = r.k as f64;
        rate.observe(r.k, 2.0 * o.dist_r * o.dist_r / ((k + 1.0) * (k + 1.0)), r.objective - o.f_star);
        // row k holds ‖g(y_{k−1})‖_*
        grad_rate.observe(r.k, 4.0 * o.dist_r / (k + 1.0), r.g_dual_norm);
    }
    lines.push(rate.finish(trial, "no 'none' trace"));
    lines.push(grad_rate.finish(trial, "no 'none' trace"));

    let lcr: Vec<&RestartRow> = ev.restarts.iter().filter(|r| r.scheme == "lcr").collect();
    let mut decrease = Tightest::new("lcr_decrease");
    let mut monotone = Tightest::new("lcr_monotone");
    for r in &lcr {
        decrease.observe(r.j, r.f_start - r.f_end, 0.5 * r.g_start * r.g_start);
        monotone.observe(r.j, r.f_start, r.f_end);
    }
    lines.push(decrease.finish(trial, "no 'lcr' trace"));
    lines.push(monotone.finish(trial, "no 'lcr' trace"));

    let Some(mu) = o.mu else {
        for check in ["lcr_nj_bound", "lcr_total_bound", "growth_monotone", "growth_contraction"] {
            lines.push(skip(trial, check, "no growth oracle for this instance"));
        }
        return lines;
    };
    let sqrt_mu = mu.sqrt();

    let mut nj = Tightest::new("lcr_nj_bound");
    let nj_bound = (4.0 * (E + 1.0).sqrt() / sqrt_mu).ceil();
    for r in &lcr {
        nj.observe(r.j, nj_bound, r.observed_n as f64);
    }
    lines.push(nj.finish(trial, "no 'lcr' trace"));

    let mut total = Tightest::new("lcr_total_bound");
    if let Some((_, prox, _)) = ev.totals.iter().find(|(s, _, _)| s == "lcr") {
        let log_term = (1.0 + 2.0 * (o.f_r0 - o.f_star) / (epsilon * epsilon)).ln().ceil();
        total.observe(0, 16.0 / sqrt_mu * log_term, *prox as f64);
    }
    lines.push(total.finish(trial, "no 'lcr' run"));

    let mut mono = Tightest::new("growth_monotone");
    let mut contraction = Tightest::new("growth_contraction");
    let k_mono = (2.0 / sqrt_mu).floor() as usize;
    let k_contract = (2.0 * (E + 1.0).sqrt() / sqrt_mu).floor() as usize;
    for r in &plain {
        if r.k >= k_mono {
            mono.observe(r.k, o.f_x0, r.objective);
        }
        if r.k >= k_contract {
            contraction.observe(r.k, (o.f_x0 - r.objective) / E, r.objective - o.f_star);
        }
    }
    lines.push(mono.finish(trial, "'none' trace shorter than the threshold"));
    lines.push(contraction.finish(trial, "'none' trace shorter than the threshold"));
    lines
}

struct CsvFile {
    path: PathBuf,
    index: HashMap<String, usize>,
    records: Vec<csv::StringRecord>,
}

impl CsvFile {
    fn open(path: PathBuf) -> Result<Self, VerifyError> {
        let wrap = |source| VerifyError::Read {
            path: path.clone(),
            source,
        };
        let mut reader = csv::Reader::from_path(&path).map_err(wrap)?;
        let index = reader
            .headers()
            .map_err(wrap)?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_owned(), i))
            .collect();
        let records = reader.records().collect::<Result<_, _>>().map_err(wrap)?;
        Ok(Self {
            path,
            index,
            records,
        })
    }

    fn field<'a>(&self, rec: &'a csv::StringRecord, name: &str) -> Result<&'a str, VerifyError> {
        self.index
            .get(name)
            .and_then(|&i| rec.get(i))
            .ok_or_else(|| VerifyError::Malformed {
                path: self.path.clone(),
                msg: format!("missing column '{name}'"),
            })
    }

    fn parse<T: std::str::FromStr>(&self, rec: &csv::StringRecord, name: &str) -> Result<T, VerifyError> {
        let raw = self.field(rec, name)?;
        raw.parse().map_err(|_| VerifyError::Malformed {
            path: self.path.clone(),
            msg: format!("bad {name} value '{raw}'"),
        })
    }

    fn optional(&self, rec: &csv::StringRecord, name: &str) -> Result<Option<f64>, VerifyError> {
        match self.field(rec, name)? {
            "" => Ok(None),
            _ => self.parse(rec, name).map(Some),
        }
    }
}

/// Loads the evidence of every trial from a run directory.
pub fn load_evidence(dir: &Path) -> Result<(ExperimentConfig, Vec<TrialEvidence>), VerifyError> {
    let config_path = dir.join("config.json");
    let text = std::fs::read_to_string(&config_path).map_err(|e| VerifyError::Config {
        path: config_path.clone(),
        source: Box::new(e),
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| VerifyError::Config {
        path: config_path.clone(),
        source: Box::new(e),
    })?;

    let oracle = CsvFile::open(dir.join("oracle.csv"))?;
    let mut evidence: Vec<TrialEvidence> = Vec::new();
    for rec in &oracle.records {
        let trial: usize = oracle.parse(rec, "trial")?;
        let row = match oracle.optional(rec, "f_star")? {
            Some(f_star) => Some(OracleRow {
                trial,
                f_star,
                f_r0: oracle.parse(rec, "f_r0")?,
                f_x0: oracle.parse(rec, "f_x0")?,
                dist_r: oracle.parse(rec, "dist_r")?,
                mu: oracle.optional(rec, "mu")?,
            }),
            None => None,
        };
        evidence.push(TrialEvidence {
            trial,
            oracle: row,
            ..Default::default()
        });
    }

    let trials = CsvFile::open(dir.join("trials.csv"))?;
    for rec in &trials.records {
        let trial: usize = trials.parse(rec, "trial")?;
        if let Some(ev) = evidence.iter_mut().find(|e| e.trial == trial) {
            ev.totals.push((
                trials.field(rec, "scheme")?.to_owned(),
                trials.parse(rec, "prox_calls")?,
                trials.parse(rec, "final_g_dual_norm")?,
            ));
        }
    }

    if config.traces {
        for ev in &mut evidence {
            let iters = CsvFile::open(trace_path(dir, ev.trial, "iterations"))?;
            for rec in &iters.records {
                ev.iterations.push(IterRow {
                    scheme: iters.field(rec, "scheme")?.to_owned(),
                    k: iters.parse(rec, "k")?,
                    objective: iters.parse(rec, "objective")?,
                    g_dual_norm: iters.parse(rec, "g_dual_norm")?,
                });
            }
            let restarts = CsvFile::open(trace_path(dir, ev.trial, "restarts"))?;
            for rec in &restarts.records {
                ev.restarts.push(RestartRow {
                    scheme: restarts.field(rec, "scheme")?.to_owned(),
                    j: restarts.parse(rec, "j")?,
                    observed_n: restarts.parse(rec, "observed_n")?,
                    f_start: restarts.parse(rec, "f_start")?,
                    g_start: restarts.parse(rec, "g_start")?,
                    f_end: restarts.parse(rec, "f_end")?,
                });
            }
        }
    }
    Ok((config, evidence))
}

/// Checks every trial of a run directory.
pub fn verify_bounds(dir: &Path) -> Result<VerifyReport, VerifyError> {
    let (config, evidence) = load_evidence(dir)?;
    Ok(VerifyReport {
        lines: evidence
            .iter()
            .flat_map(|ev| check_trial(ev, config.epsilon))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal_start() -> TrialEvidence {
        TrialEvidence {
            trial: 0,
            oracle: Some(OracleRow {
                trial: 0,
                f_star: 1.0,
                f_r0: 1.5,
                f_x0: 1.0,
                dist_r: 0.0,
                mu: Some(0.5),
            }),
            iterations: (1..=6)
                .map(|k| IterRow {
                    scheme: "none".into(),
                    k,
                    objective: 1.0,
                    g_dual_norm: 0.0,
                })
                .collect(),
            restarts: vec![RestartRow {
                scheme: "lcr".into(),
                j: 1,
                observed_n: 0,
                f_start: 1.0,
                g_start: 0.0,
                f_end: 1.0,
            }],
            totals: vec![("none".into(), 2, 0.0), ("lcr".into(), 1, 0.0)],
        }
    }

    #[test]
    fn optimal_start_passes_everything() {
        let lines = check_trial(&optimal_start(), 1e-9);
        assert_eq!(lines.len(), 9);
        assert!(lines.iter().all(|l| l.status == Status::Pass), "{lines:#?}");
    }

    #[test]
    fn violations_are_reported() {
        let mut ev = optimal_start();
        ev.restarts[0].g_start = 1.0;
        ev.iterations[5].objective = 2.0;
        let lines = check_trial(&ev, 1e-9);
        let failed: Vec<_> = lines
            .iter()
            .filter(|l| l.status == Status::Fail)
            .map(|l| l.check)
            .collect();
        assert!(failed.contains(&"lcr_decrease"));
        assert!(failed.contains(&"fista_rate"));
        assert!(failed.contains(&"growth_monotone"));
    }

    #[test]
    fn missing_oracle_skips() {
        let mut ev = optimal_start();
        ev.oracle = None;
        let lines = check_trial(&ev, 1e-9);
        assert_eq!(lines.iter().filter(|l| l.status == Status::Skip).count(), 8);
        ev.oracle = optimal_start().oracle.map(|o| OracleRow { mu: None, ..o });
        let lines = check_trial(&ev, 1e-9);
        assert_eq!(lines.iter().filter(|l| l.status == Status::Skip).count(), 4);
    }
}
