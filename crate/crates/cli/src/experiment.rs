//! Batch runner: draw a family of instances, compute a reference `f*` per
//! instance, run every selected scheme from `r_0 = 0`, aggregate iteration
//! statistics, and write the results.
//!
//! Output directory layout:
//!
//! ```text
//! config.json                      effective configuration
//! oracle.csv                       per-trial reference values
//! trials.csv                       per-trial, per-scheme totals
//! stats.csv, stats.txt             avg / median / max / min iterations per scheme
//! traces/trial_NNNN_iterations.csv (scheme, j, k, f(x_k), ‖g(y_{k−1})‖_*)
//! traces/trial_NNNN_restarts.csv   one row per inner FISTA call
//! traces/trial_NNNN_lcr_nj.csv     (j, observed n_j, effective n_j)
//! ```
//!
//! Trials run in parallel but each is sequential, and results are gathered in
//! trial order, so the files do not depend on the number of workers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lcr_fista::lasso::generate;
use lcr_fista::oracle::{oracle_fstar, oracle_mu};
use lcr_fista::{solve, RestartRun, RestartTrace};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, FamilyKind, SchemeKind};
use crate::export::{iteration_table, lcr_nj_table, restart_table, Cell, ExportError, Table, TraceFormat};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("cannot create {path}: {source}")]
    CreateDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Reference values for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInfo {
    pub f_star: f64,
    /// `f(r_0)`.
    pub f_r0: f64,
    /// `f(x_0)` with `x_0 = r_0⁺`.
    pub f_x0: f64,
    /// `‖x_0 − x*‖_R`.
    pub dist_r: f64,
    /// Growth parameter, when the instance admits the oracle.
    pub mu: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub kind: SchemeKind,
    pub trace: RestartTrace,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub oracle: Result<OracleInfo, String>,
    pub runs: Vec<SchemeRun>,
    pub errors: Vec<String>,
}

impl TrialResult {
    pub fn is_valid(&self) -> bool {
        self.oracle.is_ok() && self.errors.is_empty() && self.runs.iter().all(|r| r.trace.converged())
    }

    pub fn run(&self, kind: SchemeKind) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

/// Iteration statistics of one scheme over the valid trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeStats {
    pub scheme: SchemeKind,
    pub trials: usize,
    pub average: f64,
    pub median: f64,
    pub max: usize,
    pub min: usize,
    pub average_prox_calls: f64,
}

/// Average, median (mean of the two central values for even counts), max and
/// min of a nonempty sample.
pub fn summarize(values: &[usize]) -> Option<(f64, f64, usize, usize)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let average = sorted.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    Some((average, median, sorted[n - 1], sorted[0]))
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub stats: Vec<SchemeStats>,
}

impl ExperimentReport {
    pub fn invalid_trials(&self) -> Vec<usize> {
        self.trials
            .iter()
            .filter(|t| !t.is_valid())
            .map(|t| t.trial)
            .collect()
    }

    pub fn stats_for(&self, kind: SchemeKind) -> Option<&SchemeStats> {
        self.stats.iter().find(|s| s.scheme == kind)
    }

    /// Plain-text table in the layout of the scheme comparison tables.
    pub fn stats_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "{} trials, N={}, n={}, alpha={}, epsilon={:e}",
            self.trials.len(),
            c.rows,
            c.cols,
            c.alpha,
            c.epsilon
        );
        let _ = write!(out, "{:<14}", "Exit Cond.");
        for s in &self.stats {
            let _ = write!(out, "{:>12}", s.scheme.name());
        }
        out.push('\n');
        type Formatter = fn(&SchemeStats) -> String;
        let rows: [(&str, Formatter); 4] = [
            ("Avg. Iter.", |s| format!("{:.1}", s.average)),
            ("Median Iter.", |s| format!("{}", s.median)),
            ("Max. Iter.", |s| s.max.to_string()),
            ("Min. Iter.", |s| s.min.to_string()),
        ];
        for (label, cell) in rows {
            let _ = write!(out, "{label:<14}");
            for s in &self.stats {
                let _ = write!(out, "{:>12}", cell(s));
            }
            out.push('\n');
        }
        let invalid = self.invalid_trials();
        if !invalid.is_empty() {
            let _ = writeln!(out, "invalid trials (excluded): {invalid:?}");
        }
        out
    }
}

/// Runs one trial: instance, oracle, then each scheme in canonical order.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> TrialResult {
    let spec = config.spec_for_trial(trial);
    let mut result = TrialResult {
        trial,
        seed: spec.seed,
        oracle: Err("not computed".into()),
        runs: Vec::new(),
        errors: Vec::new(),
    };
    let instance = match generate(spec, config.family.into()) {
        Ok(i) => i,
        Err(e) => {
            result.oracle = Err(format!("generation failed: {e}"));
            return result;
        }
    };
    let problem = instance.problem();
    let r0 = vec![0.0; problem.dim()];

    result.oracle = oracle_fstar(problem, config.oracle_epsilon)
        .and_then(|sol| {
            let start = problem.composite_gradient_map(&r0)?;
            let mu = match config.family {
                FamilyKind::LeastSquares => oracle_mu(&instance).ok(),
                FamilyKind::Lasso => None,
            };
            Ok(OracleInfo {
                f_star: sol.f_star,
                f_r0: problem.objective(&r0),
                f_x0: problem.objective(&start.y_plus),
                dist_r: problem.metric().distance(&start.y_plus, &sol.x_star),
                mu,
                iterations: sol.iterations,
            })
        })
        .map_err(|e| e.to_string());
    let Ok(oracle) = result.oracle.clone() else {
        return result;
    };

    for kind in config.scheme_order() {
        let scheme = kind
            .to_scheme(Some(oracle.f_star))
            .expect("the oracle supplies f*");
        let run = RestartRun {
            scheme,
            epsilon: config.epsilon,
            r0: r0.clone(),
            early_exit: !config.strict_exit,
            k_min: config.k_min,
            budget: config.budget,
        };
        match solve(problem, &run) {
            Ok(out) => result.runs.push(SchemeRun {
                kind,
                trace: out.trace,
            }),
            Err(e) => result.errors.push(format!("{kind}: {e}")),
        }
    }
    result
}

pub fn compute_stats(config: &ExperimentConfig, trials: &[TrialResult]) -> Vec<SchemeStats> {
    config
        .scheme_order()
        .into_iter()
        .filter_map(|kind| {
            let runs: Vec<&SchemeRun> = trials
                .iter()
                .filter(|t| t.is_valid())
                .filter_map(|t| t.run(kind))
                .collect();
            let iterations: Vec<usize> = runs.iter().map(|r| r.trace.iterations()).collect();
            let (average, median, max, min) = summarize(&iterations)?;
            let average_prox_calls = runs.iter().map(|r| r.trace.total_prox_calls as f64).sum::<f64>()
                / runs.len() as f64;
            Some(SchemeStats {
                scheme: kind,
                trials: runs.len(),
                average,
                median,
                max,
                min,
                average_prox_calls,
            })
        })
        .collect()
}

/// Runs all trials on a pool of `config.jobs` workers, without writing files.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()?;
    let trials: Vec<TrialResult> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, i))
            .collect()
    });
    let stats = compute_stats(config, &trials);
    Ok(ExperimentReport {
        config: config.clone(),
        trials,
        stats,
    })
}

/// Runs the experiment and writes every output file under `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let report = run_trials(config)?;
    write_report(&report, &config.out)?;
    Ok(report)
}

fn create_dir(path: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(path).map_err(|source| ExperimentError::CreateDir {
        path: path.to_owned(),
        source,
    })
}

fn opt_real(v: Option<f64>) -> Cell {
    v.map_or_else(|| Cell::Text(String::new()), Cell::Real)
}

pub fn stats_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&[
        "scheme",
        "trials",
        "avg_iter",
        "median_iter",
        "max_iter",
        "min_iter",
        "avg_prox_calls",
    ]);
    for s in &report.stats {
        t.push(vec![
            s.scheme.name().into(),
            s.trials.into(),
            s.average.into(),
            s.median.into(),
            s.max.into(),
            s.min.into(),
            s.average_prox_calls.into(),
        ]);
    }
    t
}

pub fn trials_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&[
        "trial",
        "seed",
        "scheme",
        "iterations",
        "prox_calls",
        "restarts",
        "strict_checks",
        "final_g_dual_norm",
        "converged",
        "valid",
    ]);
    for trial in &report.trials {
        for run in &trial.runs {
            let tr = &run.trace;
            t.push(vec![
                trial.trial.into(),
                trial.seed.into(),
                run.kind.name().into(),
                tr.iterations().into(),
                tr.total_prox_calls.into(),
                tr.restarts().into(),
                tr.strict_checks.into(),
                tr.final_g_dual_norm.into(),
                tr.converged().to_string().into(),
                trial.is_valid().to_string().into(),
            ]);
        }
    }
    t
}

pub fn oracle_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&[
        "trial", "seed", "f_star", "f_r0", "f_x0", "dist_r", "mu", "oracle_iterations", "valid",
        "error",
    ]);
    for trial in &report.trials {
        let mut row: Vec<Cell> = vec![trial.trial.into(), trial.seed.into()];
        match &trial.oracle {
            Ok(o) => row.extend([
                o.f_star.into(),
                o.f_r0.into(),
                o.f_x0.into(),
                o.dist_r.into(),
                opt_real(o.mu),
                o.iterations.into(),
            ]),
            Err(_) => row.extend((0..6).map(|_| Cell::Text(String::new()))),
        }
        row.push(trial.is_valid().to_string().into());
        let mut errors = trial.errors.clone();
        if let Err(e) = &trial.oracle {
            errors.insert(0, format!("oracle: {e}"));
        }
        row.push(errors.join("; ").into());
        t.push(row);
    }
    t
}

pub fn trace_path(dir: &Path, trial: usize, what: &str) -> PathBuf {
    dir.join("traces").join(format!("trial_{trial:04}_{what}.csv"))
}

pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), ExperimentError> {
    create_dir(dir)?;
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&report.config).expect("config serializes") + "\n",
    )
    .map_err(|source| ExportError {
        path: config_path.clone(),
        source,
    })?;
    stats_table(report).save(&dir.join("stats.csv"), TraceFormat::Csv)?;
    let stats_txt = dir.join("stats.txt");
    std::fs::write(&stats_txt, report.stats_text()).map_err(|source| ExportError {
        path: stats_txt.clone(),
        source,
    })?;
    trials_table(report).save(&dir.join("trials.csv"), TraceFormat::Csv)?;
    oracle_table(report).save(&dir.join("oracle.csv"), TraceFormat::Csv)?;

    if report.config.traces {
        create_dir(&dir.join("traces"))?;
        for trial in &report.trials {
            let traces = trial.runs.iter().map(|r| &r.trace);
            iteration_table(traces.clone())
                .save(&trace_path(dir, trial.trial, "iterations"), TraceFormat::Csv)?;
            restart_table(traces).save(&trace_path(dir, trial.trial, "restarts"), TraceFormat::Csv)?;
            if let Some(lcr) = trial.run(SchemeKind::Lcr) {
                lcr_nj_table(&lcr.trace).save(&trace_path(dir, trial.trial, "lcr_nj"), TraceFormat::Csv)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_conventions() {
        assert_eq!(summarize(&[]), None);
        assert_eq!(summarize(&[5]), Some((5.0, 5.0, 5, 5)));
        assert_eq!(summarize(&[4, 1, 3, 2]), Some((2.5, 2.5, 4, 1)));
        assert_eq!(summarize(&[1608, 1609]).unwrap().1, 1608.5);
        assert_eq!(summarize(&[3, 1, 2]), Some((2.0, 2.0, 3, 1)));
    }

    #[test]
    fn small_run_is_valid() {
        let config = ExperimentConfig {
            rows: 10,
            cols: 15,
            trials: 3,
            epsilon: 1e-8,
            oracle_epsilon: 1e-11,
            ..Default::default()
        };
        let report = run_trials(&config).unwrap();
        assert!(report.invalid_trials().is_empty());
        assert_eq!(report.stats.len(), 5);
        for s in &report.stats {
            assert!(s.min as f64 <= s.median && s.median <= s.max as f64);
            assert!(s.min as f64 <= s.average && s.average <= s.max as f64);
        }
        assert!(report.stats_text().contains("Avg. Iter."));
    }

    #[test]
    fn budget_exhaustion_marks_trial_invalid() {
        let config = ExperimentConfig {
            rows: 10,
            cols: 15,
            trials: 1,
            epsilon: 1e-8,
            oracle_epsilon: 1e-11,
            schemes: vec![SchemeKind::None],
            budget: 5,
            ..Default::default()
        };
        let report = run_trials(&config).unwrap();
        assert_eq!(report.invalid_trials(), vec![0]);
        assert!(report.stats.is_empty());
    }
}
