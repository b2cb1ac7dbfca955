//! Restarted FISTA: the function, gradient and optimal-value schemes, and the
//! linearly convergent restart (LCR) scheme with its doubling step.
//!
//! Every scheme is a loop of [`fista`] calls, each warm-started at the previous
//! output with the momentum reset. They differ only in the exit condition and
//! in how `k_min` evolves between calls.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::fista::{
    fista, ExitCondition, FistaExit, FistaOptions, GradientTolerance, IterationState,
    DEFAULT_BUDGET,
};
use crate::model::{CompositeProblem, SmoothFunction};

/// `E_c^f`: `f(x_k) ≥ f(x_{k−1})`.
pub fn function_condition(f_history: &[f64]) -> bool {
    match f_history {
        [.., prev, curr] => curr >= prev,
        _ => false,
    }
}

/// `E_c^g`: `⟨g(y_{k−1}), x_{k−1} − x_k⟩ ≤ 0`.
pub fn gradient_condition(g: &[f64], x_prev: &[f64], x_curr: &[f64]) -> bool {
    let inner: f64 = g
        .iter()
        .zip(x_prev.iter().zip(x_curr))
        .map(|(gi, (p, c))| gi * (p - c))
        .sum();
    inner <= 0.0
}

/// `E_c^*`: `f(x_k) − f* ≤ (f(x_0) − f*)/e²`.
pub fn optimal_value_condition(f0: f64, fk: f64, f_star: f64) -> bool {
    fk - f_star <= (f0 - f_star) / (E * E)
}

/// `E_c^l`, with `m = ⌊k/2⌋ + 1`:
/// `f(x_m) − f(x_k) ≤ (f(x_0) − f(x_m))/e` and `f(x_k) ≤ f(x_0)`.
///
/// `f_history` holds `f(x_0), …, f(x_k)`. At `k = 1` we get `m = k` and the
/// first inequality reduces to `0 ≤ (f(x_0) − f(x_1))/e`.
pub fn lcr_condition(f_history: &[f64]) -> bool {
    if f_history.len() < 2 {
        return false;
    }
    let k = f_history.len() - 1;
    let m = k / 2 + 1;
    let (f0, fm, fk) = (f_history[0], f_history[m], f_history[k]);
    fm - fk <= (f0 - fm) / E && fk <= f0
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FunctionScheme;

impl ExitCondition for FunctionScheme {
    fn evaluate(&self, state: &IterationState) -> bool {
        function_condition(state.f_history())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradientScheme;

impl ExitCondition for GradientScheme {
    fn evaluate(&self, state: &IterationState) -> bool {
        gradient_condition(&state.last_prox().g, state.x_prev(), state.x_curr())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimalValueScheme {
    pub f_star: f64,
}

impl ExitCondition for OptimalValueScheme {
    fn evaluate(&self, state: &IterationState) -> bool {
        let f = state.f_history();
        optimal_value_condition(f[0], f[f.len() - 1], self.f_star)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LcrScheme;

impl ExitCondition for LcrScheme {
    fn evaluate(&self, state: &IterationState) -> bool {
        lcr_condition(state.f_history())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    NoRestart,
    Function,
    Gradient,
    OptimalValue { f_star: f64 },
    Lcr,
}

impl Scheme {
    /// Short name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            Self::NoRestart => "none",
            Self::Function => "func",
            Self::Gradient => "grad",
            Self::OptimalValue { .. } => "opt",
            Self::Lcr => "lcr",
        }
    }
}

/// Parameters of one restarted solve.
#[derive(Debug, Clone)]
pub struct RestartRun {
    pub scheme: Scheme,
    /// Target accuracy on `‖g‖_*`.
    pub epsilon: f64,
    pub r0: Vec<f64>,
    /// Abort the whole run as soon as any inner iteration sees
    /// `‖g(y_{k−1})‖_* ≤ ε`. When off, `‖g(r_j)‖_*` is checked only between
    /// restarts, at the cost of one extra composite gradient per restart.
    pub early_exit: bool,
    /// Fixed `k_min` for the function, gradient and optimal-value schemes.
    pub k_min: usize,
    /// Composite gradient evaluations allowed across all restarts.
    pub budget: u64,
}

impl RestartRun {
    pub fn new(scheme: Scheme, epsilon: f64, r0: Vec<f64>) -> Self {
        Self {
            scheme,
            epsilon,
            r0,
            early_exit: true,
            k_min: 0,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn strict(mut self) -> Self {
        self.early_exit = false;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_k_min(mut self, k_min: usize) -> Self {
        self.k_min = k_min;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Scheme::OptimalValue { f_star } = self.scheme {
            if !f_star.is_finite() {
                return Err(Error::InvalidSpec("optimal-value scheme needs a finite f*".into()));
            }
        }
        if self.budget == 0 {
            return Err(Error::InvalidSpec("budget must be at least 1".into()));
        }
        crate::error::check_dim("initial point", dim, self.r0.len())
    }
}

/// One inner FISTA call `r_j = FISTA(r_{j−1}, k_min, E_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub j: usize,
    /// Iterations the call actually ran.
    pub observed_n: usize,
    /// `n_j` after the doubling step; the next call's `k_min` under LCR.
    /// Equal to `observed_n` for the other schemes.
    pub effective_n: usize,
    /// The `k_min` this call was given.
    pub k_min: usize,
    /// `f(r_{j−1})`.
    pub f_start: f64,
    /// `‖g(r_{j−1})‖_*`.
    pub g_start: f64,
    /// `f(r_j)`.
    pub f_end: f64,
    pub exit: FistaExit,
}

/// One inner iteration: `(j, k, f(x_k), ‖g(y_{k−1})‖_*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRow {
    pub j: usize,
    pub k: usize,
    pub objective: f64,
    pub g_dual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub scheme: &'static str,
    pub records: Vec<RestartRecord>,
    pub rows: Vec<IterationRow>,
    pub total_prox_calls: u64,
    /// Extra composite gradients spent on the between-restart check in strict mode.
    pub strict_checks: u64,
    pub status: RunStatus,
    /// The `‖g‖_*` value that satisfied the stopping test.
    pub final_g_dual_norm: f64,
}

impl RestartTrace {
    /// `Σ n_j`: inner iterations over all calls.
    pub fn iterations(&self) -> usize {
        self.records.iter().map(|r| r.observed_n).sum()
    }

    pub fn restarts(&self) -> usize {
        self.records.len()
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub r_star: Vec<f64>,
    pub trace: RestartTrace,
}

/// Standard restart FISTA with `E_c^f`, `E_c^g` or `E_c^*`.
pub fn restart_fista<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    run: &RestartRun,
) -> Result<RestartOutcome> {
    match run.scheme {
        Scheme::Function => drive(problem, run, &FunctionScheme, KMin::Fixed(run.k_min)),
        Scheme::Gradient => drive(problem, run, &GradientScheme, KMin::Fixed(run.k_min)),
        Scheme::OptimalValue { f_star } => {
            drive(problem, run, &OptimalValueScheme { f_star }, KMin::Fixed(run.k_min))
        }
        other => Err(Error::InvalidSpec(format!(
            "restart_fista does not run the '{}' scheme",
            other.name()
        ))),
    }
}

/// LCR-FISTA: `E_c^l` with `k_min = n_{j−1}`, doubled whenever the decrease
/// `f(r_{j−1}) − f(r_j)` exceeds `(f(r_{j−2}) − f(r_{j−1}))/e`.
pub fn lcr_fista<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    run: &RestartRun,
) -> Result<RestartOutcome> {
    drive(problem, run, &LcrScheme, KMin::Doubling)
}

/// Plain FISTA from `r0` stopped by `‖g(y_{k−1})‖_* ≤ ε`, reported as a
/// single-call restart trace.
pub fn no_restart<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    run: &RestartRun,
) -> Result<RestartOutcome> {
    drive(problem, run, &GradientTolerance(run.epsilon), KMin::Single)
}

/// Dispatches on `run.scheme`.
pub fn solve<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    run: &RestartRun,
) -> Result<RestartOutcome> {
    match run.scheme {
        Scheme::NoRestart => no_restart(problem, run),
        Scheme::Lcr => lcr_fista(problem, run),
        _ => restart_fista(problem, run),
    }
}

enum KMin {
    Fixed(usize),
    Doubling,
    Single,
}

fn drive<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    run: &RestartRun,
    exit: &dyn ExitCondition,
    policy: KMin,
) -> Result<RestartOutcome> {
    run.validate(problem.dim())?;
    let early = run.early_exit.then_some(run.epsilon);
    let mut trace = RestartTrace {
        scheme: run.scheme.name(),
        records: Vec::new(),
        rows: Vec::new(),
        total_prox_calls: 0,
        strict_checks: 0,
        status: RunStatus::BudgetExhausted,
        final_g_dual_norm: f64::INFINITY,
    };
    let mut r = run.r0.clone();
    let mut k_min = match policy {
        KMin::Fixed(k) => k,
        KMin::Doubling | KMin::Single => 0,
    };

    loop {
        let remaining = run.budget - trace.total_prox_calls;
        if remaining == 0 {
            break;
        }
        let j = trace.records.len() + 1;
        let options = FistaOptions {
            budget: remaining,
            early_exit: early,
        };
        let res = fista(problem, &r, k_min, exit, &options)?;
        trace.total_prox_calls += res.prox_calls;
        trace.rows.extend(res.trace().map(|row| IterationRow {
            j,
            k: row.k,
            objective: row.objective,
            g_dual_norm: row.g_dual_norm,
        }));

        let f_end = res.objective();
        let mut effective_n = res.n;
        if let (KMin::Doubling, Some(prev)) = (&policy, trace.records.last()) {
            // prev.f_start = f(r_{j−2}), res.f_start = f(r_{j−1})
            if res.f_start - f_end > (prev.f_start - res.f_start) / E {
                effective_n = 2 * k_min;
            }
        }
        trace.records.push(RestartRecord {
            j,
            observed_n: res.n,
            effective_n,
            k_min,
            f_start: res.f_start,
            g_start: res.g_start,
            f_end,
            exit: res.exit,
        });
        if let KMin::Doubling = policy {
            k_min = effective_n;
        }
        let final_g = res.final_g_dual_norm();
        r = res.r;

        match res.exit {
            FistaExit::Tolerance | FistaExit::AtStart => {
                trace.status = RunStatus::Converged;
                trace.final_g_dual_norm = final_g;
                break;
            }
            FistaExit::BudgetExhausted => break,
            FistaExit::Condition => {
                if let KMin::Single = policy {
                    trace.status = RunStatus::Converged;
                    trace.final_g_dual_norm = final_g;
                    break;
                }
                if !run.early_exit {
                    if trace.total_prox_calls >= run.budget {
                        break;
                    }
                    let check = problem.composite_gradient_map(&r)?;
                    trace.total_prox_calls += 1;
                    trace.strict_checks += 1;
                    if check.g_dual_norm <= run.epsilon {
                        trace.status = RunStatus::Converged;
                        trace.final_g_dual_norm = check.g_dual_norm;
                        break;
                    }
                }
                // in early-exit mode the next call's z⁺ step checks ‖g(r_j)‖_*
            }
        }
    }
    Ok(RestartOutcome { r_star: r, trace })
}
