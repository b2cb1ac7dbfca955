//! FISTA with a minimum iteration count and a pluggable exit condition.

use crate::error::{Error, Result};
use crate::model::{CompositeProblem, ProxStep, SmoothFunction};

/// Default cap on composite gradient evaluations for one solve.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Momentum sequence `t_0 = 1`, `t_k = ½(1 + sqrt(1 + 4 t_{k−1}²))`.
///
/// Satisfies `t_{k−1}² = t_k² − t_k` and `t_k ≥ (k + 2)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TSequence {
    k: usize,
    t: f64,
}

impl TSequence {
    pub fn new() -> Self {
        Self { k: 0, t: 1.0 }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn current(&self) -> f64 {
        self.t
    }

    /// Moves to `t_{k+1}` and returns it.
    pub fn advance(&mut self) -> f64 {
        self.t = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        self.k += 1;
        self.t
    }
}

impl Default for TSequence {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for TSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.advance())
    }
}

/// Everything an exit condition may look at after iteration `k`.
#[derive(Debug, Clone)]
pub struct IterationState {
    k: usize,
    x_prev: Vec<f64>,
    x_curr: Vec<f64>,
    y_curr: Vec<f64>,
    t_prev: f64,
    t_curr: f64,
    f_history: Vec<f64>,
    last_prox: ProxStep,
}

impl IterationState {
    pub fn k(&self) -> usize {
        self.k
    }

    /// `x_{k−1}`.
    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    /// `x_k`.
    pub fn x_curr(&self) -> &[f64] {
        &self.x_curr
    }

    /// `y_k = x_k + ((t_{k−1} − 1)/t_k)(x_k − x_{k−1})`.
    pub fn y_curr(&self) -> &[f64] {
        &self.y_curr
    }

    /// `(t_{k−1}, t_k)`.
    pub fn momentum(&self) -> (f64, f64) {
        (self.t_prev, self.t_curr)
    }

    /// `f(x_0), …, f(x_k)`.
    pub fn f_history(&self) -> &[f64] {
        &self.f_history
    }

    /// The composite gradient step taken at `y_{k−1}`.
    pub fn last_prox(&self) -> &ProxStep {
        &self.last_prox
    }
}

/// Exit test `E_c`, evaluated once per iteration after the `y`-update.
pub trait ExitCondition {
    fn evaluate(&self, state: &IterationState) -> bool;
}

impl<F: Fn(&IterationState) -> bool> ExitCondition for F {
    fn evaluate(&self, state: &IterationState) -> bool {
        self(state)
    }
}

/// Never fires; the run ends only by early exit or budget.
#[derive(Debug, Clone, Copy, Default)]
pub struct Never;

impl ExitCondition for Never {
    fn evaluate(&self, _: &IterationState) -> bool {
        false
    }
}

/// `‖g(y_{k−1})‖_* ≤ ε`, the usual stopping test of non-restarted FISTA.
#[derive(Debug, Clone, Copy)]
pub struct GradientTolerance(pub f64);

impl ExitCondition for GradientTolerance {
    fn evaluate(&self, state: &IterationState) -> bool {
        state.last_prox.g_dual_norm <= self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaOptions {
    /// Composite gradient evaluations allowed, the initial `z⁺` included.
    pub budget: u64,
    /// Stop as soon as `‖g(y_{k−1})‖_* ≤ ε` (or `‖g(z)‖_* ≤ ε` at the start),
    /// regardless of `k_min` and the exit condition.
    pub early_exit: Option<f64>,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            early_exit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FistaExit {
    /// The exit condition held with `k ≥ k_min`.
    Condition,
    /// Early exit fired inside the loop.
    Tolerance,
    /// Early exit fired on `g(z)`; no iteration was run.
    AtStart,
    BudgetExhausted,
}

/// One iteration record: `(k, f(x_k), ‖g(y_{k−1})‖_*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub g_dual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct FistaResult {
    /// `r = x_n`.
    pub r: Vec<f64>,
    pub n: usize,
    pub exit: FistaExit,
    /// `x_0 = z⁺`.
    pub x0: Vec<f64>,
    /// `f(z)`.
    pub f_start: f64,
    /// `‖g(z)‖_*`.
    pub g_start: f64,
    /// `f(x_0), …, f(x_n)`.
    pub f_history: Vec<f64>,
    /// `‖g(y_{k−1})‖_*` for `k = 1..=n`.
    pub g_history: Vec<f64>,
    pub prox_calls: u64,
}

impl FistaResult {
    pub fn trace(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.g_history
            .iter()
            .enumerate()
            .map(move |(i, &g)| TraceRow {
                k: i + 1,
                objective: self.f_history[i + 1],
                g_dual_norm: g,
            })
    }

    /// `f(r)`.
    pub fn objective(&self) -> f64 {
        *self.f_history.last().expect("history holds f(x_0)")
    }

    /// The gradient norm that ended the run: `‖g(y_{n−1})‖_*`, or `‖g(z)‖_*` when `n = 0`.
    pub fn final_g_dual_norm(&self) -> f64 {
        self.g_history.last().copied().unwrap_or(self.g_start)
    }
}

/// Runs FISTA from `z` until `E_c` holds with `k ≥ k_min`.
///
/// One composite gradient evaluation per iteration, plus one for `x_0 = z⁺`.
pub fn fista<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    z: &[f64],
    k_min: usize,
    exit: &dyn ExitCondition,
    options: &FistaOptions,
) -> Result<FistaResult> {
    if options.budget == 0 {
        return Err(Error::InvalidSpec("FISTA budget must be at least 1".into()));
    }
    let f_start = problem.objective(z);
    let start = problem.composite_gradient_map(z)?;
    let mut prox_calls = 1;
    let g_start = start.g_dual_norm;
    let x0 = start.y_plus.clone();
    let f0 = finite(problem.objective(&x0))?;

    let mut state = IterationState {
        k: 0,
        x_prev: x0.clone(),
        x_curr: x0.clone(),
        y_curr: x0.clone(),
        t_prev: 1.0,
        t_curr: 1.0,
        f_history: vec![f0],
        last_prox: start,
    };
    let mut g_history = Vec::new();
    let mut t = TSequence::new();

    let finish = |state: IterationState, g_history, exit, prox_calls| FistaResult {
        r: state.x_curr,
        n: state.k,
        exit,
        x0,
        f_start,
        g_start,
        f_history: state.f_history,
        g_history,
        prox_calls,
    };

    if options.early_exit.is_some_and(|eps| g_start <= eps) {
        return Ok(finish(state, g_history, FistaExit::AtStart, prox_calls));
    }

    loop {
        if prox_calls >= options.budget {
            return Ok(finish(state, g_history, FistaExit::BudgetExhausted, prox_calls));
        }
        state.k += 1;
        let step = problem.composite_gradient_map(&state.y_curr)?;
        prox_calls += 1;

        let t_prev = t.current();
        let t_curr = t.advance();
        let beta = (t_prev - 1.0) / t_curr;
        let x_new = step.y_plus.clone();
        state.y_curr = x_new
            .iter()
            .zip(&state.x_curr)
            .map(|(xn, xo)| xn + beta * (xn - xo))
            .collect();
        state.x_prev = std::mem::replace(&mut state.x_curr, x_new);
        state.t_prev = t_prev;
        state.t_curr = t_curr;
        state.f_history.push(finite(problem.objective(&state.x_curr))?);
        g_history.push(step.g_dual_norm);
        state.last_prox = step;

        if options
            .early_exit
            .is_some_and(|eps| state.last_prox.g_dual_norm <= eps)
        {
            return Ok(finish(state, g_history, FistaExit::Tolerance, prox_calls));
        }
        if state.k >= k_min && exit.evaluate(&state) {
            return Ok(finish(state, g_history, FistaExit::Condition, prox_calls));
        }
    }
}

fn finite(f: f64) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite("objective"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;
    use crate::model::{Constraint, Quadratic, Regularizer};
    use nalgebra::{DMatrix, DVector};

    fn quadratic_1d(center: f64) -> CompositeProblem<Quadratic> {
        CompositeProblem::new(
            Quadratic::new(DMatrix::from_element(1, 1, 1.0), vec![center]).unwrap(),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap()
    }

    fn ill_conditioned() -> CompositeProblem<Quadratic> {
        CompositeProblem::new(
            Quadratic::new(
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.01])),
                vec![1.0, -2.0],
            )
            .unwrap(),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(2),
        )
        .unwrap()
    }

    #[test]
    fn t_sequence_identities() {
        let mut t = TSequence::new();
        let mut prev = t.current();
        for k in 1..=1000 {
            let curr = t.advance();
            assert_eq!(t.k(), k);
            assert!((prev * prev - (curr * curr - curr)).abs() <= 1e-12 * prev * prev);
            assert!(curr >= (k as f64 + 2.0) / 2.0);
            prev = curr;
        }
    }

    #[test]
    fn exact_curvature_converges_in_one_step() {
        let p = quadratic_1d(0.0);
        let res = fista(&p, &[7.0], 0, &GradientTolerance(1e-9), &FistaOptions::default()).unwrap();
        assert_eq!(res.n, 1);
        assert_eq!(res.r, vec![0.0]);
        assert_eq!(res.exit, FistaExit::Condition);
        assert_eq!(res.prox_calls, 2);
    }

    #[test]
    fn k_min_delays_exit() {
        let p = quadratic_1d(0.0);
        let res = fista(&p, &[7.0], 5, &GradientTolerance(1e-9), &FistaOptions::default()).unwrap();
        assert_eq!(res.n, 5);
        assert_eq!(res.prox_calls, 6);
    }

    #[test]
    fn early_exit_at_start_returns_z_plus() {
        let p = quadratic_1d(0.0);
        let opts = FistaOptions {
            early_exit: Some(1e-9),
            ..Default::default()
        };
        let res = fista(&p, &[0.0], 10, &Never, &opts).unwrap();
        assert_eq!(res.exit, FistaExit::AtStart);
        assert_eq!(res.n, 0);
        assert_eq!(res.prox_calls, 1);
    }

    #[test]
    fn budget_caps_the_loop() {
        let p = ill_conditioned();
        let opts = FistaOptions {
            budget: 10,
            ..Default::default()
        };
        let res = fista(&p, &[0.0, 0.0], 0, &Never, &opts).unwrap();
        assert_eq!(res.exit, FistaExit::BudgetExhausted);
        assert_eq!(res.n, 9);
        assert_eq!(res.prox_calls, 10);
        assert_eq!(res.f_history.len(), res.n + 1);
        assert!(fista(&p, &[0.0, 0.0], 0, &Never, &FistaOptions { budget: 0, early_exit: None }).is_err());
    }

    #[test]
    fn state_reconstructs_y_and_keeps_history() {
        let p = ill_conditioned();
        let check = |s: &IterationState| {
            let (tp, tc) = s.momentum();
            let beta = (tp - 1.0) / tc;
            for i in 0..2 {
                let y = s.x_curr()[i] + beta * (s.x_curr()[i] - s.x_prev()[i]);
                assert!((y - s.y_curr()[i]).abs() <= 1e-15 * y.abs().max(1.0));
            }
            assert_eq!(s.f_history().len(), s.k() + 1);
            assert_eq!(s.last_prox().y_plus, s.x_curr());
            false
        };
        let opts = FistaOptions {
            budget: 50,
            ..Default::default()
        };
        fista(&p, &[3.0, 3.0], 0, &check, &opts).unwrap();
    }
}
