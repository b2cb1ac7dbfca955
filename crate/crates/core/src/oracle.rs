//! Reference values used to check the solvers: a high-accuracy `f*`, a KKT
//! residual, and the quadratic growth parameter of strongly convex quadratics.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lasso::LassoProblem;
use crate::metric::Metric;
use crate::model::{CompositeProblem, Constraint, Quadratic, Regularizer, SmoothFunction};
use crate::restart::{lcr_fista, RestartRun, Scheme};

/// Smallest eigenvalues below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    /// Stopping value of `‖g‖_*` reached by the solve.
    pub g_dual_norm: f64,
    /// Largest violation of the optimality conditions, when computable.
    pub kkt_residual: Option<f64>,
    pub iterations: usize,
}

/// `f*` and a minimizer from an LCR-FISTA solve at `tight_eps`, started at 0.
pub fn oracle_fstar<S: SmoothFunction>(
    problem: &CompositeProblem<S>,
    tight_eps: f64,
) -> Result<OracleSolution> {
    let run = RestartRun::new(Scheme::Lcr, tight_eps, vec![0.0; problem.dim()]);
    let out = lcr_fista(problem, &run)?;
    if !out.trace.converged() {
        return Err(Error::OracleUnavailable(format!(
            "LCR-FISTA did not reach {tight_eps:e} within {} composite gradients",
            out.trace.total_prox_calls
        )));
    }
    Ok(OracleSolution {
        f_star: problem.objective(&out.r_star),
        kkt_residual: kkt_residual(problem, &out.r_star),
        g_dual_norm: out.trace.final_g_dual_norm,
        iterations: out.trace.iterations(),
        x_star: out.r_star,
    })
}

/// Largest violation of `0 ∈ ∇h(x) + ∂Ψ(x)` over coordinates, for problems on
/// all of space with `Ψ = 0` or a weighted ℓ1 term:
/// `|∇h_i| − w_i` where `x_i = 0`, and `|∇h_i + sign(x_i) w_i|` elsewhere.
pub fn kkt_residual<S: SmoothFunction>(problem: &CompositeProblem<S>, x: &[f64]) -> Option<f64> {
    if problem.constraint() != &Constraint::AllSpace {
        return None;
    }
    let grad = problem.smooth().gradient(x);
    let residual = |i: usize, w: f64| {
        if x[i] == 0.0 {
            (grad[i].abs() - w).max(0.0)
        } else {
            (grad[i] + x[i].signum() * w).abs()
        }
    };
    match problem.regularizer() {
        Regularizer::Zero => Some((0..x.len()).map(|i| residual(i, 0.0)).fold(0.0, f64::max)),
        Regularizer::WeightedL1(w) => {
            Some((0..x.len()).map(|i| residual(i, w[i])).fold(0.0, f64::max))
        }
        Regularizer::Indicator(_) => None,
    }
}

/// `λ_min(R^{-1/2} H R^{-1/2})`, the growth parameter in the `‖·‖_R` norm of
/// `½(x − x*)ᵀH(x − x*)`.
pub fn oracle_mu_dense(hessian: &DMatrix<f64>, metric: &Metric) -> Result<f64> {
    crate::error::check_dim("hessian", metric.dim(), hessian.nrows())?;
    let inv_sqrt: Vec<f64> = metric.diag().iter().map(|r| 1.0 / r.sqrt()).collect();
    let scaled = DMatrix::from_fn(hessian.nrows(), hessian.ncols(), |i, j| {
        inv_sqrt[i] * hessian[(i, j)] * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if max.is_nan() || max <= 0.0 || min <= RANK_TOLERANCE * max {
        return Err(Error::OracleUnavailable(format!(
            "curvature matrix is rank deficient (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    Ok(min)
}

fn require_unconstrained_quadratic<S: SmoothFunction>(problem: &CompositeProblem<S>) -> Result<()> {
    if problem.regularizer() != &Regularizer::Zero || problem.constraint() != &Constraint::AllSpace
    {
        return Err(Error::OracleUnavailable(
            "growth oracle needs Ψ = 0 on all of space".into(),
        ));
    }
    Ok(())
}

/// Growth parameter of a least-squares instance (`Ψ = 0`, full column rank).
pub fn oracle_mu(instance: &LassoProblem) -> Result<f64> {
    let problem = instance.problem();
    require_unconstrained_quadratic(problem)?;
    oracle_mu_dense(&problem.smooth().hessian(), problem.metric())
}

pub fn oracle_mu_quadratic(problem: &CompositeProblem<Quadratic>) -> Result<f64> {
    require_unconstrained_quadratic(problem)?;
    oracle_mu_dense(problem.smooth().hessian(), problem.metric())
}
