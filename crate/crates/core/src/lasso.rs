//! Randomized weighted-Lasso families `min ‖Ax − b‖₂²/(2N) + ‖Wx‖₁` and the
//! Gershgorin metric that makes them satisfy the descent inequality.
//!
//! Random draws come from ChaCha8 with one stream per quantity, so a seed fixes
//! every instance on every platform:
//!
//! | stream | draws |
//! |--------|-------|
//! | 0 | zero/nonzero pattern of `A`, column-major |
//! | 1 | values of the nonzero entries of `A`, same order |
//! | 2 | `b` |
//! | 3 | diagonal of `W` |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::model::{CompositeProblem, Constraint, LeastSquares, Regularizer};
use crate::sparse::CscMatrix;

/// Relative floor applied to Gershgorin row sums so that all-zero columns of
/// `A` still give `R ≻ 0`.
pub const METRIC_FLOOR: f64 = 1e-12;

const PATTERN_STREAM: u64 = 0;
const VALUE_STREAM: u64 = 1;
const RHS_STREAM: u64 = 2;
const WEIGHT_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoSpec {
    /// `N`, rows of `A`.
    pub rows: usize,
    /// `n`, columns of `A`.
    pub cols: usize,
    /// `W_ii ~ Uniform[0, alpha]`.
    pub alpha: f64,
    /// Probability that an entry of `A` is zero.
    pub sparsity: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `n > N`, sparse `A`, weighted ℓ1 term.
    Lasso,
    /// `N ≥ n`, dense `A`, no ℓ1 term: a strongly convex quadratic (for
    /// full-rank draws) used to check growth-dependent bounds.
    LeastSquares,
}

impl LassoSpec {
    pub const DEFAULT_SPARSITY: f64 = 0.9;

    pub fn new(rows: usize, cols: usize, alpha: f64, seed: u64) -> Self {
        Self {
            rows,
            cols,
            alpha,
            sparsity: Self::DEFAULT_SPARSITY,
            seed,
        }
    }

    /// Dense least-squares instance with `Ψ = 0`.
    pub fn least_squares(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            alpha: 0.0,
            sparsity: 0.0,
            seed,
        }
    }

    pub fn with_sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check_common(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidSpec("dimensions must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::InvalidSpec(format!(
                "sparsity must lie in [0, 1), got {}",
                self.sparsity
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "alpha must be finite and nonnegative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn validate(&self, family: Family) -> Result<()> {
        self.check_common()?;
        match family {
            Family::Lasso if self.cols <= self.rows => Err(Error::InvalidSpec(format!(
                "a Lasso instance needs n > N, got N={} n={}",
                self.rows, self.cols
            ))),
            Family::LeastSquares if self.rows < self.cols => Err(Error::InvalidSpec(format!(
                "a least-squares instance needs N >= n, got N={} n={}",
                self.rows, self.cols
            ))),
            Family::LeastSquares if self.alpha != 0.0 => Err(Error::InvalidSpec(
                "a least-squares instance has no l1 term (alpha must be 0)".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<LassoProblem> {
        generate(*self, Family::Lasso)
    }

    pub fn generate_least_squares(&self) -> Result<LassoProblem> {
        generate(*self, Family::LeastSquares)
    }
}

/// A generated instance together with the composite problem it defines.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    family: Family,
    spec: LassoSpec,
    weights: Vec<f64>,
    problem: CompositeProblem<LeastSquares>,
}

impl LassoProblem {
    /// Assembles an instance from its data; the metric is recomputed.
    pub fn from_parts(
        family: Family,
        spec: LassoSpec,
        a: CscMatrix,
        b: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        crate::error::check_dim("weights", a.cols(), weights.len())?;
        let metric = gershgorin_metric(&a);
        let regularizer = if weights.iter().all(|&w| w == 0.0) {
            Regularizer::Zero
        } else {
            Regularizer::weighted_l1(weights.clone())?
        };
        let problem = CompositeProblem::new(
            LeastSquares::new(a, b)?,
            regularizer,
            Constraint::AllSpace,
            metric,
        )?;
        Ok(Self {
            family,
            spec,
            weights,
            problem,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn spec(&self) -> &LassoSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &CscMatrix {
        self.problem.smooth().matrix()
    }

    pub fn rhs(&self) -> &[f64] {
        self.problem.smooth().rhs()
    }

    /// Diagonal of `W`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn problem(&self) -> &CompositeProblem<LeastSquares> {
        &self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws an instance. Pure in `spec`.
pub fn generate(spec: LassoSpec, family: Family) -> Result<LassoProblem> {
    spec.validate(family)?;
    let mut pattern = stream(spec.seed, PATTERN_STREAM);
    let mut values = stream(spec.seed, VALUE_STREAM);
    let mut rhs = stream(spec.seed, RHS_STREAM);
    let mut weights = stream(spec.seed, WEIGHT_STREAM);

    let mut col_ptr = Vec::with_capacity(spec.cols + 1);
    let mut row_idx = Vec::new();
    let mut vals = Vec::new();
    col_ptr.push(0);
    for _ in 0..spec.cols {
        for r in 0..spec.rows {
            if pattern.gen::<f64>() >= spec.sparsity {
                row_idx.push(r);
                vals.push(values.sample::<f64, _>(StandardNormal));
            }
        }
        col_ptr.push(vals.len());
    }
    let a = CscMatrix::new(spec.rows, spec.cols, col_ptr, row_idx, vals)?;
    let b: Vec<f64> = (0..spec.rows)
        .map(|_| rhs.sample::<f64, _>(StandardNormal))
        .collect();
    let w: Vec<f64> = (0..spec.cols)
        .map(|_| {
            if spec.alpha > 0.0 {
                weights.gen_range(0.0..=spec.alpha)
            } else {
                0.0
            }
        })
        .collect();
    LassoProblem::from_parts(family, spec, a, b, w)
}

/// Gershgorin bound on `H = AᵀA/N`: `R_ii = Σ_j |H_ij|`, floored at
/// [`METRIC_FLOOR`] times the largest row sum.
///
/// Rows of `H` are accumulated one at a time from the column and row
/// structure of `A`; `H` itself is never stored.
pub fn gershgorin_metric(a: &CscMatrix) -> Metric {
    let n = a.cols();
    let scale = 1.0 / a.rows() as f64;
    let by_row = a.row_lists();
    let mut acc = vec![0.0; n];
    let mut touched = Vec::new();
    let mut sums = Vec::with_capacity(n);
    for i in 0..n {
        let (rows, vals) = a.column(i);
        for (&r, &a_ri) in rows.iter().zip(vals) {
            for &(j, a_rj) in &by_row[r] {
                if acc[j] == 0.0 {
                    touched.push(j);
                }
                acc[j] += a_ri * a_rj;
            }
        }
        let sum: f64 = touched.iter().map(|&j| acc[j].abs()).sum();
        for j in touched.drain(..) {
            acc[j] = 0.0;
        }
        sums.push(sum * scale);
    }
    let max = sums.iter().copied().fold(0.0, f64::max);
    let floor = if max > 0.0 { METRIC_FLOOR * max } else { 1.0 };
    for s in &mut sums {
        *s = s.max(floor);
    }
    Metric::new(sums).expect("floored Gershgorin sums are positive")
}
