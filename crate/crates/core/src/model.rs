//! The composite problem `min_{x∈X} h(x) + Ψ(x)` and its composite gradient mapping.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::metric::Metric;
use crate::prox::{clip, soft_threshold};
use crate::sparse::CscMatrix;

/// The smooth convex part `h`.
///
/// Implementations must satisfy the descent inequality
/// `h(x) ≤ h(y) + ⟨∇h(y), x−y⟩ + ½‖x−y‖_R²` for the metric they are paired
/// with; [`CompositeProblem::descent_gap`] checks it at a given pair.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `h(x) = ½ (x − c)ᵀ H (x − c)` with a dense symmetric positive semidefinite `H`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    center: DVector<f64>,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        check_dim("quadratic rows", hessian.ncols(), hessian.nrows())?;
        check_dim("quadratic center", hessian.nrows(), center.len())?;
        Ok(Self {
            hessian,
            center: DVector::from_vec(center),
        })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn center(&self) -> &[f64] {
        self.center.as_slice()
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.center;
        0.5 * d.dot(&(&self.hessian * &d))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(x) - &self.center;
        (&self.hessian * d).data.into()
    }
}

/// `h(x) = ‖Ax − b‖₂² / (2N)` for a sparse `N×n` matrix `A`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: CscMatrix,
    b: Vec<f64>,
}

impl LeastSquares {
    pub fn new(a: CscMatrix, b: Vec<f64>) -> Result<Self> {
        check_dim("least-squares rhs", a.rows(), b.len())?;
        if a.rows() == 0 {
            return Err(Error::InvalidSpec("least squares needs at least one row".into()));
        }
        Ok(Self { a, b })
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        r.iter_mut().zip(&self.b).for_each(|(ri, bi)| *ri -= bi);
        r
    }

    /// Dense `H = AᵀA / N`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let a = self.a.to_dense();
        a.transpose() * a / self.a.rows() as f64
    }
}

impl SmoothFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.a.rows() as f64)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let scale = 1.0 / self.a.rows() as f64;
        let mut g = self.a.tr_mul_vec(&self.residual(x));
        g.iter_mut().for_each(|v| *v *= scale);
        g
    }
}

/// Coordinate-wise bounds; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if let Some(i) = lower
            .iter()
            .zip(&upper)
            .position(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::EmptyFeasibleSet(i));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// The nonsmooth part `Ψ`, restricted to kinds with a separable closed-form prox.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `Σ w_i |x_i|` with `w ≥ 0`.
    WeightedL1(Vec<f64>),
    /// Indicator of a box: `0` inside, `+∞` outside.
    Indicator(BoxSet),
}

impl Regularizer {
    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSpec("l1 weights must be finite and nonnegative".into()));
        }
        Ok(Self::WeightedL1(weights))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::WeightedL1(w) => w.iter().zip(x).map(|(wi, xi)| wi * xi.abs()).sum(),
            Self::Indicator(b) => {
                if b.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            Self::WeightedL1(w) => Some(w.len()),
            Self::Indicator(b) => Some(b.dim()),
        }
    }
}

/// The feasible set `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    AllSpace,
    Box(BoxSet),
}

impl Constraint {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::AllSpace => true,
            Self::Box(b) => b.contains(x),
        }
    }
}

/// The pair `(y⁺, g(y))` produced by the composite gradient mapping at `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxStep {
    pub y_plus: Vec<f64>,
    /// `g(y) = R(y − y⁺)`.
    pub g: Vec<f64>,
    /// `‖g(y)‖_*`.
    pub g_dual_norm: f64,
}

/// `min_{x∈X} h(x) + Ψ(x)` with the metric `R` of the descent inequality.
///
/// Immutable once built; safe to share between concurrent solver runs.
#[derive(Debug, Clone)]
pub struct CompositeProblem<S> {
    smooth: S,
    regularizer: Regularizer,
    constraint: Constraint,
    metric: Metric,
    // X ∩ dom Ψ, per coordinate
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<S: SmoothFunction> CompositeProblem<S> {
    pub fn new(
        smooth: S,
        regularizer: Regularizer,
        constraint: Constraint,
        metric: Metric,
    ) -> Result<Self> {
        let n = smooth.dim();
        check_dim("metric", n, metric.dim())?;
        if let Some(d) = regularizer.dim() {
            check_dim("regularizer", n, d)?;
        }
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        let mut intersect = |b: &BoxSet| -> Result<()> {
            check_dim("box constraint", n, b.dim())?;
            for i in 0..n {
                lower[i] = lower[i].max(b.lower[i]);
                upper[i] = upper[i].min(b.upper[i]);
            }
            Ok(())
        };
        if let Constraint::Box(b) = &constraint {
            intersect(b)?;
        }
        if let Regularizer::Indicator(b) = &regularizer {
            intersect(b)?;
        }
        if let Some(i) = (0..n).find(|&i| lower[i] > upper[i]) {
            return Err(Error::EmptyFeasibleSet(i));
        }
        Ok(Self {
            smooth,
            regularizer,
            constraint,
            metric,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &S {
        &self.smooth
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Whether `x ∈ X ∩ dom Ψ`.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    /// `f(x) = h(x) + Ψ(x)`, or `+∞` outside `X`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        if !self.constraint.contains(x) {
            return f64::INFINITY;
        }
        let psi = self.regularizer.value(x);
        if psi == f64::INFINITY {
            return psi;
        }
        self.smooth.value(x) + psi
    }

    /// Computes `y⁺ = argmin_{x∈X} Ψ(x) + ⟨∇h(y), x−y⟩ + ½‖x−y‖_R²` and `g(y) = R(y − y⁺)`.
    ///
    /// With a diagonal `R` the subproblem separates per coordinate: a scaled
    /// gradient step, soft-thresholded by `w_i / R_ii` for the weighted ℓ1 term,
    /// then clipped to the bounds of `X ∩ dom Ψ`.
    pub fn composite_gradient_map(&self, y: &[f64]) -> Result<ProxStep> {
        check_dim("composite gradient point", self.dim(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("composite gradient point"));
        }
        let grad = self.smooth.gradient(y);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient of the smooth part"));
        }
        let r = self.metric.diag();
        let y_plus: Vec<f64> = (0..y.len())
            .map(|i| {
                let step = y[i] - grad[i] / r[i];
                let shrunk = match &self.regularizer {
                    Regularizer::WeightedL1(w) => soft_threshold(step, w[i] / r[i]),
                    _ => step,
                };
                clip(shrunk, self.lower[i], self.upper[i])
            })
            .collect();
        let g: Vec<f64> = (0..y.len()).map(|i| r[i] * (y[i] - y_plus[i])).collect();
        let g_dual_norm = self.metric.dual_norm(&g);
        Ok(ProxStep {
            y_plus,
            g,
            g_dual_norm,
        })
    }

    /// Slack of the descent inequality at `(x, y)`:
    /// `h(y) + ⟨∇h(y), x−y⟩ + ½‖x−y‖_R² − h(x)`. Negative values mean the
    /// metric does not dominate the curvature of `h` along `x − y`.
    pub fn descent_gap(&self, x: &[f64], y: &[f64]) -> f64 {
        let grad = self.smooth.gradient(y);
        let lin: f64 = grad.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).sum();
        let d = self.metric.distance(x, y);
        self.smooth.value(y) + lin + 0.5 * d * d - self.smooth.value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_quadratic(center: f64) -> Quadratic {
        Quadratic::new(DMatrix::from_element(1, 1, 1.0), vec![center]).unwrap()
    }

    #[test]
    fn exact_curvature_step_lands_on_minimizer() {
        let p = CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap();
        let s = p.composite_gradient_map(&[5.0]).unwrap();
        assert_eq!(s.y_plus, vec![0.0]);
        assert_eq!(s.g, vec![5.0]);
        assert_eq!(s.g_dual_norm, 5.0);
    }

    #[test]
    fn scalar_lasso_step_matches_grid_search() {
        let p = CompositeProblem::new(
            scalar_quadratic(3.0),
            Regularizer::weighted_l1(vec![1.0]).unwrap(),
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap();
        let s = p.composite_gradient_map(&[0.0]).unwrap();
        assert_eq!(s.y_plus, vec![2.0]);
        assert_eq!(s.g, vec![-2.0]);

        // Ψ(x) + h'(0)(x − 0) + ½x² with h'(0) = −3, scanned on [−10, 10] at 1e−5
        let model = |x: f64| x.abs() - 3.0 * x + 0.5 * x * x;
        let best = (0..=2_000_000)
            .map(|i| -10.0 + i as f64 * 1e-5)
            .min_by(|a, b| model(*a).total_cmp(&model(*b)))
            .unwrap();
        assert!((best - s.y_plus[0]).abs() <= 1e-5);
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let p = CompositeProblem::new(
            scalar_quadratic(3.0),
            Regularizer::weighted_l1(vec![1.0]).unwrap(),
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap();
        assert_eq!(p.composite_gradient_map(&[2.0]).unwrap().g_dual_norm, 0.0);
    }

    #[test]
    fn objective_examples() {
        let zero = CompositeProblem::new(
            Quadratic::new(DMatrix::identity(2, 2), vec![0.0, 0.0]).unwrap(),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(2),
        )
        .unwrap();
        assert_eq!(zero.objective(&[0.0, 0.0]), 0.0);

        let l1 = CompositeProblem::new(
            Quadratic::new(DMatrix::zeros(2, 2), vec![0.0, 0.0]).unwrap(),
            Regularizer::weighted_l1(vec![1.0, 2.0]).unwrap(),
            Constraint::AllSpace,
            Metric::identity(2),
        )
        .unwrap();
        assert_eq!(l1.objective(&[1.0, -1.0]), 3.0);

        let boxed = CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Indicator(BoxSet::new(vec![0.0], vec![1.0]).unwrap()),
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap();
        assert_eq!(boxed.objective(&[2.0]), f64::INFINITY);
        let s = boxed.composite_gradient_map(&[-4.0]).unwrap();
        assert_eq!(s.y_plus, vec![0.0]);
        assert!(boxed.is_feasible(&s.y_plus));
    }

    #[test]
    fn contract_violations() {
        let p = CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(1),
        )
        .unwrap();
        assert!(matches!(
            p.composite_gradient_map(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            p.composite_gradient_map(&[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::identity(2),
        )
        .is_err());
        let empty = CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Indicator(BoxSet::new(vec![0.0], vec![1.0]).unwrap()),
            Constraint::Box(BoxSet::new(vec![2.0], vec![3.0]).unwrap()),
            Metric::identity(1),
        );
        assert!(matches!(empty, Err(Error::EmptyFeasibleSet(0))));
    }

    #[test]
    fn descent_gap_flags_underestimated_metric() {
        let p = CompositeProblem::new(
            scalar_quadratic(0.0),
            Regularizer::Zero,
            Constraint::AllSpace,
            Metric::new(vec![0.5]).unwrap(),
        )
        .unwrap();
        assert!(p.descent_gap(&[1.0], &[0.0]) < 0.0);
    }

    proptest! {
        #[test]
        fn step_is_feasible_and_g_reconstructs(
            y in prop::collection::vec(-50f64..50.0, 3),
            center in prop::collection::vec(-5f64..5.0, 3),
            w in prop::collection::vec(0f64..2.0, 3),
            r in prop::collection::vec(1f64..4.0, 3),
        ) {
            let p = CompositeProblem::new(
                Quadratic::new(DMatrix::identity(3, 3), center).unwrap(),
                Regularizer::weighted_l1(w).unwrap(),
                Constraint::Box(BoxSet::new(vec![-1.0; 3], vec![2.0; 3]).unwrap()),
                Metric::new(r).unwrap(),
            ).unwrap();
            let s = p.composite_gradient_map(&y).unwrap();
            prop_assert!(p.is_feasible(&s.y_plus));
            let rebuilt = p.metric().apply(
                &y.iter().zip(&s.y_plus).map(|(a, b)| a - b).collect::<Vec<_>>(),
            );
            prop_assert_eq!(rebuilt, s.g.clone());
        }
    }
}
