//! Diagonal metric `R` and the pair of norms it induces.

use crate::error::{check_dim, Error, Result};

/// A diagonal positive-definite matrix `R`.
///
/// Defines the primal norm `‖x‖_R = sqrt(Σ R_ii x_i²)` and its dual
/// `‖v‖_* = sqrt(Σ v_i² / R_ii)`, the scale on which composite gradients are
/// measured.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    diag: Vec<f64>,
}

impl Metric {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::InvalidMetric { index, value });
        }
        Ok(Self { diag })
    }

    pub fn identity(n: usize) -> Self {
        Self { diag: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `‖x‖_R`.
    pub fn norm(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.diag
            .iter()
            .zip(x)
            .map(|(r, xi)| r * xi * xi)
            .sum::<f64>()
            .sqrt()
    }

    /// `‖v‖_* = ‖v‖_{R⁻¹}`.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        self.diag
            .iter()
            .zip(v)
            .map(|(r, vi)| vi * vi / r)
            .sum::<f64>()
            .sqrt()
    }

    /// `R·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(x).map(|(r, xi)| r * xi).collect()
    }

    /// `‖x − y‖_R`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.diag
            .iter()
            .zip(x.iter().zip(y))
            .map(|(r, (a, b))| r * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Checked form of [`Metric::dual_norm`].
pub fn dual_norm(metric: &Metric, v: &[f64]) -> Result<f64> {
    check_dim("dual_norm", metric.dim(), v.len())?;
    Ok(metric.dual_norm(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_positive_entries() {
        assert!(matches!(
            Metric::new(vec![1.0, 0.0]),
            Err(Error::InvalidMetric { index: 1, .. })
        ));
        assert!(Metric::new(vec![f64::INFINITY]).is_err());
        assert!(Metric::new(vec![f64::NAN]).is_err());
        assert!(Metric::new(vec![-2.0]).is_err());
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(dual_norm(&Metric::identity(2), &[3.0, 4.0]).unwrap(), 5.0);
        let r = Metric::new(vec![4.0]).unwrap();
        assert_eq!(dual_norm(&r, &[2.0]).unwrap(), 1.0);
        assert!(dual_norm(&r, &[1.0, 2.0]).is_err());
    }

    fn metric_and_vec() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn dual_of_r_x_is_primal_norm((d, x) in metric_and_vec()) {
            let r = Metric::new(d).unwrap();
            let lhs = r.dual_norm(&r.apply(&x));
            let rhs = r.norm(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn cauchy_schwarz_between_norms((d, x) in metric_and_vec()) {
            let r = Metric::new(d).unwrap();
            let sq: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!(r.norm(&x) * r.dual_norm(&x) >= sq * (1.0 - 1e-12));
        }
    }
}
