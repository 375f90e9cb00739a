//! Ridge and kernel ridge regression: fitting, prediction and the
//! residual operator `I - H` of the hat matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Systems whose reciprocal condition number falls below this are refused.
pub const MIN_RCOND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeConfig {
    a: f64,
    kernel: Option<KernelSpec>,
}

impl RidgeConfig {
    /// Primal ridge on raw features.
    pub fn primal(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge parameter must be >= 0, got {a}")));
        }
        Ok(RidgeConfig { a, kernel: None })
    }

    /// Kernel ridge; the ridge parameter must be strictly positive.
    pub fn kernel(a: f64, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel ridge needs a > 0, got {a}"
            )));
        }
        Ok(RidgeConfig {
            a,
            kernel: Some(kernel),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kernel_spec(&self) -> Option<KernelSpec> {
        self.kernel
    }
}

fn design(objects: &[&[f64]], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(objects.len(), dim, |i, j| objects[i][j])
}

fn gram(objects: &[&[f64]], kernel: &KernelSpec) -> DMatrix<f64> {
    let n = objects.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(objects[i], objects[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factor of a symmetric positive semi-definite system, refused when
/// its reciprocal condition number is below [`MIN_RCOND`].
fn factor(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() == 0 {
        return Err(Error::TooFewExamples { needed: 1, found: 0 });
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if !(rcond >= MIN_RCOND) {
        return Err(Error::Singular { rcond });
    }
    m.cholesky().ok_or(Error::Singular { rcond })
}

/// `(XᵀX + aI)` for the primal problem.
fn primal_system(x: &DMatrix<f64>, a: f64) -> DMatrix<f64> {
    let mut g = x.transpose() * x;
    for i in 0..g.nrows() {
        g[(i, i)] += a;
    }
    g
}

/// A fitted ridge or kernel ridge regressor.
#[derive(Clone, Debug)]
pub enum RidgeModel {
    Primal {
        weights: DVector<f64>,
    },
    Dual {
        kernel: KernelSpec,
        coefficients: DVector<f64>,
        support: Vec<Vec<f64>>,
    },
}

impl RidgeModel {
    pub fn fit(objects: &[&[f64]], labels: &[f64], dim: usize, cfg: &RidgeConfig) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::TooFewExamples { needed: 1, found: 0 });
        }
        let y = DVector::from_column_slice(labels);
        match cfg.kernel {
            None => {
                let x = design(objects, dim);
                let chol = factor(primal_system(&x, cfg.a))?;
                let weights = chol.solve(&(x.transpose() * y));
                Ok(RidgeModel::Primal { weights })
            }
            Some(kernel) => {
                let mut k = gram(objects, &kernel);
                for i in 0..k.nrows() {
                    k[(i, i)] += cfg.a;
                }
                let chol = factor(k)?;
                Ok(RidgeModel::Dual {
                    kernel,
                    coefficients: chol.solve(&y),
                    support: objects.iter().map(|o| o.to_vec()).collect(),
                })
            }
        }
    }

    pub fn predict(&self, object: &[f64]) -> f64 {
        match self {
            RidgeModel::Primal { weights } => weights.iter().zip(object).map(|(w, x)| w * x).sum(),
            RidgeModel::Dual {
                kernel,
                coefficients,
                support,
            } => support
                .iter()
                .zip(coefficients.iter())
                .map(|(s, c)| c * kernel.eval(s, object))
                .sum(),
        }
    }
}

/// The linear map `v ↦ (I - H) v` where `H` is the hat matrix of a ridge
/// fit on a fixed design. Residuals of the fit to labels `y` are `(I - H) y`.
pub struct ResidualOperator {
    inner: Operator,
}

enum Operator {
    /// `v - X (XᵀX + aI)⁻¹ Xᵀ v`
    Primal {
        x: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    /// `a (K + aI)⁻¹ v`, using `I - K(K + aI)⁻¹ = a (K + aI)⁻¹`.
    Dual { a: f64, chol: Cholesky<f64, Dyn> },
}

impl ResidualOperator {
    pub fn new(objects: &[&[f64]], dim: usize, cfg: &RidgeConfig) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::TooFewExamples { needed: 1, found: 0 });
        }
        let inner = match cfg.kernel {
            None => {
                let x = design(objects, dim);
                let chol = factor(primal_system(&x, cfg.a))?;
                Operator::Primal { x, chol }
            }
            Some(kernel) => {
                let mut k = gram(objects, &kernel);
                for i in 0..k.nrows() {
                    k[(i, i)] += cfg.a;
                }
                Operator::Dual {
                    a: cfg.a,
                    chol: factor(k)?,
                }
            }
        };
        Ok(ResidualOperator { inner })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        let out = match &self.inner {
            Operator::Primal { x, chol } => {
                let w = chol.solve(&(x.transpose() * &v));
                &v - x * w
            }
            Operator::Dual { a, chol } => chol.solve(&v) * *a,
        };
        out.iter().copied().collect()
    }
}

/// Residuals `y_i - f(x_i)` of the ridge fit to the whole sequence.
pub fn residuals(objects: &[&[f64]], labels: &[f64], dim: usize, cfg: &RidgeConfig) -> Result<Vec<f64>> {
    Ok(ResidualOperator::new(objects, dim, cfg)?.apply(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primal_single_point_closed_form() {
        // w = (xᵀx + a)⁻¹ xᵀ y = 2 / (1 + 1)
        let cfg = RidgeConfig::primal(1.0).unwrap();
        let m = RidgeModel::fit(&[&[1.0]], &[2.0], 1, &cfg).unwrap();
        assert!((m.predict(&[1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_without_ridge_is_singular() {
        let cfg = RidgeConfig::primal(0.0).unwrap();
        let objs: [&[f64]; 2] = [&[1.0, 2.0], &[2.0, 4.0]];
        let err = RidgeModel::fit(&objs, &[1.0, 2.0], 2, &cfg).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn kernel_ridge_requires_positive_a() {
        assert!(RidgeConfig::kernel(0.0, KernelSpec::Linear).is_err());
        assert!(RidgeConfig::primal(-1.0).is_err());
    }

    #[test]
    fn linear_kernel_matches_primal_predictions() {
        let objs: Vec<Vec<f64>> = vec![vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, -1.1], vec![2.0, 0.1]];
        let refs: Vec<&[f64]> = objs.iter().map(Vec::as_slice).collect();
        let y = [1.0, -2.0, 0.5, 3.0];
        let p = RidgeModel::fit(&refs, &y, 2, &RidgeConfig::primal(0.8).unwrap()).unwrap();
        let d = RidgeModel::fit(&refs, &y, 2, &RidgeConfig::kernel(0.8, KernelSpec::Linear).unwrap()).unwrap();
        for q in [[0.2, 0.2], [-1.0, 3.0]] {
            assert!((p.predict(&q) - d.predict(&q)).abs() < 1e-10);
        }
        let rp = residuals(&refs, &y, 2, &RidgeConfig::primal(0.8).unwrap()).unwrap();
        let rd = residuals(&refs, &y, 2, &RidgeConfig::kernel(0.8, KernelSpec::Linear).unwrap()).unwrap();
        for (a, b) in rp.iter().zip(&rd) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
