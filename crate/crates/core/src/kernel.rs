use crate::error::{Error, Result};

/// Positive-definite kernels. Distances between objects are taken in the
/// induced feature space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum KernelSpec {
    #[default]
    Linear,
    /// `(x·x' + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// `exp(-gamma ‖x - x'‖²)`
    Rbf { gamma: f64 },
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn sq_euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, offset } => {
                if degree == 0 {
                    Err(Error::InvalidParameter("polynomial degree must be positive".into()))
                } else if !offset.is_finite() {
                    Err(Error::InvalidParameter("polynomial offset must be finite".into()))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Rbf { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")))
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
            KernelSpec::Rbf { gamma } => (-gamma * sq_euclidean(x, y)).exp(),
        }
    }

    /// `‖F(x) - F(x')‖`. Symmetric in its arguments bit for bit.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => sq_euclidean(x, y).sqrt(),
            _ => {
                let d2 = (self.eval(x, x) + self.eval(y, y)) - 2.0 * self.eval(x, y);
                d2.max(0.0).sqrt()
            }
        }
    }
}
