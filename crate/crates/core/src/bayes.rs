//! Gaussian linear model, its Bayes-optimal prediction intervals, and the
//! validity/efficiency comparison against the ridge regression confidence
//! machine under correct and misspecified priors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::conformal::Epsilon;
use crate::error::{Error, Result};
use crate::ridge::{RidgeConfig, MIN_RCOND};
use crate::rrcm::rrcm_predict;
use crate::types::{check_object, Dataset, Example, Interval, LabelSpace};

/// `y = w·x + ξ` with `w ~ N(0, (1/a) I_p)`, `ξ ~ N(0, noise_sd²)` and
/// objects uniform on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModelSpec {
    pub dim: usize,
    pub a_true: f64,
    pub noise_sd: f64,
    pub x_low: Vec<f64>,
    pub x_high: Vec<f64>,
}

impl LinearModelSpec {
    /// Unit noise and objects uniform on `[low, high]^dim`.
    pub fn cube(dim: usize, a_true: f64, low: f64, high: f64) -> Result<Self> {
        let spec = LinearModelSpec {
            dim,
            a_true,
            noise_sd: 1.0,
            x_low: vec![low; dim],
            x_high: vec![high; dim],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(self.a_true > 0.0 && self.a_true.is_finite()) {
            return Err(Error::InvalidParameter("prior precision a must be positive".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter("noise sd must be non-negative".into()));
        }
        if self.x_low.len() != self.dim || self.x_high.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.x_low.len().min(self.x_high.len()),
            });
        }
        if self.x_low.iter().zip(&self.x_high).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidParameter("box bounds need low < high".into()));
        }
        Ok(())
    }
}

impl Default for LinearModelSpec {
    /// Five features on `[-10, 10]⁵`, `a = 1`, unit noise.
    fn default() -> Self {
        LinearModelSpec::cube(5, 1.0, -10.0, 10.0).expect("valid default")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDraw {
    pub weights: Vec<f64>,
    pub training: Dataset,
    pub test: Dataset,
}

pub fn generate_with<R: Rng + ?Sized>(spec: &LinearModelSpec, l: usize, k: usize, rng: &mut R) -> Result<SyntheticDraw> {
    spec.validate()?;
    let prior = Normal::new(0.0, (1.0 / spec.a_true).sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let boxes: Vec<Uniform<f64>> = spec
        .x_low
        .iter()
        .zip(&spec.x_high)
        .map(|(&lo, &hi)| Uniform::new(lo, hi).map_err(|e| Error::InvalidParameter(e.to_string())))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..spec.dim).map(|_| prior.sample(rng)).collect();
    let mut draw = |count: usize| -> Result<Dataset> {
        let examples = (0..count)
            .map(|_| {
                let x: Vec<f64> = boxes.iter().map(|u| u.sample(rng)).collect();
                let y = x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() + noise.sample(rng);
                Example::real(x, y)
            })
            .collect();
        Dataset::new(spec.dim, LabelSpace::RealLine, examples)
    };
    let training = draw(l)?;
    let test = draw(k)?;
    Ok(SyntheticDraw {
        weights,
        training,
        test,
    })
}

/// Draws `w`, then `l` training and `k` test examples, from a seed.
pub fn generate(spec: &LinearModelSpec, l: usize, k: usize, seed: u64) -> Result<SyntheticDraw> {
    generate_with(spec, l, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    StdNormal::standard().inverse_cdf(p)
}

/// Posterior predictive mean and variance of `y` at `object` under the
/// Gaussian linear model with prior precision `a` and noise variance
/// `noise_var`.
pub fn posterior_predictive(training: &Dataset, object: &[f64], a: f64, noise_var: f64) -> Result<(f64, f64)> {
    check_object(object, training.dim())?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("prior precision must be >= 0, got {a}")));
    }
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidParameter("noise variance must be positive".into()));
    }
    let p = training.dim();
    let y = DVector::from_vec(training.real_labels()?);
    let x = DMatrix::from_fn(training.len(), p, |i, j| training.examples()[i].object[j]);
    let mut g = x.transpose() * &x;
    for i in 0..p {
        g[(i, i)] += a * noise_var;
    }
    let eig = g.clone().symmetric_eigenvalues();
    let max = eig.max();
    let rcond = if max > 0.0 { eig.min() / max } else { 0.0 };
    if !(rcond >= MIN_RCOND) {
        return Err(Error::Singular { rcond });
    }
    let chol = g.cholesky().ok_or(Error::Singular { rcond })?;
    let x0 = DVector::from_column_slice(object);
    let mean = x0.dot(&chol.solve(&(x.transpose() * y)));
    let var = noise_var * (1.0 + x0.dot(&chol.solve(&x0)));
    Ok((mean, var))
}

/// Shortest interval of posterior predictive probability `1 - ε` (unit noise).
pub fn bayes_interval(training: &Dataset, object: &[f64], a_assumed: f64, eps: Epsilon) -> Result<Interval> {
    let (mean, var) = posterior_predictive(training, object, a_assumed, 1.0)?;
    let half = normal_quantile(1.0 - eps.value() / 2.0) * var.sqrt();
    Ok(Interval::new(mean - half, mean + half))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    /// Confidence levels `1 - ε`, each in (0, 1).
    pub levels: Vec<f64>,
    pub trials: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub a_values: Vec<f64>,
}

impl Default for ExperimentGrid {
    /// 50 levels equispaced on [0.5, 0.995]; 10 trials of 100 training and
    /// 100 test examples; `a ∈ {1, 1000, 10000}`.
    fn default() -> Self {
        ExperimentGrid {
            levels: (0..50).map(|i| 0.5 + 0.495 * i as f64 / 49.0).collect(),
            trials: 10,
            train_size: 100,
            test_size: 100,
            a_values: vec![1.0, 1000.0, 10000.0],
        }
    }
}

impl ExperimentGrid {
    pub fn epsilons(&self) -> Result<Vec<Epsilon>> {
        self.levels.iter().map(|&l| Epsilon::from_confidence(l)).collect()
    }
}

/// Validity and efficiency curves of one predictor at one assumed `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodCurves {
    /// Fraction of test labels outside the prediction interval, per level.
    pub miscoverage: Vec<f64>,
    /// Mean interval width per level (`+∞` if any interval is unbounded).
    pub mean_width: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonCurves {
    pub levels: Vec<f64>,
    pub a_values: Vec<f64>,
    /// Indexed like `a_values`.
    pub rrcm: Vec<MethodCurves>,
    pub bayes: Vec<MethodCurves>,
    /// Test predictions pooled per curve point.
    pub predictions: usize,
}

/// Runs the comparison: each trial draws a fresh `w` and fresh data; every
/// `a` in the grid is applied to the same draws. Curves pool all test
/// predictions across trials.
pub fn replicate_bayes_comparison(
    grid: &ExperimentGrid,
    spec: &LinearModelSpec,
    seed: u64,
) -> Result<ComparisonCurves> {
    let eps = grid.epsilons()?;
    if eps.is_empty() || grid.a_values.is_empty() || grid.trials == 0 {
        return Err(Error::InvalidParameter("experiment grid is empty".into()));
    }
    let levels = eps.len();
    let mut rrcm_miss = vec![vec![0usize; levels]; grid.a_values.len()];
    let mut rrcm_width = vec![vec![0.0f64; levels]; grid.a_values.len()];
    let mut bayes_miss = rrcm_miss.clone();
    let mut bayes_width = rrcm_width.clone();

    for trial in 0..grid.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let draw = generate_with(spec, grid.train_size, grid.test_size, &mut rng)?;
        for (ai, &a) in grid.a_values.iter().enumerate() {
            let cfg = RidgeConfig::primal(a)?;
            for ex in draw.test.examples() {
                let y = ex.label.as_real().expect("regression data");
                let preds = rrcm_predict(&draw.training, &ex.object, &cfg, &eps)?;
                for (li, pred) in preds.iter().enumerate() {
                    if !pred.hull.is_some_and(|h| h.contains(y)) {
                        rrcm_miss[ai][li] += 1;
                    }
                    rrcm_width[ai][li] += pred.width();
                }
                let (mean, var) = posterior_predictive(&draw.training, &ex.object, a, 1.0)?;
                for (li, e) in eps.iter().enumerate() {
                    let half = normal_quantile(1.0 - e.value() / 2.0) * var.sqrt();
                    let iv = Interval::new(mean - half, mean + half);
                    if !iv.contains(y) {
                        bayes_miss[ai][li] += 1;
                    }
                    bayes_width[ai][li] += iv.width();
                }
            }
        }
    }

    let total = grid.trials * grid.test_size;
    let finish = |miss: Vec<Vec<usize>>, width: Vec<Vec<f64>>| -> Vec<MethodCurves> {
        miss.into_iter()
            .zip(width)
            .map(|(m, w)| MethodCurves {
                miscoverage: m.into_iter().map(|c| c as f64 / total as f64).collect(),
                mean_width: w.into_iter().map(|s| s / total as f64).collect(),
            })
            .collect()
    };
    Ok(ComparisonCurves {
        levels: grid.levels.clone(),
        a_values: grid.a_values.clone(),
        rrcm: finish(rrcm_miss, rrcm_width),
        bayes: finish(bayes_miss, bayes_width),
        predictions: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_draws() {
        let d = generate(&LinearModelSpec::default(), 0, 0, 1).unwrap();
        assert!(d.training.is_empty() && d.test.is_empty());
        assert_eq!(d.weights.len(), 5);
    }

    #[test]
    fn draws_are_reproducible() {
        let spec = LinearModelSpec::default();
        assert_eq!(generate(&spec, 20, 5, 9).unwrap(), generate(&spec, 20, 5, 9).unwrap());
        assert_ne!(generate(&spec, 20, 5, 9).unwrap(), generate(&spec, 20, 5, 10).unwrap());
    }

    #[test]
    fn objects_stay_in_box() {
        let spec = LinearModelSpec::cube(3, 2.0, -1.0, 4.0).unwrap();
        let d = generate(&spec, 200, 0, 3).unwrap();
        assert!(d
            .training
            .examples()
            .iter()
            .flat_map(|e| &e.object)
            .all(|v| (-1.0..4.0).contains(v)));
    }

    #[test]
    fn prior_only_interval() {
        let training = Dataset::empty(3, LabelSpace::RealLine).unwrap();
        let iv = bayes_interval(&training, &[1.0, 1.0, 1.0], 1.0, Epsilon::new(0.05).unwrap()).unwrap();
        // σ² = 1 + ‖x₀‖²/a = 4
        assert!((iv.hi - 1.959963984540054 * 2.0).abs() < 1e-8);
        assert!((iv.lo + iv.hi).abs() < 1e-12);
    }

    #[test]
    fn strong_prior_collapses_to_noise() {
        let d = generate(&LinearModelSpec::default(), 30, 1, 4).unwrap();
        let x = &d.test.examples()[0].object;
        let (mean, var) = posterior_predictive(&d.training, x, 1e12, 1.0).unwrap();
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn improper_prior_on_rank_deficient_data_is_singular() {
        let training = Dataset::new(
            2,
            LabelSpace::RealLine,
            vec![Example::real(vec![1.0, 1.0], 1.0), Example::real(vec![2.0, 2.0], 2.0)],
        )
        .unwrap();
        let err = posterior_predictive(&training, &[0.0, 1.0], 0.0, 1.0).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn default_grid_shape() {
        let g = ExperimentGrid::default();
        assert_eq!(g.levels.len(), 50);
        assert_eq!(g.levels[0], 0.5);
        assert!((g.levels[49] - 0.995).abs() < 1e-15);
        assert!(g.epsilons().is_ok());
    }
}
