//! Fixtures shared by the benchmarks.

use conformal_core::bayes::{generate, LinearModelSpec, SyntheticDraw};
use conformal_core::{Dataset, Example, LabelSpace};

/// Regression draw from the default 5-dimensional linear model.
pub fn regression(l: usize, k: usize, seed: u64) -> SyntheticDraw {
    generate(&LinearModelSpec::default(), l, k, seed).expect("valid spec")
}

/// Two classes obtained by thresholding the regression label at zero.
pub fn two_class(l: usize, seed: u64) -> Dataset {
    let draw = regression(l, 1, seed);
    let examples = draw
        .training
        .examples()
        .iter()
        .map(|ex| Example::class(ex.object.clone(), (ex.label.as_real().unwrap() > 0.0) as usize))
        .collect();
    Dataset::new(draw.training.dim(), LabelSpace::classes(["neg", "pos"]).unwrap(), examples).unwrap()
}
