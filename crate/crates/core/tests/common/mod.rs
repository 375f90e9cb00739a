#![allow(dead_code)]

use conformal_core::{Dataset, Example, LabelSpace, ResidualLine};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn classes(n: usize) -> LabelSpace {
    LabelSpace::classes((0..n).map(|i| format!("c{i}"))).unwrap()
}

/// Two overlapping Gaussian classes in the plane.
pub fn two_class_example<R: Rng + ?Sized>(rng: &mut R) -> Example {
    let y = rng.random_range(0..2usize);
    let centre = if y == 0 { -0.75 } else { 0.75 };
    let x = (0..2)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            centre + z
        })
        .collect::<Vec<f64>>();
    Example::class(x, y)
}

pub fn two_class_stream<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Example> {
    (0..n).map(|_| two_class_example(rng)).collect()
}

pub fn random_regression<R: Rng + ?Sized>(l: usize, p: usize, rng: &mut R) -> Dataset {
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let examples = (0..l)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let noise: f64 = StandardNormal.sample(rng);
            let y = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise;
            Example::real(x, y)
        })
        .collect();
    Dataset::new(p, LabelSpace::RealLine, examples).unwrap()
}

/// Plain count of lines whose absolute residual at `y` is at least the test
/// line's, divided by n.
pub fn naive_line_p(lines: &[ResidualLine], y: f64) -> f64 {
    let test = lines.last().unwrap().at(y).abs();
    lines.iter().filter(|l| l.at(y).abs() >= test).count() as f64 / lines.len() as f64
}
