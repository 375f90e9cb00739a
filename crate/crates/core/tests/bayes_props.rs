use conformal_core::bayes::{bayes_interval, generate, normal_quantile, LinearModelSpec};
use conformal_core::{Dataset, Epsilon, LabelSpace};

/// Φ(z) - 1/2 by composite Simpson on the standard normal density.
fn simpson_phi(z: f64) -> f64 {
    let n = 20_000;
    let h = z / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(z);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn quantiles_agree_with_quadrature() {
    for p in [0.6, 0.75, 0.9, 0.95, 0.975, 0.99, 0.995, 0.9995] {
        let z = normal_quantile(p);
        assert!((0.5 + simpson_phi(z) - p).abs() < 1e-10, "p {p}");
    }
    assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-6);
}

#[test]
fn unit_predictive_interval() {
    // no data and an enormous prior precision leave only the unit noise
    let training = Dataset::empty(2, LabelSpace::RealLine).unwrap();
    let iv = bayes_interval(&training, &[0.0, 0.0], 1.0, Epsilon::new(0.05).unwrap()).unwrap();
    assert!((iv.hi - 1.959964).abs() < 1e-4 && (iv.lo + 1.959964).abs() < 1e-4);
}

#[test]
fn generated_noise_has_unit_variance() {
    let spec = LinearModelSpec::default();
    let d = generate(&spec, 100_000, 0, 99).unwrap();
    let resid: Vec<f64> = d
        .training
        .examples()
        .iter()
        .map(|e| e.label.as_real().unwrap() - e.object.iter().zip(&d.weights).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var - 1.0).abs() < 0.03, "{var}");
}
