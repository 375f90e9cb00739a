//! Statistics used to judge calibration: binomial fluctuation bands,
//! serial correlation of error indicators and a Kolmogorov–Smirnov test of
//! uniformity.

/// Standard deviation of an error frequency over `n` Bernoulli(ε) trials.
pub fn binomial_sigma(eps: f64, n: usize) -> f64 {
    (eps * (1.0 - eps) / n as f64).sqrt()
}

/// Lag-1 autocorrelation pooled over several indicator sequences. Pairs
/// never straddle two sequences. Returns 0 for constant input.
pub fn lag1_autocorrelation(sequences: &[&[bool]]) -> f64 {
    let total: usize = sequences.iter().map(|s| s.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let ones: usize = sequences.iter().map(|s| s.iter().filter(|&&b| b).count()).sum();
    let mean = ones as f64 / total as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in sequences {
        for (i, &b) in s.iter().enumerate() {
            let d = b as u8 as f64 - mean;
            den += d * d;
            if let Some(&next) = s.get(i + 1) {
                num += d * (next as u8 as f64 - mean);
            }
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Asymptotic Kolmogorov survival function `P(K > x)`.
fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against U[0, 1], with Stephens'
/// small-sample correction of the asymptotic distribution.
pub fn ks_uniform(values: &[f64]) -> KsResult {
    let n = values.len();
    if n == 0 {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let statistic = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            let above = (i + 1) as f64 / nf - x;
            let below = x - i as f64 / nf;
            above.max(below)
        })
        .fold(0.0, f64::max);
    let sqrt_n = nf.sqrt();
    let p_value = kolmogorov_survival(statistic * (sqrt_n + 0.12 + 0.11 / sqrt_n));
    KsResult { statistic, p_value }
}
