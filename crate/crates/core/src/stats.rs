//! Kolmogorov–Smirnov statistics for discrete laws.

use serde::Serialize;

/// Outcome of one statistical test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatReport {
    pub test: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} e^{-2 j² λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = sign * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(effective_n: f64, d: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample test of integer-valued data against a CDF given on the
/// support `lo..lo+cdf.len()`. Discrete laws make the test conservative.
pub fn ks_one_sample(name: &str, data: &[i64], lo: i64, cdf: &[f64], alpha: f64) -> StatReport {
    let n = data.len();
    let mut counts = vec![0usize; cdf.len()];
    for &v in data {
        let i = (v - lo).clamp(0, cdf.len() as i64 - 1) as usize;
        counts[i] += 1;
    }
    let mut cum = 0usize;
    let mut d: f64 = 0.0;
    for (i, c) in counts.iter().enumerate() {
        let before = cum as f64 / n as f64;
        cum += c;
        let after = cum as f64 / n as f64;
        let below = if i == 0 { 0.0 } else { cdf[i - 1] };
        d = d.max((after - cdf[i]).abs()).max((before - below).abs());
    }
    let p = p_value(n as f64, d);
    StatReport { test: name.to_string(), n, statistic: d, p_value: p, pass: p > alpha }
}

/// Two-sample test on integer-valued data.
pub fn ks_two_sample(name: &str, a: &[i64], b: &[i64], alpha: f64) -> StatReport {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] == v {
            i += 1;
        }
        while j < nb && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let p = p_value(ne, d);
    StatReport { test: name.to_string(), n: na.min(nb), statistic: d, p_value: p, pass: p > alpha }
}

/// Two-sided z-test that `samples` have mean zero, using the sample variance.
pub fn mean_zero_test(name: &str, samples: &[f64], alpha: f64) -> StatReport {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    let se = (var / n as f64).sqrt();
    let p = if se == 0.0 {
        if mean == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        statrs::function::erf::erfc((mean / se).abs() / std::f64::consts::SQRT_2)
    };
    StatReport { test: name.to_string(), n, statistic: mean, p_value: p, pass: p > alpha }
}

/// Whether `count` successes in `n` trials lie within `k` binomial standard
/// deviations of probability `p`.
pub fn within_binomial_sigma(count: usize, n: usize, p: f64, k: f64) -> (f64, bool) {
    let freq = count as f64 / n as f64;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let z = if sd == 0.0 {
        if (freq - p).abs() < 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (freq - p).abs() / sd
    };
    (z, z <= k)
}
