//! Small statistical helpers used by the analysis and its checks.

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2, "need at least two samples");
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// CDF of Lap(b) at `z`.
pub fn laplace_cdf(b: f64, z: f64) -> f64 {
    if z < 0.0 {
        0.5 * (z / b).exp()
    } else {
        1.0 - 0.5 * (-z / b).exp()
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
/// `samples` is sorted in place.
pub fn ks_statistic<F: FnMut(f64) -> f64>(samples: &mut [f64], mut cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    ks_statistic_sorted(samples, |_, z| cdf(z))
}

/// KS statistic for already-sorted samples. `cdf` receives the sample index
/// as well, so callers can evaluate the CDF incrementally.
pub fn ks_statistic_sorted<F: FnMut(usize, f64) -> f64>(sorted: &[f64], mut cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &z) in sorted.iter().enumerate() {
        let f = cdf(i, z);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic p-value `P(D_n > d)` from the Kolmogorov distribution.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    // Stephens' small-sample correction
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson correlation of paired samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_critical_values() {
        // asymptotic 1% critical value is 1.6276 / sqrt(n)
        let n = 1_000_000;
        let p = ks_pvalue(1.6276 / (n as f64).sqrt(), n);
        assert!((p - 0.01).abs() < 5e-4, "{p}");
        assert!(ks_pvalue(0.0, 10) == 1.0);
        assert!(ks_pvalue(1.0, 1000) < 1e-12);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let mut s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut s, |z| z.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn laplace_cdf_shape() {
        assert_eq!(laplace_cdf(2.0, 0.0), 0.5);
        assert!((laplace_cdf(1.0, 2f64.ln()) - 0.75).abs() < 1e-15);
        assert!((laplace_cdf(1.0, -2f64.ln()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mc_estimate() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/3 / 4)
        assert!((e.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
    }
}
