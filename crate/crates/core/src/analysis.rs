//! Error theory for the released histograms: Laplace tail bounds, usefulness
//! conditions, the density of Laplace sums, and expected query errors of the
//! uniform and least-squares estimators.
//!
//! Expected errors that have no convenient closed form are computed either
//! by quadrature against the bilateral gamma density or by Monte Carlo on
//! the exact noise decomposition. Every Monte Carlo routine takes an
//! explicit seed.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::privacy::{NoiseSource, PrivacyParam};
use crate::quadrature::{integrate, integrate_pieces, QuadSettings};
use crate::stats::McEstimate;

/// Smallest Monte Carlo sample count accepted by the simulators.
pub const MIN_MC_SAMPLES: usize = 1000;

/// Lower bound on `Pr[sum_{i<=m} |N_i| <= epsilon]` for i.i.d. `N_i ~ Lap(b)`:
/// `1 - m exp(-epsilon / (m b))`. Returned raw, so it may be negative.
pub fn laplace_sum_tail_bound(m: usize, b: f64, epsilon: f64) -> f64 {
    debug_assert!(m >= 1 && b > 0.0 && epsilon > 0.0);
    let m = m as f64;
    1.0 - m * (-epsilon / (m * b)).exp()
}

/// Smallest `alpha` for which the per-cell release of an `m`-cell cube is
/// `(epsilon, delta)`-useful for counting queries: `m ln(m / delta) / epsilon`.
pub fn cell_usefulness_alpha(m: usize, epsilon: f64, delta: f64) -> f64 {
    debug_assert!(m >= 1 && epsilon > 0.0 && delta > 0.0 && delta < 1.0);
    let m = m as f64;
    m * (m / delta).ln() / epsilon
}

/// Density of the sum of `n` i.i.d. Lap(1/alpha) variables (bilateral gamma).
///
/// The inner integral `int_0^inf v^{n-1} (|z| + v/(2 alpha))^{n-1} e^{-v} dv`
/// is expanded binomially into
/// `sum_k C(n-1,k) |z|^{n-1-k} (2 alpha)^{-k} Gamma(n+k)`, a sum of positive
/// terms evaluated in log space. [`BilateralGamma::inner_by_quadrature`]
/// evaluates the same integral numerically.
#[derive(Debug, Clone)]
pub struct BilateralGamma {
    n: usize,
    alpha: f64,
    log_prefactor: f64,
    // log of C(n-1,k) (2 alpha)^{-k} Gamma(n+k), k = 0..n
    log_terms: Vec<f64>,
}

impl BilateralGamma {
    pub fn new(n: usize, alpha: PrivacyParam) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("bilateral gamma needs n >= 1".into()));
        }
        let a = alpha.value();
        let nf = n as f64;
        let log_prefactor = nf * a.ln() - nf * std::f64::consts::LN_2 - 2.0 * ln_gamma(nf);
        let log_terms = (0..n)
            .map(|k| {
                let kf = k as f64;
                ln_binomial(n - 1, k) - kf * (2.0 * a).ln() + ln_gamma(nf + kf)
            })
            .collect();
        Ok(Self {
            n,
            alpha: a,
            log_prefactor,
            log_terms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn log_inner(&self, abs_z: f64) -> f64 {
        let top = self.n - 1;
        if abs_z == 0.0 {
            return self.log_terms[top];
        }
        let lz = abs_z.ln();
        let logs: Vec<f64> = self
            .log_terms
            .iter()
            .enumerate()
            .map(|(k, t)| t + (top - k) as f64 * lz)
            .collect();
        log_sum_exp(&logs)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        let az = z.abs();
        (self.log_prefactor - self.alpha * az + self.log_inner(az)).exp()
    }

    /// The inner integral computed by adaptive quadrature.
    pub fn inner_by_quadrature(&self, z: f64, settings: &QuadSettings) -> Result<f64> {
        let az = z.abs();
        let n1 = (self.n - 1) as i32;
        let two_a = 2.0 * self.alpha;
        let upper = 4.0 * self.n as f64 + 80.0;
        let r = integrate(
            |v: f64| v.powi(n1) * (az + v / two_a).powi(n1) * (-v).exp(),
            0.0,
            upper,
            settings,
        )?;
        Ok(r.value)
    }

    /// The inner integral from the closed-form sum.
    pub fn inner(&self, z: f64) -> f64 {
        self.log_inner(z.abs()).exp()
    }

    /// `P(Z <= z)` by integrating the density from 0.
    pub fn cdf(&self, z: f64, settings: &QuadSettings) -> Result<f64> {
        let half = integrate(|t| self.pdf(t), 0.0, z.abs(), settings)?.value;
        Ok(if z < 0.0 { 0.5 - half } else { 0.5 + half })
    }

    /// Tail cutoff beyond which the density is negligible.
    pub fn cutoff(&self) -> f64 {
        50.0 * self.n as f64 / self.alpha
    }
}

/// Evaluates the bilateral gamma density `f_n(z, alpha)`.
pub fn bilateral_gamma_pdf(n: usize, alpha: PrivacyParam, z: f64) -> Result<f64> {
    Ok(BilateralGamma::new(n, alpha)?.pdf(z))
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Parameters of one partition/query pair in the error analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessParams {
    /// Max difference between any two true cell counts in the partition.
    pub gamma: f64,
    /// Partition size in cells.
    pub n_p: usize,
    /// Query size in cells, `1..=n_p`.
    pub s: usize,
    pub alpha1: PrivacyParam,
    pub alpha2: PrivacyParam,
    /// Inconsistency between the subcube-based and the cell-based answers.
    pub eta: f64,
}

impl SmoothnessParams {
    pub fn new(gamma: f64, n_p: usize, s: usize, alpha1: f64, alpha2: f64, eta: f64) -> Result<Self> {
        let p = Self {
            gamma,
            n_p,
            s,
            alpha1: PrivacyParam::new(alpha1)?,
            alpha2: PrivacyParam::new(alpha2)?,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// The simulation defaults: `n_p = 11`, `alpha1 = 0.05`, `alpha2 = 0.15`,
    /// `gamma = 5`, `eta = 5`.
    pub fn table_defaults(s: usize) -> Result<Self> {
        Self::new(5.0, 11, s, 0.05, 0.15, 5.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p == 0 || self.s == 0 || self.s > self.n_p {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s <= n_p, got s = {}, n_p = {}",
                self.s, self.n_p
            )));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 || !self.eta.is_finite() {
            return Err(Error::InvalidParameter("gamma must be >= 0 and eta finite".into()));
        }
        Ok(())
    }

    fn min_side(&self) -> usize {
        self.s.min(self.n_p - self.s)
    }
}

/// Whether the usefulness condition for uniform estimation on gamma-smooth
/// data holds: `gamma <= (epsilon + s ln(delta) / (alpha2 n_p)) / min(s, n_p - s)`.
///
/// When the query covers the whole partition the divisor is zero; the
/// condition then holds iff the numerator is nonnegative.
pub fn uniform_usefulness_check(p: &SmoothnessParams, epsilon: f64, delta: f64) -> Result<bool> {
    p.validate()?;
    if epsilon.is_nan() || epsilon <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidParameter("need epsilon > 0 and 0 < delta < 1".into()));
    }
    let numerator = epsilon + p.s as f64 * delta.ln() / (p.alpha2.value() * p.n_p as f64);
    Ok(match p.min_side() {
        0 => numerator >= 0.0,
        side => p.gamma <= numerator / side as f64,
    })
}

/// Upper bound on the expected uniform-estimation error for gamma-smooth
/// data: `gamma min(s, n_p - s) + s / (alpha2 n_p)`.
pub fn uniform_error_bound(p: &SmoothnessParams) -> f64 {
    p.gamma * p.min_side() as f64 + p.s as f64 / (p.alpha2.value() * p.n_p as f64)
}

/// Expected uniform-estimation error for arbitrary data,
/// `int f_s(z, alpha1) |eta + z| dz`, by quadrature.
pub fn uniform_error_general(p: &SmoothnessParams, quad: &QuadSettings) -> Result<f64> {
    p.validate()?;
    let density = BilateralGamma::new(p.s, p.alpha1)?;
    let cutoff = p.eta.abs() + density.cutoff();
    let eta = p.eta;
    let r = integrate_pieces(
        |z| density.pdf(z) * (eta + z).abs(),
        &[-cutoff, 0.0, -eta, cutoff],
        quad,
    )?;
    Ok(r.value)
}

/// Expected least-squares error `E|Q x_LS - Q x|` by Monte Carlo over
/// `s/(n_p+1) N(alpha2) + (n_p+1-s)/(n_p+1) sum_{s} N(alpha1) - s/(n_p+1) sum_{n_p-s} N(alpha1)`.
pub fn ls_error_expected(p: &SmoothnessParams, mc: usize, seed: u64) -> Result<McEstimate> {
    p.validate()?;
    check_mc(mc)?;
    let (n, s) = (p.n_p, p.s);
    let d = (n + 1) as f64;
    let (b1, b2) = (1.0 / p.alpha1.value(), 1.0 / p.alpha2.value());
    let mut src = NoiseSource::new(seed);
    let mut samples = Vec::with_capacity(mc);
    for _ in 0..mc {
        let part = src.laplace(b2)?;
        let mut inside = 0.0;
        for _ in 0..s {
            inside += src.laplace(b1)?;
        }
        let mut outside = 0.0;
        for _ in 0..n - s {
            outside += src.laplace(b1)?;
        }
        let err = s as f64 / d * part + (d - s as f64) / d * inside - s as f64 / d * outside;
        samples.push(err.abs());
    }
    Ok(McEstimate::from_samples(&samples))
}

/// Monte Carlo expected uniform-estimation error on a concrete partition
/// whose true counts are `x`, for the query made of its first `s` cells.
pub fn uniform_error_mc(x: &[f64], s: usize, alpha2: PrivacyParam, mc: usize, seed: u64) -> Result<McEstimate> {
    check_mc(mc)?;
    if s == 0 || s > x.len() {
        return Err(Error::InvalidParameter(format!(
            "query size {s} outside 1..={}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let total: f64 = x.iter().sum();
    let truth: f64 = x[..s].iter().sum();
    let b = 1.0 / alpha2.value();
    let mut src = NoiseSource::new(seed);
    let mut samples = Vec::with_capacity(mc);
    for _ in 0..mc {
        let y_p = total + src.laplace(b)?;
        samples.push((s as f64 / n * y_p - truth).abs());
    }
    Ok(McEstimate::from_samples(&samples))
}

/// [`uniform_error_mc`] on the least favourable gamma-smooth partition: the
/// queried cells sit `gamma` above the rest.
pub fn uniform_error_smooth_mc(p: &SmoothnessParams, mc: usize, seed: u64) -> Result<McEstimate> {
    p.validate()?;
    let x: Vec<f64> = (0..p.n_p).map(|i| if i < p.s { p.gamma } else { 0.0 }).collect();
    uniform_error_mc(&x, p.s, p.alpha2, mc, seed)
}

fn check_mc(mc: usize) -> Result<()> {
    if mc < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {mc}"
        )));
    }
    Ok(())
}

/// Which parameter a simulation sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    QuerySize,
    Alpha1,
    PartitionSize,
    Gamma,
    Eta,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::QuerySize => "s",
            SweepKind::Alpha1 => "alpha1",
            SweepKind::PartitionSize => "np",
            SweepKind::Gamma => "gamma",
            SweepKind::Eta => "eta",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(SweepKind::QuerySize),
            "alpha1" => Ok(SweepKind::Alpha1),
            "np" | "n_p" => Ok(SweepKind::PartitionSize),
            "gamma" => Ok(SweepKind::Gamma),
            "eta" => Ok(SweepKind::Eta),
            other => Err(Error::InvalidParameter(format!("unknown sweep {other:?}"))),
        }
    }
}

/// One point of a simulation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// General-case expected uniform error (quadrature).
    pub e_h: f64,
    /// Gamma-smooth upper bound on the expected uniform error.
    pub max_e_h: f64,
    /// Expected least-squares error (Monte Carlo) and its standard error.
    pub e_ls: f64,
    pub se_ls: f64,
}

/// Grid points and the parameters at each, for a sweep around `base`.
/// The alpha1 sweep keeps `alpha1 + alpha2` fixed at the base total.
pub fn sweep_points(kind: SweepKind, base: &SmoothnessParams) -> Result<Vec<(f64, SmoothnessParams)>> {
    let mut out = Vec::new();
    match kind {
        SweepKind::QuerySize => {
            for s in 1..=base.n_p {
                out.push((s as f64, SmoothnessParams { s, ..*base }));
            }
        }
        SweepKind::Alpha1 => {
            let total = base.alpha1.value() + base.alpha2.value();
            for k in 1..10 {
                let a1 = total * k as f64 / 10.0;
                let p = SmoothnessParams {
                    alpha1: PrivacyParam::new(a1)?,
                    alpha2: PrivacyParam::new(total - a1)?,
                    ..*base
                };
                out.push((a1, p));
            }
        }
        SweepKind::PartitionSize => {
            for n_p in 2..=20 {
                out.push((
                    n_p as f64,
                    SmoothnessParams {
                        n_p,
                        s: n_p / 2,
                        ..*base
                    },
                ));
            }
        }
        SweepKind::Gamma => {
            for g in 0..=10 {
                out.push((
                    g as f64,
                    SmoothnessParams {
                        gamma: g as f64,
                        ..*base
                    },
                ));
            }
        }
        SweepKind::Eta => {
            for e in 0..=10 {
                out.push((e as f64, SmoothnessParams { eta: e as f64, ..*base }));
            }
        }
    }
    for (_, p) in &out {
        p.validate()?;
    }
    Ok(out)
}

/// Evaluates every error measure along a sweep.
pub fn simulate_sweep(
    kind: SweepKind,
    base: &SmoothnessParams,
    mc: usize,
    seed: u64,
    quad: &QuadSettings,
) -> Result<Vec<SweepRow>> {
    sweep_points(kind, base)?
        .into_iter()
        .enumerate()
        .map(|(i, (value, p))| {
            let ls = ls_error_expected(&p, mc, seed.wrapping_add(i as u64))?;
            Ok(SweepRow {
                value,
                e_h: uniform_error_general(&p, quad)?,
                max_e_h: uniform_error_bound(&p),
                e_ls: ls.mean,
                se_ls: ls.se,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> PrivacyParam {
        PrivacyParam::new(a).unwrap()
    }

    #[test]
    fn tail_bound_values() {
        assert!((laplace_sum_tail_bound(1, 1.0, 2f64.ln()) - 0.5).abs() < 1e-15);
        assert!((laplace_sum_tail_bound(2, 1.0, 4.0) - (1.0 - 2.0 * (-2.0f64).exp())).abs() < 1e-15);
        assert!((laplace_sum_tail_bound(5, 1.0, 1e-12) - (1.0 - 5.0)).abs() < 1e-9);
    }

    #[test]
    fn usefulness_alpha_values() {
        assert!((cell_usefulness_alpha(9, 10.0, 0.05) - 9.0 * 180f64.ln() / 10.0).abs() < 1e-12);
        assert!((cell_usefulness_alpha(9, 10.0, 0.05) - 4.673_661_165_801_19).abs() < 1e-9);
        assert!((cell_usefulness_alpha(1, 1.0, (-1.0f64).exp()) - 1.0).abs() < 1e-15);
        let a = cell_usefulness_alpha(16, 100.0, 0.1);
        assert!((cell_usefulness_alpha(16, 200.0, 0.1) - a / 2.0).abs() < 1e-15);
    }

    #[test]
    fn bilateral_gamma_single_term_is_laplace() {
        let g = BilateralGamma::new(1, alpha(0.7)).unwrap();
        for z in [-3.0, -0.1, 0.0, 0.5, 10.0] {
            let exact = 0.35 * (-0.7 * f64::abs(z)).exp();
            assert!((g.pdf(z) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn bilateral_gamma_two_terms_closed_form() {
        // f_2(z) at alpha = 1 is (1 + |z|) e^{-|z|} / 4
        let g = BilateralGamma::new(2, alpha(1.0)).unwrap();
        for z in [0.0, 0.3, 2.0, -5.0] {
            let exact = (1.0 + f64::abs(z)) * (-f64::abs(z)).exp() / 4.0;
            assert!((g.pdf(z) - exact).abs() < 1e-14);
            assert_eq!(g.pdf(z), g.pdf(-z));
        }
    }

    #[test]
    fn inner_integral_two_routes_agree() {
        let q = QuadSettings::default();
        for n in [1, 2, 3, 5, 11] {
            let g = BilateralGamma::new(n, alpha(0.05)).unwrap();
            for z in [0.0, 1.0, 37.5, 400.0] {
                let a = g.inner(z);
                let b = g.inner_by_quadrature(z, &q).unwrap();
                assert!((a - b).abs() <= 1e-8 * a, "n={n} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bilateral_gamma_large_n_is_finite() {
        let g = BilateralGamma::new(60, alpha(0.05)).unwrap();
        let v = g.pdf(100.0);
        assert!(v.is_finite() && v > 0.0);
        assert!(BilateralGamma::new(0, alpha(1.0)).is_err());
    }

    #[test]
    fn smooth_usefulness_and_bounds() {
        let p = SmoothnessParams::table_defaults(5).unwrap();
        assert!((uniform_error_bound(&p) - (25.0 + 5.0 / (0.15 * 11.0))).abs() < 1e-12);
        let whole = SmoothnessParams { gamma: 0.0, s: 11, ..p };
        assert!((uniform_error_bound(&whole) - 1.0 / 0.15).abs() < 1e-12);

        let smooth = SmoothnessParams { gamma: 0.0, ..p };
        assert!(uniform_usefulness_check(&smooth, 100.0, 0.05).unwrap());

        // s = n_p: true iff epsilon + ln(delta)/alpha2 >= 0
        let full = SmoothnessParams { s: 11, ..p };
        let edge = -(0.05f64).ln() / 0.15;
        assert!(uniform_usefulness_check(&full, edge * 1.001, 0.05).unwrap());
        assert!(!uniform_usefulness_check(&full, edge * 0.999, 0.05).unwrap());

        assert!(uniform_usefulness_check(&p, 1.0, 1.5).is_err());
        assert!(SmoothnessParams::table_defaults(12).is_err());
        assert!(SmoothnessParams::table_defaults(0).is_err());
    }

    #[test]
    fn usefulness_crossover() {
        // crossover epsilon* = gamma min(s, n-s) - s ln(delta) / (alpha2 n)
        let p = SmoothnessParams::table_defaults(5).unwrap();
        let delta: f64 = 0.05;
        let crossover = 5.0 * 5.0 - 5.0 * delta.ln() / (0.15 * 11.0);
        let mut flip = None;
        let mut prev = false;
        for i in 0..=20_000 {
            let eps = 1.0 + i as f64 * 0.01;
            let ok = uniform_usefulness_check(&p, eps, delta).unwrap();
            if ok && !prev {
                flip = Some(eps);
            }
            prev = ok;
        }
        let flip = flip.unwrap();
        assert!(flip >= crossover && flip - crossover <= 0.01, "{flip} vs {crossover}");
    }

    #[test]
    fn bound_peaks_mid_partition() {
        let rows: Vec<f64> = (1..=11)
            .map(|s| uniform_error_bound(&SmoothnessParams::table_defaults(s).unwrap()))
            .collect();
        let argmax = rows.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 + 1;
        assert_eq!(argmax, 6);
    }

    #[test]
    fn general_error_limits() {
        let q = QuadSettings::default();
        let p = SmoothnessParams::new(0.0, 11, 1, 0.05, 0.15, 0.0).unwrap();
        let e = uniform_error_general(&p, &q).unwrap();
        assert!((e - 20.0).abs() / 20.0 < 1e-6, "{e}");
        let far = SmoothnessParams { eta: 1e3, ..p };
        let e = uniform_error_general(&far, &q).unwrap();
        assert!((e - 1e3).abs() / 1e3 < 1e-3, "{e}");
    }

    #[test]
    fn ls_error_small_case() {
        // n_p = s = 1, alpha = 1: E|L1 + L2| / 2 = 3/4
        let p = SmoothnessParams::new(0.0, 1, 1, 1.0, 1.0, 0.0).unwrap();
        let e = ls_error_expected(&p, 200_000, 4).unwrap();
        assert!((e.mean - 0.75).abs() < 3.0 * e.se + 1e-3, "{e:?}");
        assert!(ls_error_expected(&p, 999, 4).is_err());
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let p = SmoothnessParams::table_defaults(4).unwrap();
        assert_eq!(
            ls_error_expected(&p, 2000, 1).unwrap(),
            ls_error_expected(&p, 2000, 1).unwrap()
        );
    }

    #[test]
    fn sweep_grid_shapes() {
        let base = SmoothnessParams::table_defaults(5).unwrap();
        let s = sweep_points(SweepKind::QuerySize, &base).unwrap();
        assert_eq!(
            s.iter().map(|r| r.0).collect::<Vec<_>>(),
            (1..=11).map(|v| v as f64).collect::<Vec<_>>()
        );
        for (_, p) in sweep_points(SweepKind::Alpha1, &base).unwrap() {
            assert!((p.alpha1.value() + p.alpha2.value() - 0.2).abs() < 1e-12);
        }
        assert!("np".parse::<SweepKind>().is_ok());
        assert!("x".parse::<SweepKind>().is_err());
    }
}
