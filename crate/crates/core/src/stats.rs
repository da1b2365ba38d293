//! Sample statistics and goodness-of-fit tests used by the verification
//! harness: Kolmogorov-Smirnov (one and two sample), chi-square tests
//! against a known discrete pmf, empirical Laplace transforms, quantiles
//! and tail fits.
//!
//! Every test reports its statistic together with the critical value it
//! was judged against, so rejection decisions can always be recomputed
//! from stored numbers.

use crate::special::{chi_square_sf, chi_square_upper_quantile, compensated_sum, kolmogorov_q};

/// Result of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KsResult {
    /// Sup-distance between the compared distribution functions.
    pub statistic: f64,
    /// Effective sample size (n for one-sample, n1*n2/(n1+n2) for two).
    pub effective_n: f64,
    /// Asymptotic p-value with the Stephens small-sample correction.
    pub p_value: f64,
    /// Critical statistic at the configured level.
    pub critical_value: f64,
    /// Test level the critical value corresponds to.
    pub level: f64,
    pub rejected: bool,
}

fn ks_effective_multiplier(n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    s + 0.12 + 0.11 / s
}

/// Kolmogorov quantile: z with Q(z) = alpha, by bisection.
pub fn kolmogorov_upper_quantile(alpha: f64) -> f64 {
    let mut lo = 1e-3;
    let mut hi = 4.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_q(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ks_result(statistic: f64, n_eff: f64, level: f64) -> KsResult {
    let mult = ks_effective_multiplier(n_eff);
    let p_value = kolmogorov_q(mult * statistic);
    let critical_value = kolmogorov_upper_quantile(level) / mult;
    KsResult {
        statistic,
        effective_n: n_eff,
        p_value,
        critical_value,
        level,
        rejected: statistic > critical_value,
    }
}

fn sort_unstable(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_unstable_by(f64::total_cmp);
    xs
}

/// One-sample KS test of `samples` against the distribution function `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> KsResult {
    assert!(!samples.is_empty());
    let xs = sort_unstable(samples.to_vec());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    ks_result(d, n, level)
}

/// Two-sample KS test via a single merge walk over both sorted samples.
pub fn ks_two_sample(sample1: &[f64], sample2: &[f64], level: f64) -> KsResult {
    assert!(!sample1.is_empty() && !sample2.is_empty());
    let a = sort_unstable(sample1.to_vec());
    let b = sort_unstable(sample2.to_vec());
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    ks_result(d, n1 * n2 / (n1 + n2), level)
}

/// Result of a chi-square fit against a fully specified discrete law.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub critical_value: f64,
    pub level: f64,
    pub rejected: bool,
    pub bins: usize,
}

/// Chi-square goodness of fit of integer observations against the pmf
/// returned by `pmf(k)` (which must sum to 1 over k = 0, 1, ...). Adjacent
/// cells are pooled until every bin has expected count >= `min_expected`;
/// lower and upper tails are folded into the edge bins.
pub fn chi_square_gof(
    observations: &[u64],
    pmf: impl Fn(u64) -> f64,
    min_expected: f64,
    level: f64,
) -> ChiSquareResult {
    assert!(!observations.is_empty());
    let n = observations.len() as f64;
    let max_obs = *observations.iter().max().unwrap();

    // Upper support bound: extend past the observed range until the
    // remaining tail mass is negligible relative to one pooled bin.
    let mut upper = max_obs;
    let mut tail_mass: f64 = 1.0 - (0..=upper).map(&pmf).sum::<f64>();
    while tail_mass * n > min_expected / 10.0 && upper < max_obs + 100_000 {
        upper += (upper / 4).max(16);
        tail_mass = 1.0 - (0..=upper).map(&pmf).sum::<f64>();
    }

    let mut counts = vec![0u64; (upper + 2) as usize];
    for &obs in observations {
        let idx = obs.min(upper + 1) as usize;
        counts[idx] += 1;
    }
    let mut expected: Vec<f64> = (0..=upper).map(|k| n * pmf(k)).collect();
    expected.push(n * tail_mass.max(0.0));

    // Pool left to right.
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (k, &e) in expected.iter().enumerate() {
        acc_obs += counts[k] as f64;
        acc_exp += e;
        if acc_exp >= min_expected {
            pooled.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            pooled.push((acc_obs, acc_exp));
        }
    }

    let statistic: f64 = pooled
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let dof = pooled.len().saturating_sub(1).max(1);
    let critical_value = chi_square_upper_quantile(level, dof as f64);
    ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof as f64),
        critical_value,
        level,
        rejected: statistic > critical_value,
        bins: pooled.len(),
    }
}

/// Total-variation distance between the empirical pmf of `samples` and the
/// reference `pmf`: 0.5 * sum_k |p_hat(k) - p(k)|, including reference mass
/// on values never observed.
pub fn total_variation_to_pmf(samples: &[u64], pmf: impl Fn(u64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    let n = samples.len() as f64;
    let max_obs = *samples.iter().max().unwrap();
    let mut counts = vec![0u64; (max_obs + 1) as usize];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let mut sum_abs = 0.0;
    let mut covered = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let p = pmf(k as u64);
        sum_abs += (c as f64 / n - p).abs();
        covered += p;
    }
    // Reference mass beyond the observed support.
    sum_abs += (1.0 - covered).max(0.0);
    0.5 * sum_abs
}

/// Two-pass compensated sample mean and (unbiased) variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|&x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, var)
}

pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_variance(xs);
    (var / xs.len() as f64).sqrt()
}

/// Empirical Laplace transform mean exp(-lambda * x) with its standard error.
pub fn empirical_laplace(xs: &[f64], lambda: f64) -> (f64, f64) {
    let transformed: Vec<f64> = xs.iter().map(|&x| (-lambda * x).exp()).collect();
    let (m, v) = mean_variance(&transformed);
    (m, (v / transformed.len() as f64).sqrt())
}

/// Order-statistic quantile (nearest-rank on the sorted copy).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&q));
    let sorted = sort_unstable(xs.to_vec());
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let (mean, var) = mean_variance(xs);
    let n = xs.len();
    let cov = compensated_sum(
        xs.windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean)),
    ) / (n as f64 - 1.0);
    cov / var
}

/// Least-squares fit of ln S(x) = a + b ln x over the empirical survival
/// function between the `q_lo` and `q_hi` quantiles of `samples`.
/// Returns `(slope, level_ratio_at_midpoint)` where the level ratio is
/// the empirical survival at the geometric midpoint of the window divided
/// by `predicted(x_mid)`.
pub fn log_log_tail_fit(
    samples: &[f64],
    q_lo: f64,
    q_hi: f64,
    predicted: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let sorted = sort_unstable(samples.to_vec());
    let n = sorted.len();
    let lo_idx = ((q_lo * n as f64) as usize).min(n - 2);
    let hi_idx = ((q_hi * n as f64) as usize).clamp(lo_idx + 2, n - 1);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(hi_idx - lo_idx);
    for i in lo_idx..hi_idx {
        let x = sorted[i];
        let surv = (n - 1 - i) as f64 / n as f64;
        if x > 0.0 && surv > 0.0 {
            pts.push((x.ln(), surv.ln()));
        }
    }
    assert!(pts.len() >= 8, "tail window too thin for a fit");
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let sy: f64 = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    let slope = sxy / sxx;

    let x_mid = (sorted[lo_idx].ln() * 0.5 + sorted[hi_idx].ln() * 0.5).exp();
    let emp_mid = sorted.partition_point(|&v| v <= x_mid);
    let surv_mid = (n - emp_mid) as f64 / n as f64;
    let level_ratio = surv_mid / predicted(x_mid);
    (slope, level_ratio)
}
