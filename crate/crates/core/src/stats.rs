//! Wilcoxon signed-rank and two-sample Kolmogorov-Smirnov tests.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{kolmogorov_sf, normal_sf};

/// Largest number of nonzero pairs evaluated with the exact null
/// distribution.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Nonzero pairs (Wilcoxon) or combined sample size (KS).
    pub n_effective: usize,
    pub method: PMethod,
}

/// Ranks 1..=n of `values` with tied entries sharing their mean rank,
/// returned doubled so they stay integral.
fn doubled_midranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut tie_sizes = Vec::new();
    let mut lo = 0;
    while lo < order.len() {
        let mut hi = lo;
        while hi + 1 < order.len() && values[order[hi + 1]] == values[order[lo]] {
            hi += 1;
        }
        for &i in &order[lo..=hi] {
            ranks[i] = (lo + hi + 2) as u64;
        }
        tie_sizes.push(hi - lo + 1);
        lo = hi + 1;
    }
    (ranks, tie_sizes)
}

/// Two-sided Wilcoxon signed-rank test on paired observations.
///
/// Zero differences are dropped. The statistic is `min(W+, W-)`. Up to
/// [`EXACT_WILCOXON_MAX_N`] pairs the p-value comes from the exact null
/// distribution over all sign assignments (midranks included); above that a
/// normal approximation with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestOutcome> {
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::InvalidInput("NaN in paired data".into()));
    }
    if diffs.is_empty() {
        return Err(Error::DegeneratePairs);
    }
    let n = diffs.len();
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_midranks(&magnitudes);
    let total: u64 = ranks.iter().sum();
    let plus: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let stat2 = plus.min(total - plus);
    let statistic = stat2 as f64 / 2.0;

    if n <= EXACT_WILCOXON_MAX_N {
        // counts[s] = sign assignments whose doubled positive-rank sum is s
        let mut counts = vec![0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let below: f64 = counts[..=stat2 as usize].iter().sum();
        let p = (2.0 * below / (n as f64).exp2()).min(1.0);
        return Ok(TestOutcome {
            statistic,
            p_value: p,
            n_effective: n,
            method: PMethod::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let w_plus = plus as f64 / 2.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(TestOutcome {
        statistic,
        p_value: (2.0 * normal_sf(z)).min(1.0),
        n_effective: n,
        method: PMethod::Approximate,
    })
}

/// Largest absolute gap between the empirical CDFs of `a` and `b`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    // gap kept as the integer numerator over n*m
    let mut gap = 0u64;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        gap = gap.max(((i * m) as u64).abs_diff((j * n) as u64));
    }
    Ok(gap as f64 / (n * m) as f64)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic two-sided p-value
/// at effective size `n*m/(n+m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    let d = ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let en = n * m / (n + m);
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_sf(en.sqrt() * d),
        n_effective: a.len() + b.len(),
        method: PMethod::Approximate,
    })
}
