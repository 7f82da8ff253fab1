//! Paired Wilcoxon signed-rank test.
//!
//! Zero differences are dropped and tied absolute differences get average
//! ranks. Without ties and with at most [`EXACT_MAX_N`] pairs the two-sided
//! p-value comes from the exact null distribution of `V`; otherwise a
//! normal approximation with tie and continuity corrections is used.

use std::fmt;

use crate::error::{check_dim, Error, Result};

/// Largest effective sample size handled by the exact distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    NormalApproximation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::NormalApproximation => "normal-approximation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    /// Sum of the ranks of positive differences.
    pub v_statistic: f64,
    pub p_two_sided: f64,
    pub method: Method,
}

impl WilcoxonResult {
    pub fn summary(&self, alpha: f64) -> String {
        format!(
            "V={}, p={:.4}, method={}, significant at {}: {}",
            self.v_statistic,
            self.p_two_sided,
            self.method,
            alpha,
            if significance(self, alpha) {
                "yes"
            } else {
                "no"
            }
        )
    }
}

impl fmt::Display for WilcoxonResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary(0.05))
    }
}

/// `p < alpha`.
pub fn significance(r: &WilcoxonResult, alpha: f64) -> bool {
    r.p_two_sided < alpha
}

/// Number of subsets of `{1..n}` with each possible rank sum `0..=n(n+1)/2`.
pub fn signed_rank_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut c = vec![0u64; max + 1];
    c[0] = 1;
    for k in 1..=n {
        for v in (k..=max).rev() {
            c[v] += c[v - k];
        }
    }
    c
}

/// Two-sided exact p-value for an integer statistic `v` with `n` pairs.
pub fn exact_p_value(v: usize, n: usize) -> f64 {
    let counts = signed_rank_counts(n);
    let total = 2f64.powi(n as i32);
    // P(V >= v) when v is above the null mean, else P(V <= v)
    let tail: u64 = if 4 * v > n * (n + 1) {
        counts[v..].iter().sum()
    } else {
        counts[..=v].iter().sum()
    };
    (2.0 * tail as f64 / total).min(1.0)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Average ranks (1-based) of `values`, plus the sizes of tie groups.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Paired signed-rank test of `a` against `b` on the differences `a − b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    check_dim(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::invalid("Wilcoxon test needs at least one pair"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::DegenerateData);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let v: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    if ties.is_empty() && n <= EXACT_MAX_N {
        return Ok(WilcoxonResult {
            n_effective: n,
            v_statistic: v,
            p_two_sided: exact_p_value(v as usize, n),
            method: Method::Exact,
        });
    }

    let nf = n as f64;
    let z = v - nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sigma = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let correction = 0.5 * z.signum();
    let zc = (z - correction) / sigma;
    let p = 2.0 * normal_cdf(zc).min(normal_cdf(-zc));
    Ok(WilcoxonResult {
        n_effective: n,
        v_statistic: v,
        p_two_sided: p.clamp(f64::MIN_POSITIVE, 1.0),
        method: Method::NormalApproximation,
    })
}
