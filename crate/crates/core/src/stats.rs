//! Wilcoxon signed-rank test for paired scores.
//!
//! Zero differences are dropped (classic Wilcoxon zero policy) and absolute
//! differences are ranked with midranks. Tie-free samples of up to
//! [`MAX_EXACT_N`] pairs use the exact null distribution, computed by the
//! standard convolution recurrence over rank inclusion; everything else uses
//! the normal approximation with tie-corrected variance and a continuity
//! correction of one half.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest sample size served by the exact null distribution.
pub const MAX_EXACT_N: usize = 20;

/// Smallest sample size accepted by the normal approximation.
pub const MIN_APPROX_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    Greater,
    Less,
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Alternative {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            other => Err(StatsError::UnknownAlternative(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    NormalApprox,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::NormalApprox => "normal-approx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Number of nonzero differences actually ranked.
    pub n_effective: usize,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method: Method,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("paired inputs must have equal nonzero lengths")]
    LengthMismatch,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("only {n} nonzero differences; too few for the normal approximation")]
    TooFewPairs { n: usize },
    #[error("exact distribution needs 1 <= n <= {MAX_EXACT_N}, got {n}")]
    NOutOfRange { n: usize },
    #[error("inputs must be finite")]
    NonFiniteInput,
    #[error("unknown alternative '{0}'")]
    UnknownAlternative(String),
}

struct RankedDiffs {
    w_plus: f64,
    n: usize,
    has_ties: bool,
    /// Sum of t^3 - t over tie groups of size t.
    tie_correction: f64,
}

fn rank_differences(diffs: &[f64]) -> RankedDiffs {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));

    let mut w_plus = 0.0;
    let mut has_ties = false;
    let mut tie_correction = 0.0;
    let mut i = 0;
    while i < n {
        let v = diffs[order[i]].abs();
        let mut j = i;
        let mut pos_in_group = 0usize;
        while j < n && diffs[order[j]].abs() == v {
            if diffs[order[j]] > 0.0 {
                pos_in_group += 1;
            }
            j += 1;
        }
        let t = (j - i) as f64;
        if j - i > 1 {
            has_ties = true;
            tie_correction += t * t * t - t;
        }
        w_plus += pos_in_group as f64 * ((i + 1 + j) as f64 / 2.0);
        i = j;
    }
    RankedDiffs {
        w_plus,
        n,
        has_ties,
        tie_correction,
    }
}

/// Paired test of `x` against `y`. `Greater` means the alternative that `x`
/// tends to exceed `y`.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(StatsError::LengthMismatch);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }

    let ranked = rank_differences(&diffs);
    let n = ranked.n;
    let w = ranked.w_plus;

    if n <= MAX_EXACT_N && !ranked.has_ties {
        let p_value = match alternative {
            Alternative::Greater => 1.0 - exact_signed_rank_cdf(w - 1.0, n)?,
            Alternative::Less => exact_signed_rank_cdf(w, n)?,
            Alternative::TwoSided => {
                let lo = exact_signed_rank_cdf(w, n)?;
                let hi = 1.0 - exact_signed_rank_cdf(w - 1.0, n)?;
                (2.0 * lo.min(hi)).min(1.0)
            }
        };
        return Ok(WilcoxonResult {
            w_plus: w,
            n_effective: n,
            p_value,
            alternative,
            method: Method::Exact,
        });
    }

    if n < MIN_APPROX_N {
        return Err(StatsError::TooFewPairs { n });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = (nf * (nf + 1.0) * (2.0 * nf + 1.0) - ranked.tie_correction / 2.0) / 24.0;
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p_value = match alternative {
        Alternative::Greater => 1.0 - normal.cdf((w - 0.5 - mean) / sd),
        Alternative::Less => normal.cdf((w + 0.5 - mean) / sd),
        Alternative::TwoSided => {
            let d = w - mean;
            if d == 0.0 {
                1.0
            } else {
                let z = (d.abs() - 0.5) / sd;
                (2.0 * (1.0 - normal.cdf(z))).min(1.0)
            }
        }
    };
    Ok(WilcoxonResult {
        w_plus: w,
        n_effective: n,
        p_value,
        alternative,
        method: Method::NormalApprox,
    })
}

/// Number of sign assignments of ranks `1..=n` summing to each value; index
/// `s` of the result counts subsets of `{1..n}` with sum `s`.
fn signed_rank_counts(n: usize) -> Vec<u64> {
    let m = n * (n + 1) / 2;
    let mut ways = vec![0u64; m + 1];
    ways[0] = 1;
    for k in 1..=n {
        for s in (k..=m).rev() {
            ways[s] += ways[s - k];
        }
    }
    ways
}

/// P(W+ <= w) under the null for tie-free ranks `1..=n`. The counts are exact
/// integers and the divisor is a power of two, so the result is exact.
pub fn exact_signed_rank_cdf(w: f64, n: usize) -> Result<f64, StatsError> {
    if !(1..=MAX_EXACT_N).contains(&n) {
        return Err(StatsError::NOutOfRange { n });
    }
    if w.is_nan() {
        return Err(StatsError::NonFiniteInput);
    }
    if w < 0.0 {
        return Ok(0.0);
    }
    let m = n * (n + 1) / 2;
    let cutoff = if w >= m as f64 { m } else { w.floor() as usize };
    let counts = signed_rank_counts(n);
    let acc: u64 = counts[..=cutoff].iter().sum();
    Ok(acc as f64 / (1u64 << n) as f64)
}
