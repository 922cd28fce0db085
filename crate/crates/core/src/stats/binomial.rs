//! Exact upper tail of the binomial distribution, `P[X >= k]` for
//! `X ~ Binomial(n, p)`.
//!
//! The tail is summed term by term in log space. Only the far tail is ever
//! summed: when `k` lies above the mean the upper tail is summed from `k`
//! upwards, otherwise the lower tail `P[X < k]` is summed downwards and
//! subtracted from one. In both directions the terms shrink geometrically
//! away from the starting term, so the sum is well conditioned and the
//! result keeps full relative precision even deep into underflow territory
//! (the log is returned alongside).

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Chance success probability per set size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChanceLevel {
    /// 0.5, 0.33, 0.25 (and 0.2) as used in the published analysis.
    #[default]
    Literal,
    /// 1/2, 1/3, 1/4, 1/5.
    Exact,
}

impl ChanceLevel {
    pub fn probability(self, set_size: usize) -> f64 {
        match (self, set_size) {
            (ChanceLevel::Literal, 2) => 0.5,
            (ChanceLevel::Literal, 3) => 0.33,
            (ChanceLevel::Literal, 4) => 0.25,
            (ChanceLevel::Literal, 5) => 0.2,
            (_, k) => 1.0 / k as f64,
        }
    }
}

fn check(k: u64, n: u64, p: f64) -> Result<(), StatsError> {
    if k > n {
        return Err(StatsError::Domain(format!("successes {k} exceed trials {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Domain(format!("probability {p} outside (0, 1)")));
    }
    Ok(())
}

/// `ln C(n, k)` as a sum of `ln((n - m + j) / j)`, `m = min(k, n - k)`.
fn ln_choose(n: u64, k: u64) -> f64 {
    let m = k.min(n - k);
    let base = (n - m) as f64;
    (1..=m).map(|j| ((base + j as f64) / j as f64).ln()).sum()
}

/// `ln P[X = i]`.
pub fn binomial_ln_pmf(i: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    check(i, n, p)?;
    Ok(ln_pmf_unchecked(i, n, p))
}

fn ln_pmf_unchecked(i: u64, n: u64, p: f64) -> f64 {
    ln_choose(n, i) + i as f64 * p.ln() + (n - i) as f64 * (-p).ln_1p()
}

/// Sum of `t_j / t_start` walking away from `start` while terms decay.
fn relative_sum(start: u64, n: u64, p: f64, upwards: bool) -> f64 {
    let odds = p / (1.0 - p);
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut i = start;
    loop {
        if upwards {
            if i == n {
                break;
            }
            term *= (n - i) as f64 / (i + 1) as f64 * odds;
            i += 1;
        } else {
            if i == 0 {
                break;
            }
            term *= i as f64 / (n - i + 1) as f64 / odds;
            i -= 1;
        }
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

/// `ln P[X >= k]`.
pub fn binomial_tail_ln(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    check(k, n, p)?;
    if k == 0 {
        return Ok(0.0);
    }
    let mean = n as f64 * p;
    if k as f64 >= mean {
        Ok(ln_pmf_unchecked(k, n, p) + relative_sum(k, n, p, true).ln())
    } else {
        let below = (ln_pmf_unchecked(k - 1, n, p) + relative_sum(k - 1, n, p, false).ln()).exp();
        Ok((-below.min(1.0)).ln_1p())
    }
}

/// `P[X >= k]`, the one-sided ("greater") exact binomial test p-value.
pub fn binomial_tail(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    binomial_tail_ln(k, n, p).map(f64::exp)
}
