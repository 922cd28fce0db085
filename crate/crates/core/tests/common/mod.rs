#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const EXCERPT_LONG: &str = include_str!("../fixtures/excerpt_long.csv");
pub const EXCERPT_SHORT: &str = include_str!("../fixtures/excerpt_short.csv");

/// Per-pair accuracy (percent) on two-value trials over {1..5}, both subjects.
pub const PAIR_ACCURACY: [((u32, u32), f64, f64); 10] = [
    ((1, 2), 81.0, 69.0),
    ((1, 3), 90.0, 70.0),
    ((1, 4), 93.0, 78.0),
    ((1, 5), 94.0, 94.0),
    ((2, 3), 82.0, 57.0),
    ((2, 4), 81.0, 68.0),
    ((2, 5), 96.0, 76.0),
    ((3, 4), 67.0, 45.0),
    ((3, 5), 73.0, 70.0),
    ((4, 5), 55.0, 71.0),
];

/// Exact `P(X >= k)` for every `k` in `0..=n`, `X ~ Binomial(n, p)`, with
/// `p` taken as the exact binary value of the float. Terms are summed as
/// integers over the common denominator `den^n`.
pub fn exact_tails(n: u64, p: f64) -> Vec<BigRational> {
    let p = BigRational::from_float(p).expect("finite p");
    let (num, den) = (p.numer().clone(), p.denom().clone());
    let rest = &den - &num;
    let mut terms = Vec::with_capacity(n as usize + 1);
    let mut choose = BigInt::one();
    for i in 0..=n {
        if i > 0 {
            choose = choose * BigInt::from(n - i + 1) / BigInt::from(i);
        }
        terms.push(&choose * pow(&num, i) * pow(&rest, n - i));
    }
    let total_den = pow(&den, n);
    let mut tails = vec![BigRational::zero(); n as usize + 1];
    let mut acc = BigInt::zero();
    for i in (0..=n as usize).rev() {
        acc += &terms[i];
        // Left unreduced; gcd on these operands dominates the runtime.
        tails[i] = BigRational::new_raw(acc.clone(), total_den.clone());
    }
    tails
}

fn pow(x: &BigInt, e: u64) -> BigInt {
    let mut acc = BigInt::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Correctly scaled quotient: 64 significant bits of integer division,
/// then one rounding to f64.
pub fn to_f64(x: &BigRational) -> f64 {
    let (num, den) = (x.numer(), x.denom());
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 { (num << shift as usize) / den } else { (num >> (-shift) as usize) / den };
    q.to_f64().expect("64-bit quotient") * 2f64.powi(-shift as i32)
}

/// Pearson correlation with all sums taken exactly over rationals; only the
/// final square root is in floating point.
pub fn exact_pearson(xs: &[BigRational], ys: &[BigRational]) -> f64 {
    let n = BigRational::from_integer(BigInt::from(xs.len()));
    let mx = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let my = ys.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - &mx;
        let dy = y - &my;
        sxy += &dx * &dy;
        sxx += &dx * &dx;
        syy += &dy * &dy;
    }
    let num = to_f64(&sxy);
    num / (to_f64(&sxx) * to_f64(&syy)).sqrt()
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Relative error, treating two zeros as equal.
pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        0.0
    } else {
        ((actual - expected) / expected).abs()
    }
}
