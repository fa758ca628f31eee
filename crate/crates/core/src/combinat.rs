//! Exact and asymptotic counts of lattice loops.
//!
//! A loop of `2n` unit steps on the integer line that starts and ends at the
//! origin is one of `(2n choose n)` step words. The counts here partition
//! that set: Catalan numbers count the loops that never go below the
//! origin, and the crossing counts `J(n, l)` (entries of Catalan's triangle)
//! count loops by how often they traverse the cell to the left of the
//! origin.
//!
//! [`BigCount`] is exact; [`LogCount`] is its natural-log shadow for sizes
//! where only ratios are needed.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Largest `n` for which [`ln_central_ratio`] goes through the exact
/// central binomial; above it the log-gamma route is used.
pub const EXACT_LOG_BOUND: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatError {
    #[error("index {index} exceeds row {row}")]
    IndexOutOfRange { row: u64, index: u64 },
    #[error("asymptotic form requires n >= 1")]
    EmptyRow,
}

/// An exact nonnegative integer count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BigCount(BigUint);

impl BigCount {
    pub fn zero() -> Self {
        BigCount(BigUint::zero())
    }

    pub fn one() -> Self {
        BigCount(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    /// Nearest `f64`, or `f64::INFINITY` when out of range.
    pub fn to_f64(&self) -> f64 {
        self.ldexp(0)
    }

    /// `self * 2^exp` rounded to `f64`, without forming the (possibly
    /// overflowing) intermediate value.
    pub fn ldexp(&self, exp: i64) -> f64 {
        let (top, shift) = self.top_bits();
        scale_pow2(top, exp + shift as i64)
    }

    pub fn to_log(&self) -> LogCount {
        if self.is_zero() {
            return LogCount::zero();
        }
        let (top, shift) = self.top_bits();
        LogCount::from_ln(top.ln() + shift as f64 * std::f64::consts::LN_2)
    }

    /// Leading 64 bits as an `f64` mantissa together with the dropped
    /// binary exponent.
    fn top_bits(&self) -> (f64, u64) {
        let bits = self.0.bits();
        if bits <= 64 {
            (self.0.to_u64().unwrap_or(0) as f64, 0)
        } else {
            let shift = bits - 64;
            let top = (&self.0 >> shift).to_u64().unwrap_or(u64::MAX);
            (top as f64, shift)
        }
    }
}

fn scale_pow2(mut x: f64, mut exp: i64) -> f64 {
    // 2^±1000 are both normal doubles, so stepping in chunks never rounds
    // an intermediate to zero or infinity before the final multiply.
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(exp as i32)
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }
}

impl From<BigUint> for BigCount {
    fn from(v: BigUint) -> Self {
        BigCount(v)
    }
}

impl Add for BigCount {
    type Output = BigCount;
    fn add(self, rhs: BigCount) -> BigCount {
        BigCount(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a BigCount> for BigCount {
    type Output = BigCount;
    fn add(self, rhs: &'a BigCount) -> BigCount {
        BigCount(self.0 + &rhs.0)
    }
}

impl Sum for BigCount {
    fn sum<I: Iterator<Item = BigCount>>(iter: I) -> Self {
        iter.fold(BigCount::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Natural logarithm of a positive count, or an explicit zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogCount {
    log_value: f64,
    zero: bool,
}

impl LogCount {
    pub fn zero() -> Self {
        LogCount {
            log_value: f64::NEG_INFINITY,
            zero: true,
        }
    }

    pub fn from_ln(log_value: f64) -> Self {
        LogCount { log_value, zero: false }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// The stored logarithm; `None` for a zero count.
    pub fn ln(&self) -> Option<f64> {
        (!self.zero).then_some(self.log_value)
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.log_value.exp()
        }
    }

    /// `self / other` evaluated in log space.
    pub fn ratio(&self, other: &LogCount) -> f64 {
        match (self.zero, other.zero) {
            (true, _) => 0.0,
            (false, true) => f64::INFINITY,
            _ => (self.log_value - other.log_value).exp(),
        }
    }
}

/// `(n choose k)`, exact. Zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    // After step i the accumulator equals C(n - k + i, i), so every
    // division is exact.
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    BigCount(acc)
}

/// `(2n choose n)`: the number of loops of `2n` steps.
pub fn central_binomial(n: u64) -> BigCount {
    binomial(2 * n, n)
}

/// `C_n = (2n choose n) / (n + 1)`.
pub fn catalan(n: u64) -> BigCount {
    BigCount(central_binomial(n).0 / (n + 1))
}

/// Entry `c(n, k) = (n+k)! (n-k+1) / (k! (n+1)!)` of Catalan's triangle.
pub fn catalan_triangle(n: u64, k: u64) -> Result<BigCount, CombinatError> {
    if k > n {
        return Err(CombinatError::IndexOutOfRange { row: n, index: k });
    }
    // c(n, k) = C(n+k, k) (n-k+1) / (n+1)
    let mut acc = binomial(n + k, k).0;
    acc *= n - k + 1;
    acc /= n + 1;
    Ok(BigCount(acc))
}

/// `J(n, l)`: loops of `2n` steps that traverse the cell `[-1, 0]` exactly
/// `2l` times. Equal to `c(n+l, n-l) = (2n)! (2l+1) / ((n-l)! (n+l+1)!)`.
pub fn crossing_partition_count(n: u64, l: u64) -> Result<BigCount, CombinatError> {
    if l > n {
        return Err(CombinatError::IndexOutOfRange { row: n, index: l });
    }
    let mut acc = binomial(2 * n, n - l).0;
    acc *= 2 * l + 1;
    acc /= n + l + 1;
    Ok(BigCount(acc))
}

/// Log of `4^n / (sqrt(pi) n^{3/2})`, the leading large-`n` form of `C_n`.
pub fn catalan_asymptotic(n: u64) -> Result<LogCount, CombinatError> {
    if n == 0 {
        return Err(CombinatError::EmptyRow);
    }
    let nf = n as f64;
    Ok(LogCount::from_ln(
        nf * 4f64.ln() - 0.5 * std::f64::consts::PI.ln() - 1.5 * nf.ln(),
    ))
}

/// Log of `(2n choose n) (2l/n) exp(-l^2/n)`, the large-`n` form of
/// `J(n, l)` for `l` of order `sqrt(n)`. The form vanishes at `l = 0`, so
/// that case returns the zero count; use [`crossing_partition_count`] there.
pub fn crossing_count_asymptotic(n: u64, l: u64) -> Result<LogCount, CombinatError> {
    if n == 0 {
        return Err(CombinatError::EmptyRow);
    }
    if l > n {
        return Err(CombinatError::IndexOutOfRange { row: n, index: l });
    }
    if l == 0 {
        return Ok(LogCount::zero());
    }
    let (nf, lf) = (n as f64, l as f64);
    let ln_central = ln_central_ratio(n) + 2.0 * nf * std::f64::consts::LN_2;
    Ok(LogCount::from_ln(ln_central + (2.0 * lf / nf).ln() - lf * lf / nf))
}

/// `ln((2n choose n) / 4^n)`, the log of the free return probability.
///
/// Exact up to [`EXACT_LOG_BOUND`], log-gamma beyond it.
pub fn ln_central_ratio(n: u64) -> f64 {
    if n <= EXACT_LOG_BOUND {
        central_binomial(n).ldexp(-2 * n as i64).ln()
    } else {
        let nf = n as f64;
        ln_gamma(nf + 0.5) - ln_gamma(nf + 1.0) - 0.5 * std::f64::consts::PI.ln()
    }
}

/// `ln(n!)`, via log-gamma.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Exact factorials up to a fixed bound, built once and read-only after.
///
/// Useful when many entries of the same rows are needed; every method gives
/// the same answer as the corresponding free function.
#[derive(Clone, Debug)]
pub struct FactorialTable {
    facts: Vec<BigUint>,
}

impl FactorialTable {
    /// Table holding `0!..=bound!`.
    pub fn new(bound: u64) -> Self {
        let mut facts = Vec::with_capacity(bound as usize + 1);
        let mut acc = BigUint::one();
        facts.push(acc.clone());
        for k in 1..=bound {
            acc *= k;
            facts.push(acc.clone());
        }
        FactorialTable { facts }
    }

    /// Table large enough for crossing counts of every row up to `n`.
    pub fn for_rows(n: u64) -> Self {
        Self::new(2 * n + 1)
    }

    pub fn bound(&self) -> u64 {
        self.facts.len() as u64 - 1
    }

    pub fn factorial(&self, k: u64) -> Option<&BigUint> {
        self.facts.get(k as usize)
    }

    fn fact(&self, k: u64) -> &BigUint {
        self.factorial(k)
            .unwrap_or_else(|| panic!("factorial table bound {} < {k}", self.bound()))
    }

    pub fn binomial(&self, n: u64, k: u64) -> BigCount {
        if k > n {
            return BigCount::zero();
        }
        BigCount(self.fact(n) / (self.fact(k) * self.fact(n - k)))
    }

    pub fn catalan(&self, n: u64) -> BigCount {
        BigCount(self.fact(2 * n) / (self.fact(n) * self.fact(n + 1)))
    }

    pub fn catalan_triangle(&self, n: u64, k: u64) -> Result<BigCount, CombinatError> {
        if k > n {
            return Err(CombinatError::IndexOutOfRange { row: n, index: k });
        }
        let num = self.fact(n + k) * (n - k + 1);
        Ok(BigCount(num / (self.fact(k) * self.fact(n + 1))))
    }

    pub fn crossing_partition_count(&self, n: u64, l: u64) -> Result<BigCount, CombinatError> {
        if l > n {
            return Err(CombinatError::IndexOutOfRange { row: n, index: l });
        }
        let num = self.fact(2 * n) * (2 * l + 1);
        Ok(BigCount(num / (self.fact(n - l) * self.fact(n + l + 1))))
    }
}
