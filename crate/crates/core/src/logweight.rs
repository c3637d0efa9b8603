//! Non-negative weights stored as natural logarithms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

/// A non-negative real held in log scale. `LogWeight::ZERO` (log = -inf) is
/// the bottom element; it absorbs under multiplication.
#[derive(Clone, Copy, PartialEq)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan() && ln != f64::INFINITY, "invalid log weight {ln}");
        LogWeight(ln)
    }

    pub fn from_linear(w: f64) -> Self {
        assert!(w >= 0.0 && w.is_finite(), "invalid weight {w}");
        LogWeight(w.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn to_linear(self) -> f64 {
        self.0.exp()
    }

    /// `self + other` in linear scale.
    pub fn plus(self, other: LogWeight) -> LogWeight {
        LogWeight(log_add(self.0, other.0))
    }

    /// `self / other` in linear scale; `other` must be non-zero.
    pub fn ratio(self, other: LogWeight) -> f64 {
        debug_assert!(!other.is_zero());
        (self.0 - other.0).exp()
    }

    pub fn sum<I: IntoIterator<Item = LogWeight>>(it: I) -> LogWeight {
        let logs: Vec<f64> = it.into_iter().map(|w| w.0).collect();
        LogWeight(log_sum(&logs))
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 + rhs.0)
        }
    }
}

impl PartialOrd for LogWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "LogWeight(0)")
        } else {
            write!(f, "LogWeight(e^{})", self.0)
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Max-shifted `ln Σ e^{x_i}`; empty input and all -inf give -inf.
pub fn log_sum(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_absorbs() {
        let w = LogWeight::from_linear(3.0);
        assert!((w * LogWeight::ZERO).is_zero());
        assert_eq!(w.plus(LogWeight::ZERO), w);
        assert!(LogWeight::from_linear(0.0).is_zero());
    }

    #[test]
    fn sums_of_huge_weights() {
        let a = LogWeight::from_ln(1000.0);
        let s = a.plus(a);
        assert!((s.ln() - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let total = LogWeight::sum([a, a, a, LogWeight::ZERO]);
        assert!((total.ln() - (1000.0 + 3f64.ln())).abs() < 1e-12);
        assert!(LogWeight::sum(std::iter::empty()).is_zero());
    }
}
