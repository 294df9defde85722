//! Stable log-space arithmetic.
//!
//! Partition weights span hundreds of orders of magnitude at n ~ 10^3, so
//! every sum of weights runs through log-sum-exp and complements go through
//! a guarded log-difference.

/// Relative-difference level below which a log-difference is considered
/// catastrophically cancelled.
pub const CANCELLATION_GUARD: f64 = 1e-13;

/// log(e^a + e^b) without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Two-pass log-sum-exp over a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &v in values {
        sum += (v - max).exp();
    }
    max + sum.ln()
}

/// Streaming log-sum-exp accumulator for inner DP loops.
///
/// Keeps a running maximum and rescales the partial sum when a larger term
/// arrives, so no intermediate buffer is needed.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl LogSumAcc {
    #[inline]
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            if self.max != f64::NEG_INFINITY {
                self.sum = self.sum * (self.max - v).exp() + 1.0;
            } else {
                self.sum = 1.0;
            }
            self.max = v;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of a guarded log-difference.
#[derive(Debug, Clone, Copy)]
pub struct LogDiff {
    /// log(e^a - e^b), or -inf when the difference is nonpositive.
    pub value: f64,
    /// Set when the relative difference fell below [`CANCELLATION_GUARD`]
    /// and the value should not be trusted.
    pub cancelled: bool,
}

/// log(e^a - e^b) with a cancellation guard.
///
/// The relative difference (e^a - e^b)/e^a = -expm1(b - a) is compared
/// against [`CANCELLATION_GUARD`]; results below it are flagged.
pub fn log_diff_exp(a: f64, b: f64) -> LogDiff {
    if b == f64::NEG_INFINITY {
        return LogDiff {
            value: a,
            cancelled: false,
        };
    }
    if a == f64::NEG_INFINITY || b >= a {
        // Nonpositive difference: exact zero only when a == b analytically,
        // otherwise roundoff already ate the difference.
        return LogDiff {
            value: f64::NEG_INFINITY,
            cancelled: b > a || a != f64::NEG_INFINITY,
        };
    }
    let rel = -(b - a).exp_m1();
    LogDiff {
        value: a + rel.ln(),
        cancelled: rel < CANCELLATION_GUARD,
    }
}
