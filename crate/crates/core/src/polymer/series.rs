//! Partial sums of the constrained-partition series and its reversed analog.
//!
//! The forward series sums `Z^c_m` over m = 0..n_max. The reversed series
//! anchored at n sums the constrained partitions of the windows `[n-d, n]`.
//! Reversing each trajectory in time shows that this equals the forward
//! series evaluated in the index-reversed environment, which is how it is
//! computed here: one DP instead of one per depth. The reversed process is
//! the reason environments extend to negative indices.

use super::{build_table_from_weights, PolymerParams, TableOptions};
use crate::disorder::Environment;
use crate::error::Result;
use crate::kernel::RenewalKernel;
use crate::logspace::LogSumAcc;
use crate::Budget;

/// A monotone log-space partial-sum sequence with its increments exposed
/// for plateau diagnostics.
#[derive(Debug, Clone)]
pub struct LogSeries {
    /// `log Z^c` of each term (index = depth).
    pub log_terms: Vec<f64>,
    /// `log sum_{m <= d}` of the terms.
    pub log_partial_sums: Vec<f64>,
}

impl LogSeries {
    fn from_terms(log_terms: Vec<f64>) -> Self {
        let mut acc = LogSumAcc::new();
        let log_partial_sums = log_terms
            .iter()
            .map(|&t| {
                acc.push(t);
                acc.value()
            })
            .collect();
        LogSeries {
            log_terms,
            log_partial_sums,
        }
    }

    pub fn final_log_sum(&self) -> f64 {
        *self.log_partial_sums.last().expect("nonempty series")
    }

    /// Relative mass the partial sums gained after `depth`:
    /// `1 - S_depth / S_final`.
    pub fn tail_fraction_beyond(&self, depth: usize) -> f64 {
        -(self.log_partial_sums[depth] - self.final_log_sum()).exp_m1()
    }
}

/// Partial sums of `sum_m Z^c_m` for m = 0..=n_max.
pub fn constrained_series(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n_max: u64,
    budget: &Budget,
) -> Result<LogSeries> {
    let omega = env.slice(0, n_max as i64)?;
    let weights: Vec<f64> = omega.iter().map(|&w| params.beta * w + params.h).collect();
    let table = build_table_from_weights(weights, params, kernel, &TableOptions::default(), budget)?;
    Ok(LogSeries::from_terms(table.log_zc_table().to_vec()))
}

/// Partial sums of the reversed series anchored at `anchor`, to the given
/// depth: term d is the constrained partition of the window
/// `[anchor - d, anchor]`. Extends the environment leftward as needed.
pub fn reversed_series(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    anchor: i64,
    depth: u64,
    budget: &Budget,
) -> Result<LogSeries> {
    let (lo, hi) = env.window();
    let need_lo = anchor - depth as i64;
    let env = if need_lo < lo || anchor > hi {
        env.extended(need_lo.min(lo)..=anchor.max(hi))?
    } else {
        env.clone()
    };
    let weights: Vec<f64> = (0..=depth as i64)
        .map(|i| params.beta * env.value(anchor - i) + params.h)
        .collect();
    let table = build_table_from_weights(weights, params, kernel, &TableOptions::default(), budget)?;
    Ok(LogSeries::from_terms(table.log_zc_table().to_vec()))
}
