//! Exact path sampling from the polymer measure.
//!
//! Standard backward decomposition: draw the last renewal m with probability
//! proportional to `Z^c_m K^+(n-m)` (free boundary; m = n when constrained),
//! then walk left drawing the previous renewal j given the current one at m
//! with probability proportional to `Z^c_j K(m-j)`, until reaching 0.

use super::{build_partition_table, Boundary, PartitionTable, PolymerParams, TableOptions};
use crate::disorder::Environment;
use crate::error::Result;
use crate::kernel::{RenewalKernel, RenewalTrajectory};
use crate::Budget;
use rand::Rng;

/// A sampled trajectory with its log Gibbs weight.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub trajectory: RenewalTrajectory,
    pub log_weight: f64,
}

/// Reusable sampler holding the partition table for one instance.
pub struct PathSampler<'a> {
    kernel: &'a RenewalKernel,
    table: PartitionTable,
    boundary: Boundary,
    n: u64,
}

/// Draws one categorical index from log weights, by normalized inverse CDF.
fn draw_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let max = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max > f64::NEG_INFINITY, "empty categorical support");
    let mut total = 0.0;
    for &w in log_weights {
        total += (w - max).exp();
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in log_weights.iter().enumerate() {
        acc += (w - max).exp();
        if acc >= target {
            return i;
        }
    }
    log_weights.len() - 1
}

impl<'a> PathSampler<'a> {
    pub fn new(
        env: &Environment,
        params: PolymerParams,
        kernel: &'a RenewalKernel,
        n: u64,
        boundary: Boundary,
        budget: &Budget,
    ) -> Result<Self> {
        let table = build_partition_table(env, params, kernel, n, &TableOptions::default(), budget)?;
        Ok(PathSampler {
            kernel,
            table,
            boundary,
            n,
        })
    }

    pub fn table(&self) -> &PartitionTable {
        &self.table
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample {
        let log_tail = self.kernel.log_tail_table();
        let r = self.kernel.support_min();

        let last = match self.boundary {
            Boundary::Constrained => self.n,
            Boundary::Free => {
                let weights: Vec<f64> = (0..=self.n)
                    .map(|m| self.table.log_zc(m) + log_tail[(self.n - m) as usize])
                    .collect();
                draw_categorical(&weights, rng) as u64
            }
        };

        let mut rev_epochs = vec![last];
        let mut m = last;
        let mut scratch = Vec::new();
        while m > 0 {
            scratch.clear();
            let j_hi = m - r;
            for j in 0..=j_hi {
                scratch.push(self.table.log_zc(j) + self.kernel.log_mass_table()[(m - j) as usize]);
            }
            let j = draw_categorical(&scratch, rng) as u64;
            rev_epochs.push(j);
            m = j;
        }
        rev_epochs.reverse();
        let trajectory = RenewalTrajectory {
            epochs: rev_epochs,
            horizon: self.n,
        };

        // Weight directly from the table data it was sampled from.
        let mut log_weight = 0.0;
        for &e in &trajectory.epochs {
            log_weight += self.table.site_weight(e);
        }
        for w in trajectory.epochs.windows(2) {
            log_weight += self.kernel.log_mass_table()[(w[1] - w[0]) as usize];
        }
        if self.boundary == Boundary::Free {
            log_weight += log_tail[(self.n - last) as usize];
        }
        PathSample {
            trajectory,
            log_weight,
        }
    }
}

/// One-shot convenience wrapper; batch callers should hold a [`PathSampler`].
pub fn sample_path<R: Rng + ?Sized>(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    boundary: Boundary,
    rng: &mut R,
    budget: &Budget,
) -> Result<PathSample> {
    Ok(PathSampler::new(env, params, kernel, n, boundary, budget)?.sample(rng))
}
