//! An exact numerical laboratory for the disordered pinning polymer model.
//!
//! The model is a recurrent heavy-tailed renewal process rewarded or
//! penalized at its contact points by site energies `beta w_i + h` over a
//! quenched disorder sequence `w`. The crate computes quenched partition
//! functions, event-restricted partitions and Gibbs probabilities exactly by
//! log-space dynamic programming, samples polymer paths exactly by backward
//! decomposition, and runs desk-scale batch experiments that probe
//! delocalized-regime path behavior: tightness of the last contact, decay of
//! small-gap/few-contact events under the free renewal law, constrained
//! partition series, and the rich-segment mechanism that forces log-many
//! returns along sparse subsequences.
//!
//! Modules follow the pipeline: [`kernel`] defines the renewal law,
//! [`disorder`] the disorder laws and their cumulant/rate-function calculus,
//! [`polymer`] the exact partition machinery, [`experiments`] the batch
//! experiments, and [`report`] the CSV/JSON report schema they emit.

// Index arithmetic is load-bearing in the DP inner loops; iterator
// rewrites obscure the recursions.
#![allow(clippy::needless_range_loop)]

pub mod disorder;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod logspace;
pub mod polymer;
pub mod report;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};

/// Work limits for the DP kernels.
///
/// The quadratic unrestricted DP is bounded by a horizon, the count-resolved
/// DP by `n * k_max` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    /// Largest horizon the O(n^2) DP may run at.
    pub max_horizon: u64,
    /// Largest `n * k_max` the count-resolved DP may allocate.
    pub max_count_cells: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_horizon: 1 << 15,
            max_count_cells: 1 << 21,
        }
    }
}

impl Budget {
    /// Scales both limits from a single op count, for the CLI `--budget`
    /// flag: the horizon as sqrt(ops), the cell limit as ops.
    pub fn from_ops(ops: u64) -> Self {
        Budget {
            max_horizon: (ops as f64).sqrt() as u64,
            max_count_cells: ops,
        }
    }
}
