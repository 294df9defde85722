//! Exact log-space quenched partition functions.
//!
//! The constrained partition values `log Z^c_m` for m = 0..n are built by a
//! last-renewal recursion entirely in log space; free values, event
//! restrictions, series, sampling, and contact statistics are assembled from
//! these tables. Conventions:
//!
//! * the Hamiltonian sum starts at i = 0 with `tau_0 = 0`, so every
//!   partition value carries the factor `exp(beta w_0 + h)`; it is never
//!   divided out (Gibbs probabilities are unaffected);
//! * `log Z^c_m = -inf` marks a site unreachable under the restrictions
//!   baked into the table (or under the gap support when `r > 1`).

mod event;
mod sample;
mod series;
mod stats;

pub use event::{
    event_log_partition, gibbs_probability, trajectory_log_weight, EventSpec, FlaggedLogZ,
    FlaggedProb, TrajectoryWeight,
};
pub(crate) use event::midpoint_forbidden_windows;
pub use sample::{sample_path, PathSample, PathSampler};
pub use series::{constrained_series, reversed_series, LogSeries};
pub use stats::{
    contact_statistics, log_partition_beta_derivative, log_partition_h_derivative,
    ContactStatistics, CountDistribution, MidpointStats, StatsOptions,
};

use crate::disorder::Environment;
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::logspace::LogSumAcc;
use crate::Budget;

/// Inverse temperature and pinning strength.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolymerParams {
    pub beta: f64,
    pub h: f64,
}

impl PolymerParams {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::invalid("beta", "must be finite and >= 0"));
        }
        if !h.is_finite() {
            return Err(Error::invalid("h", "must be finite"));
        }
        Ok(PolymerParams { beta, h })
    }
}

/// Boundary condition of the polymer measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Free,
    Constrained,
}

/// Restrictions baked into a table at build time.
#[derive(Debug, Clone, Default)]
pub struct TableOptions {
    /// Resolve the contact count in [1, m] exactly up to `k_max`, with an
    /// overflow bucket aggregating all higher counts.
    pub count_axis: Option<u64>,
    /// Keep only trajectories whose complete gaps are < `gap_cap`.
    pub gap_cap: Option<u64>,
    /// Disallow renewals inside these inclusive windows.
    pub forbidden: Vec<(u64, u64)>,
}

/// Bucket selection along the count axis of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountSel {
    /// No count restriction.
    Any,
    /// Total contacts `|tau ∩ [0, n]| <= c` (the contact at 0 included).
    TotalAtMost(u64),
    /// Total contacts `|tau ∩ [0, n]| > c`.
    TotalMoreThan(u64),
}

#[derive(Debug, Clone)]
struct CountAxis {
    k_max: u64,
    /// Row-major: position m, then k = 0..=k_max, then the overflow bucket.
    data: Vec<f64>,
    width: usize,
}

/// Log-space constrained partition values over m = 0..n.
#[derive(Debug, Clone)]
pub struct PartitionTable {
    n: u64,
    params: PolymerParams,
    /// Site energies `beta w_m + h` for m = 0..=n.
    site_weight: Vec<f64>,
    /// `log Z^c_m` under the baked-in restrictions.
    log_zc: Vec<f64>,
    count: Option<CountAxis>,
    gap_cap: Option<u64>,
    forbidden: Vec<(u64, u64)>,
}

fn in_windows(m: u64, windows: &[(u64, u64)]) -> bool {
    windows.iter().any(|&(a, b)| m >= a && m <= b)
}

/// Builds the table from raw site log-weights `w_m = beta omega_m + h`.
///
/// This is the shared entry for shifted and reversed environments; the
/// public [`build_partition_table`] resolves sites `0..=n` of an
/// [`Environment`] and delegates here.
pub(crate) fn build_table_from_weights(
    site_weight: Vec<f64>,
    params: PolymerParams,
    kernel: &RenewalKernel,
    options: &TableOptions,
    budget: &Budget,
) -> Result<PartitionTable> {
    let n = site_weight.len() as u64 - 1;
    if n > kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "partition horizon vs kernel table",
            index: n as i64,
            limit: kernel.table_horizon() as i64,
        });
    }
    if n > budget.max_horizon {
        return Err(Error::BudgetExceeded {
            what: "quadratic partition DP",
            needed: n,
            limit: budget.max_horizon,
        });
    }
    if let Some(k_max) = options.count_axis {
        let cells = n.max(1).saturating_mul(k_max.max(1));
        if cells > budget.max_count_cells {
            return Err(Error::BudgetExceeded {
                what: "count-resolved partition DP",
                needed: cells,
                limit: budget.max_count_cells,
            });
        }
    }
    for &(a, b) in &options.forbidden {
        if a > b || b > n {
            return Err(Error::invalid(
                "forbidden",
                format!("window [{a}, {b}] invalid for horizon {n}"),
            ));
        }
    }

    let nu = n as usize;
    let r = kernel.support_min() as usize;
    let log_k = kernel.log_mass_table();

    let mut log_zc = vec![f64::NEG_INFINITY; nu + 1];
    let mut count = options.count_axis.map(|k_max| {
        let width = k_max as usize + 2;
        CountAxis {
            k_max,
            width,
            data: vec![f64::NEG_INFINITY; (nu + 1) * width],
        }
    });

    let zero_allowed = !in_windows(0, &options.forbidden);
    if zero_allowed {
        log_zc[0] = site_weight[0];
        if let Some(axis) = count.as_mut() {
            axis.data[0] = site_weight[0];
        }
    }

    for m in 1..=nu {
        if in_windows(m as u64, &options.forbidden) {
            continue;
        }
        let j_lo = match options.gap_cap {
            Some(g) => m.saturating_sub(g.saturating_sub(1) as usize),
            None => 0,
        };
        if m < r {
            continue;
        }
        let j_hi = m - r;
        if j_lo > j_hi {
            continue;
        }
        let w = site_weight[m];

        let mut acc = LogSumAcc::new();
        for j in j_lo..=j_hi {
            acc.push(log_zc[j] + log_k[m - j]);
        }
        log_zc[m] = w + acc.value();

        if let Some(axis) = count.as_mut() {
            let width = axis.width;
            let k_max = axis.k_max as usize;
            for k in 1..=k_max {
                let mut acc = LogSumAcc::new();
                for j in j_lo..=j_hi {
                    acc.push(axis.data[j * width + (k - 1)] + log_k[m - j]);
                }
                axis.data[m * width + k] = w + acc.value();
            }
            let mut acc = LogSumAcc::new();
            for j in j_lo..=j_hi {
                let src = crate::logspace::log_add_exp(
                    axis.data[j * width + k_max],
                    axis.data[j * width + k_max + 1],
                );
                acc.push(src + log_k[m - j]);
            }
            axis.data[m * width + k_max + 1] = w + acc.value();
        }
    }

    Ok(PartitionTable {
        n,
        params,
        site_weight,
        log_zc,
        count,
        gap_cap: options.gap_cap,
        forbidden: options.forbidden.clone(),
    })
}

/// Builds `log Z^c_m` for m = 0..n from environment sites `[0, n]`.
///
/// The recursion over the last renewal before m reads
/// `log Z^c_m = (beta w_m + h) + logsumexp_j (log Z^c_j + log K(m - j))`,
/// seeded with `log Z^c_0 = beta w_0 + h`.
pub fn build_partition_table(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    options: &TableOptions,
    budget: &Budget,
) -> Result<PartitionTable> {
    let omega = env.slice(0, n as i64)?;
    let weights = omega
        .iter()
        .map(|&w| params.beta * w + params.h)
        .collect::<Vec<_>>();
    build_table_from_weights(weights, params, kernel, options, budget)
}

impl PartitionTable {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn params(&self) -> PolymerParams {
        self.params
    }

    pub fn gap_cap(&self) -> Option<u64> {
        self.gap_cap
    }

    pub fn forbidden(&self) -> &[(u64, u64)] {
        &self.forbidden
    }

    pub fn count_axis_k_max(&self) -> Option<u64> {
        self.count.as_ref().map(|c| c.k_max)
    }

    /// Site energy `beta w_m + h`.
    pub fn site_weight(&self, m: u64) -> f64 {
        self.site_weight[m as usize]
    }

    /// `log Z^c_m` under the baked-in restrictions.
    pub fn log_zc(&self, m: u64) -> f64 {
        self.log_zc[m as usize]
    }

    pub fn log_zc_table(&self) -> &[f64] {
        &self.log_zc
    }

    /// Row value at position m under a count selection.
    fn row_log_z(&self, m: u64, sel: CountSel) -> Result<f64> {
        match sel {
            CountSel::Any => Ok(self.log_zc[m as usize]),
            CountSel::TotalAtMost(c) => {
                if c == 0 {
                    return Ok(f64::NEG_INFINITY); // the contact at 0 always counts
                }
                let axis = self.require_axis(c)?;
                let mut acc = LogSumAcc::new();
                let hi = ((c - 1) as usize).min(axis.k_max as usize);
                for k in 0..=hi {
                    acc.push(axis.data[m as usize * axis.width + k]);
                }
                Ok(acc.value())
            }
            CountSel::TotalMoreThan(c) => {
                if c == 0 {
                    return Ok(self.log_zc[m as usize]); // total is always >= 1
                }
                let axis = self.require_axis(c)?;
                let mut acc = LogSumAcc::new();
                for k in c as usize..=axis.k_max as usize {
                    acc.push(axis.data[m as usize * axis.width + k]);
                }
                acc.push(axis.data[m as usize * axis.width + axis.k_max as usize + 1]);
                Ok(acc.value())
            }
        }
    }

    /// `log Z^c_m` restricted by a count selection; positions other than n
    /// are the constrained partitions of the prefix windows, so this exposes
    /// every event-restricted series term from one table.
    pub fn log_zc_count_restricted(&self, m: u64, sel: CountSel) -> Result<f64> {
        self.row_log_z(m, sel)
    }

    fn require_axis(&self, c: u64) -> Result<&CountAxis> {
        let axis = self.count.as_ref().ok_or_else(|| {
            Error::invalid("count_axis", "table was built without a count axis")
        })?;
        if axis.k_max + 1 < c {
            return Err(Error::invalid(
                "count_axis",
                format!(
                    "count threshold {c} needs k_max >= {}, table has {}",
                    c - 1,
                    axis.k_max
                ),
            ));
        }
        Ok(axis)
    }

    /// Assembles `log Z` over a boundary with a last-contact range and a
    /// count selection. `tau_lo > tau_hi` denotes the empty event.
    pub fn assemble(
        &self,
        kernel: &RenewalKernel,
        boundary: Boundary,
        tau_lo: u64,
        tau_hi: u64,
        sel: CountSel,
    ) -> Result<f64> {
        let hi = tau_hi.min(self.n);
        match boundary {
            Boundary::Constrained => {
                if tau_lo <= self.n && self.n <= hi {
                    self.row_log_z(self.n, sel)
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            Boundary::Free => {
                let log_tail = kernel.log_tail_table();
                let mut acc = LogSumAcc::new();
                let mut m = tau_lo;
                while m <= hi {
                    let row = self.row_log_z(m, sel)?;
                    acc.push(row + log_tail[(self.n - m) as usize]);
                    m += 1;
                }
                Ok(acc.value())
            }
        }
    }

    /// Free log-partition: `log Z_n = logsumexp_m (log Z^c_m + log K^+(n-m))`.
    pub fn free_log_partition(&self, kernel: &RenewalKernel) -> f64 {
        self.assemble(kernel, Boundary::Free, 0, self.n, CountSel::Any)
            .expect("unrestricted assembly cannot fail")
    }

    /// Log-partition under the given boundary with no event restriction.
    pub fn boundary_log_partition(&self, kernel: &RenewalKernel, boundary: Boundary) -> f64 {
        self.assemble(kernel, boundary, 0, self.n, CountSel::Any)
            .expect("unrestricted assembly cannot fail")
    }

    /// Largest absolute mismatch between `log Z^c_m` and the log-sum of its
    /// count-resolved buckets; `None` without a count axis.
    pub fn count_axis_consistency(&self) -> Option<f64> {
        let axis = self.count.as_ref()?;
        let mut worst = 0.0f64;
        for m in 0..=self.n as usize {
            let mut acc = LogSumAcc::new();
            for k in 0..axis.width {
                acc.push(axis.data[m * axis.width + k]);
            }
            let direct = self.log_zc[m];
            let via_axis = acc.value();
            if direct == f64::NEG_INFINITY && via_axis == f64::NEG_INFINITY {
                continue;
            }
            worst = worst.max((direct - via_axis).abs());
        }
        Some(worst)
    }
}
