//! Last-contact tightness scans.
//!
//! For each disorder replica and each horizon n, the exact Gibbs probability
//! of a late last contact is read off one partition table; the scan reports
//! the replica frequency of that probability exceeding a level epsilon,
//! with binomial standard errors. The constrained variant measures the
//! two-sided midpoint escape event instead.

use super::polymer_smoke_check;
use crate::disorder::{sample_environment, DisorderLaw};
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::logspace::log_add_exp;
use crate::polymer::{
    build_partition_table, midpoint_forbidden_windows, PolymerParams, TableOptions,
};
use crate::report::{Check, ExperimentReport, ReportHeader, Value};
use crate::seeding::replica_seed;
use crate::stats::binomial_se;
use crate::Budget;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct TightnessConfig<'a> {
    pub kernel: &'a RenewalKernel,
    pub law: DisorderLaw,
    pub params: PolymerParams,
    /// Horizons, ascending.
    pub n_grid: Vec<u64>,
    /// Last-contact thresholds N.
    pub threshold_grid: Vec<u64>,
    /// Gibbs-probability level defining an exceedance.
    pub epsilon: f64,
    pub replicas: u64,
    pub master_seed: u64,
    /// Allow h >= annealed critical point (the scan defaults to requiring a
    /// conservatively delocalized operating point).
    pub allow_localized: bool,
    pub budget: Budget,
}

/// One exact per-replica probability at a grid point.
#[derive(Debug, Clone)]
pub struct TightnessCell {
    pub n: u64,
    pub threshold: u64,
    pub replica: u64,
    pub seed: u64,
    /// Exact Gibbs probability of the scanned event.
    pub prob: f64,
    pub exceeds: bool,
}

/// Aggregated frequency at one grid point.
#[derive(Debug, Clone)]
pub struct TightnessAggregate {
    pub n: u64,
    pub threshold: u64,
    pub secondary: Option<u64>,
    pub frequency: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct TightnessOutput {
    pub command: &'static str,
    pub cells: Vec<TightnessCell>,
    pub aggregates: Vec<TightnessAggregate>,
    /// Exact per-replica monotonicity of the probability in the threshold.
    pub per_replica_monotone: bool,
    pub epsilon: f64,
    pub replicas: u64,
}

// Thresholds at or above a horizon are allowed and produce exact zeros
// (the last contact never exceeds n); the canonical grids keep N below the
// smallest horizon.
fn validate_grids(n_grid: &[u64], thresholds: &[u64], kernel: &RenewalKernel) -> Result<()> {
    if n_grid.is_empty() || thresholds.is_empty() {
        return Err(Error::invalid("grid", "empty n or threshold grid"));
    }
    let max_n = *n_grid.iter().max().unwrap();
    if max_n > kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "scan horizon vs kernel table",
            index: max_n as i64,
            limit: kernel.table_horizon() as i64,
        });
    }
    Ok(())
}

fn guard_operating_point(
    law: DisorderLaw,
    params: PolymerParams,
    allow_localized: bool,
) -> Result<()> {
    let h_ann = crate::disorder::annealed_critical_point(law, params.beta);
    if params.h >= h_ann && !allow_localized {
        return Err(Error::invalid(
            "h",
            format!(
                "h = {} is not below the annealed critical point {h_ann}; pass allow_localized to override",
                params.h
            ),
        ));
    }
    Ok(())
}

/// Scans the free-boundary event {tau_last > N} over (n, N, replica).
pub fn tightness_scan(cfg: &TightnessConfig) -> Result<TightnessOutput> {
    validate_grids(&cfg.n_grid, &cfg.threshold_grid, cfg.kernel)?;
    guard_operating_point(cfg.law, cfg.params, cfg.allow_localized)?;
    polymer_smoke_check(cfg.kernel, cfg.law, cfg.params, &cfg.budget)?;

    let max_n = *cfg.n_grid.iter().max().unwrap();
    let per_replica: Vec<Vec<TightnessCell>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| -> Result<Vec<TightnessCell>> {
            let seed = replica_seed(cfg.master_seed, "tightness", replica);
            let env = sample_environment(cfg.law, 0..=max_n as i64, seed)?;
            let mut cells = Vec::with_capacity(cfg.n_grid.len() * cfg.threshold_grid.len());
            for &n in &cfg.n_grid {
                let table = build_partition_table(
                    &env,
                    cfg.params,
                    cfg.kernel,
                    n,
                    &TableOptions::default(),
                    &cfg.budget,
                )?;
                let log_tail = cfg.kernel.log_tail_table();
                // Suffix log-sums over the last-contact position: exact
                // monotone tail probabilities for every threshold at once.
                let mut suffix = vec![f64::NEG_INFINITY; n as usize + 2];
                for m in (0..=n as usize).rev() {
                    suffix[m] = log_add_exp(
                        suffix[m + 1],
                        table.log_zc(m as u64) + log_tail[n as usize - m],
                    );
                }
                for &threshold in &cfg.threshold_grid {
                    let idx = ((threshold + 1).min(n + 1)) as usize;
                    let prob = (suffix[idx] - suffix[0]).exp();
                    cells.push(TightnessCell {
                        n,
                        threshold,
                        replica,
                        seed,
                        prob,
                        exceeds: prob > cfg.epsilon,
                    });
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    finish_scan("tightness", cfg.epsilon, cfg.replicas, &cfg.n_grid, per_replica)
}

#[derive(Debug, Clone)]
pub struct ConstrainedTightnessConfig<'a> {
    pub kernel: &'a RenewalKernel,
    pub law: DisorderLaw,
    pub params: PolymerParams,
    pub n_grid: Vec<u64>,
    /// Left thresholds N for the last contact in [0, n/2].
    pub threshold_grid: Vec<u64>,
    /// Right margins M for the first contact in [n/2, n].
    pub margin_grid: Vec<u64>,
    pub epsilon: f64,
    pub replicas: u64,
    pub master_seed: u64,
    pub allow_localized: bool,
    pub budget: Budget,
}

/// Scans the constrained two-sided event
/// {last contact in [0, n/2] > N} ∪ {first contact in [n/2, n] < n - M}
/// over (n, N, M, replica).
pub fn constrained_tightness_scan(cfg: &ConstrainedTightnessConfig) -> Result<TightnessOutput> {
    validate_grids(&cfg.n_grid, &cfg.threshold_grid, cfg.kernel)?;
    if cfg.margin_grid.is_empty() {
        return Err(Error::invalid("margin_grid", "empty margin grid"));
    }
    guard_operating_point(cfg.law, cfg.params, cfg.allow_localized)?;
    polymer_smoke_check(cfg.kernel, cfg.law, cfg.params, &cfg.budget)?;

    let max_n = *cfg.n_grid.iter().max().unwrap();
    let per_replica: Vec<Vec<TightnessCell>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| -> Result<Vec<TightnessCell>> {
            let seed = replica_seed(cfg.master_seed, "tightness-constrained", replica);
            let env = sample_environment(cfg.law, 0..=max_n as i64, seed)?;
            let mut cells =
                Vec::with_capacity(cfg.n_grid.len() * cfg.threshold_grid.len() * cfg.margin_grid.len());
            for &n in &cfg.n_grid {
                let full = build_partition_table(
                    &env,
                    cfg.params,
                    cfg.kernel,
                    n,
                    &TableOptions::default(),
                    &cfg.budget,
                )?;
                let log_z = full.log_zc(n);
                for &threshold in &cfg.threshold_grid {
                    for &margin in &cfg.margin_grid {
                        let windows = midpoint_forbidden_windows(n, threshold, margin);
                        let prob = if windows.is_empty() {
                            0.0
                        } else {
                            let opts = TableOptions {
                                forbidden: windows,
                                ..TableOptions::default()
                            };
                            let restricted = build_partition_table(
                                &env, cfg.params, cfg.kernel, n, &opts, &cfg.budget,
                            )?;
                            (1.0 - (restricted.log_zc(n) - log_z).exp()).clamp(0.0, 1.0)
                        };
                        // Key cells by a composite threshold so the shared
                        // aggregation can group them; margin kept alongside.
                        cells.push(TightnessCell {
                            n,
                            threshold: threshold * 1_000_000 + margin,
                            replica,
                            seed,
                            prob,
                            exceeds: prob > cfg.epsilon,
                        });
                    }
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    finish_scan(
        "tightness-constrained",
        cfg.epsilon,
        cfg.replicas,
        &cfg.n_grid,
        per_replica,
    )
}

fn finish_scan(
    command: &'static str,
    epsilon: f64,
    replicas: u64,
    n_grid: &[u64],
    per_replica: Vec<Vec<TightnessCell>>,
) -> Result<TightnessOutput> {
    let mut cells: Vec<TightnessCell> = per_replica.into_iter().flatten().collect();
    cells.sort_by_key(|c| (c.n, c.threshold, c.replica));

    // Per-replica monotonicity in the threshold at fixed n (free scan only;
    // for the constrained scan the composite key makes this vacuous within
    // one margin).
    let mut monotone = true;
    for &n in n_grid {
        for replica in 0..replicas {
            let mut seq: Vec<(u64, f64)> = cells
                .iter()
                .filter(|c| c.n == n && c.replica == replica)
                .map(|c| (c.threshold, c.prob))
                .collect();
            seq.sort_by_key(|&(t, _)| t);
            for w in seq.windows(2) {
                if w[1].1 > w[0].1 && w[1].0 / 1_000_000 >= w[0].0 / 1_000_000 && w[1].0 % 1_000_000 == w[0].0 % 1_000_000
                {
                    monotone = false;
                }
            }
        }
    }

    let mut aggregates = Vec::new();
    let mut keys: Vec<(u64, u64)> = cells.iter().map(|c| (c.n, c.threshold)).collect();
    keys.dedup();
    for (n, threshold) in keys {
        let group: Vec<&TightnessCell> = cells
            .iter()
            .filter(|c| c.n == n && c.threshold == threshold)
            .collect();
        let freq = group.iter().filter(|c| c.exceeds).count() as f64 / group.len() as f64;
        aggregates.push(TightnessAggregate {
            n,
            threshold,
            secondary: None,
            frequency: freq,
            std_error: binomial_se(freq, group.len() as u64),
        });
    }

    Ok(TightnessOutput {
        command,
        cells,
        aggregates,
        per_replica_monotone: monotone,
        epsilon,
        replicas,
    })
}

impl TightnessOutput {
    /// Exceedance frequency at a grid point of the free scan.
    pub fn frequency(&self, n: u64, threshold: u64) -> Option<(f64, f64)> {
        self.aggregates
            .iter()
            .find(|a| a.n == n && a.threshold == threshold)
            .map(|a| (a.frequency, a.std_error))
    }

    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header.set("epsilon", self.epsilon).set("replicas", self.replicas);
        let composite = self.command == "tightness-constrained";
        let columns: &[&str] = if composite {
            &["n", "threshold", "margin", "replica", "seed", "gibbs_prob", "exceeds"]
        } else {
            &["n", "threshold", "replica", "seed", "gibbs_prob", "exceeds"]
        };
        let mut report = ExperimentReport::new(header, columns);
        for c in &self.cells {
            let mut row = vec![Value::U64(c.n)];
            if composite {
                row.push(Value::U64(c.threshold / 1_000_000));
                row.push(Value::U64(c.threshold % 1_000_000));
            } else {
                row.push(Value::U64(c.threshold));
            }
            row.extend([
                Value::U64(c.replica),
                Value::U64(c.seed),
                Value::F64(c.prob),
                Value::Bool(c.exceeds),
            ]);
            report.push_row(row);
        }
        report.push_check(Check::new(
            "per_replica_threshold_monotonicity",
            self.per_replica_monotone,
            "P(event) nonincreasing in the threshold for every replica and n",
        ));
        report
    }
}
