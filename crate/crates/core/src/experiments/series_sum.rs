//! Constrained-partition series diagnostics.
//!
//! Two probes of the summed constrained partitions: per-replica forward
//! partial sums checked for a plateau between a checkpoint and the full
//! depth (the series converges a.s. in the delocalized phase), and a
//! distributional comparison between the forward series and the reversed
//! series anchored at 0 (they must share one law), scored by a two-sample
//! Kolmogorov-Smirnov test. A separate helper sums the event-restricted
//! terms `Z^c_n(contacts > N)` against a geometric envelope.

use super::polymer_smoke_check;
use crate::disorder::{sample_environment, DisorderLaw, Environment};
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::logspace::LogSumAcc;
use crate::polymer::{
    constrained_series, reversed_series, CountSel, PolymerParams, TableOptions,
};
use crate::report::{Check, ExperimentReport, ReportHeader, Value};
use crate::seeding::replica_seed;
use crate::stats::{two_sample_ks, KsTest};
use crate::Budget;
use rayon::prelude::*;

/// Partial sums of `sum_n Z^c_n(E_{n,N})` with the geometric comparison
/// envelope `sum_{k >= N} exp(-k d)` for `d = h_c_surrogate - h - eps`.
#[derive(Debug, Clone)]
pub struct SeriesEventOutput {
    /// Log term per n (may be -inf below the threshold).
    pub log_terms: Vec<f64>,
    pub log_partial_sums: Vec<f64>,
    /// Log of the geometric envelope, when the decay rate is positive.
    pub log_envelope: Option<f64>,
    /// Whether the final partial sum sits below the envelope (reported, not
    /// asserted: the a.s. threshold for the bound is not quantified).
    pub below_envelope: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
pub fn series_event_sum(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    contact_threshold: u64,
    n_max: u64,
    h_c_surrogate: f64,
    eps: f64,
    budget: &Budget,
) -> Result<SeriesEventOutput> {
    let omega = env.slice(0, n_max as i64)?;
    let weights: Vec<f64> = omega.iter().map(|&w| params.beta * w + params.h).collect();
    let count_axis = if contact_threshold > 0 {
        Some(contact_threshold.max(2) - 1)
    } else {
        None
    };
    let opts = TableOptions {
        count_axis,
        ..TableOptions::default()
    };
    let table = crate::polymer::build_table_from_weights(weights, params, kernel, &opts, budget)?;
    let mut log_terms = Vec::with_capacity(n_max as usize + 1);
    let mut acc = LogSumAcc::new();
    let mut log_partial_sums = Vec::with_capacity(n_max as usize + 1);
    for m in 0..=n_max {
        let term = table.log_zc_count_restricted(m, CountSel::TotalMoreThan(contact_threshold))?;
        acc.push(term);
        log_terms.push(term);
        log_partial_sums.push(acc.value());
    }
    let d = h_c_surrogate - params.h - eps;
    let log_envelope = if d > 0.0 {
        // log sum_{k >= N} exp(-k d) = -N d - log(1 - exp(-d))
        Some(-(contact_threshold as f64) * d - (-(-d).exp()).ln_1p())
    } else {
        None
    };
    let below_envelope = log_envelope.map(|e| *log_partial_sums.last().unwrap() <= e);
    Ok(SeriesEventOutput {
        log_terms,
        log_partial_sums,
        log_envelope,
        below_envelope,
    })
}

#[derive(Debug, Clone)]
pub struct SeriesConfig<'a> {
    pub kernel: &'a RenewalKernel,
    pub law: DisorderLaw,
    pub params: PolymerParams,
    /// Full forward depth.
    pub n_max: u64,
    /// Plateau checkpoint (< n_max).
    pub checkpoint: u64,
    /// Replicas for the plateau probe.
    pub replicas: u64,
    /// Replicas per side for the forward/reversed distribution comparison.
    pub ks_replicas: u64,
    /// Depth of the distribution comparison.
    pub ks_depth: u64,
    pub master_seed: u64,
    pub budget: Budget,
}

#[derive(Debug, Clone)]
pub struct SeriesReplicaRow {
    pub replica: u64,
    pub seed: u64,
    pub log_sum_checkpoint: f64,
    pub log_sum_full: f64,
    /// 1 - S_checkpoint / S_full.
    pub tail_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SeriesOutput {
    pub rows: Vec<SeriesReplicaRow>,
    /// Share of replicas whose tail fraction is below 1%.
    pub plateau_share: f64,
    pub ks: KsTest,
    pub checkpoint: u64,
    pub n_max: u64,
}

pub fn series_experiment(cfg: &SeriesConfig) -> Result<SeriesOutput> {
    if cfg.checkpoint >= cfg.n_max {
        return Err(Error::invalid("checkpoint", "must be below n_max"));
    }
    if cfg.n_max > cfg.kernel.table_horizon() || cfg.ks_depth > cfg.kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "series depth vs kernel table",
            index: cfg.n_max.max(cfg.ks_depth) as i64,
            limit: cfg.kernel.table_horizon() as i64,
        });
    }
    polymer_smoke_check(cfg.kernel, cfg.law, cfg.params, &cfg.budget)?;

    let rows: Vec<SeriesReplicaRow> = (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| -> Result<SeriesReplicaRow> {
            let seed = replica_seed(cfg.master_seed, "series", replica);
            let env = sample_environment(cfg.law, 0..=cfg.n_max as i64, seed)?;
            let series = constrained_series(&env, cfg.params, cfg.kernel, cfg.n_max, &cfg.budget)?;
            let tail = series.tail_fraction_beyond(cfg.checkpoint as usize);
            Ok(SeriesReplicaRow {
                replica,
                seed,
                log_sum_checkpoint: series.log_partial_sums[cfg.checkpoint as usize],
                log_sum_full: series.final_log_sum(),
                tail_fraction: tail,
            })
        })
        .collect::<Result<_>>()?;
    let plateau_share =
        rows.iter().filter(|r| r.tail_fraction < 0.01).count() as f64 / rows.len().max(1) as f64;

    // Forward vs reversed law at fixed depth; the reversed side is anchored
    // at 0 and reaches into negative indices.
    let forward: Vec<f64> = (0..cfg.ks_replicas)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let seed = replica_seed(cfg.master_seed, "series-forward", k);
            let env = sample_environment(cfg.law, 0..=cfg.ks_depth as i64, seed)?;
            Ok(constrained_series(&env, cfg.params, cfg.kernel, cfg.ks_depth, &cfg.budget)?
                .final_log_sum())
        })
        .collect::<Result<_>>()?;
    let reversed: Vec<f64> = (0..cfg.ks_replicas)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let seed = replica_seed(cfg.master_seed, "series-reversed", k);
            let env = sample_environment(cfg.law, 0..=0, seed)?;
            Ok(
                reversed_series(&env, cfg.params, cfg.kernel, 0, cfg.ks_depth, &cfg.budget)?
                    .final_log_sum(),
            )
        })
        .collect::<Result<_>>()?;
    let ks = two_sample_ks(&forward, &reversed);

    Ok(SeriesOutput {
        rows,
        plateau_share,
        ks,
        checkpoint: cfg.checkpoint,
        n_max: cfg.n_max,
    })
}

impl SeriesOutput {
    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header
            .set("checkpoint", self.checkpoint)
            .set("n_max", self.n_max);
        let mut report = ExperimentReport::new(
            header,
            &["replica", "seed", "log_sum_checkpoint", "log_sum_full", "tail_fraction"],
        );
        for r in &self.rows {
            report.push_row(vec![
                Value::U64(r.replica),
                Value::U64(r.seed),
                Value::F64(r.log_sum_checkpoint),
                Value::F64(r.log_sum_full),
                Value::F64(r.tail_fraction),
            ]);
        }
        report.push_check(Check::new(
            "plateau_share",
            self.plateau_share >= 0.95,
            format!(
                "{:.1}% of replicas gained < 1% mass after the checkpoint",
                100.0 * self.plateau_share
            ),
        ));
        report.push_check(Check::new(
            "forward_reversed_distribution",
            self.ks.p_value > 0.01,
            format!("two-sample KS D = {:.4}, p = {:.4}", self.ks.statistic, self.ks.p_value),
        ));
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelFamily};

    #[test]
    fn event_sum_empty_above_depth() {
        // Threshold above the largest possible count: every term vanishes.
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 64, 1).unwrap();
        let env = sample_environment(DisorderLaw::Gaussian, 0..=12, 3).unwrap();
        let params = PolymerParams::new(0.5, -1.0).unwrap();
        let out = series_event_sum(&env, params, &kernel, 14, 12, -0.125, 0.1, &Budget::default())
            .unwrap();
        assert!(out.log_partial_sums.last().unwrap().is_infinite());
    }

    #[test]
    fn event_sum_monotone_in_threshold() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 64, 1).unwrap();
        let env = sample_environment(DisorderLaw::Gaussian, 0..=48, 5).unwrap();
        let params = PolymerParams::new(0.5, -1.0).unwrap();
        let totals: Vec<f64> = [2u64, 4, 6]
            .iter()
            .map(|&t| {
                *series_event_sum(&env, params, &kernel, t, 48, -0.125, 0.1, &Budget::default())
                    .unwrap()
                    .log_partial_sums
                    .last()
                    .unwrap()
            })
            .collect();
        assert!(totals[0] >= totals[1] && totals[1] >= totals[2]);
    }

    #[test]
    fn series_experiment_plateaus_in_delocalized_phase() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 512, 1).unwrap();
        let cfg = SeriesConfig {
            kernel: &kernel,
            law: DisorderLaw::Gaussian,
            params: PolymerParams::new(0.5, -1.5).unwrap(),
            n_max: 400,
            checkpoint: 200,
            replicas: 20,
            ks_replicas: 80,
            ks_depth: 120,
            master_seed: 12,
            budget: Budget::default(),
        };
        let out = series_experiment(&cfg).unwrap();
        assert!(out.plateau_share > 0.5, "share={}", out.plateau_share);
        assert!(out.ks.p_value > 0.01, "p={}", out.ks.p_value);
        let report = out.to_report(ReportHeader::new("series", 12));
        assert_eq!(report.rows.len(), 20);
    }
}
