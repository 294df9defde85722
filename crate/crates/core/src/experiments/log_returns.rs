//! Rich-segment log-returns experiment.
//!
//! Per replica and horizon: does the rich segment fire in the sampled
//! disorder; the exact Gibbs probability of more than `nu' log n` contacts
//! for a grid of rates; the per-instance lower bound of the partition by the
//! segment trajectory's weight; and, when a plan supplies `kappa`, whether
//! the polynomial lower bound holds on the hit event (reported, not
//! asserted: at desk scale the seed-site factor can defeat it). Optionally
//! the segment is planted (disorder forced to `u` on the segment) to probe
//! the conditional mechanism directly; such rows are flagged synthetic.

use super::planner::LogReturnsPlan;
use super::polymer_smoke_check;
use crate::disorder::{normal_upper_tail, rich_segment_scan, sample_environment, DisorderLaw};
use crate::error::{Error, Result};
use crate::kernel::{RenewalKernel, RenewalTrajectory};
use crate::polymer::{
    build_partition_table, contact_statistics, trajectory_log_weight, Boundary, CountSel,
    PolymerParams, StatsOptions, TableOptions,
};
use crate::report::{Check, ExperimentReport, ReportHeader, Value};
use crate::seeding::replica_seed;
use crate::Budget;
use rayon::prelude::*;

/// Where the segment level `u` and density `gamma` come from.
#[derive(Debug, Clone)]
pub enum PlanSource {
    /// A feasible plan; its `kappa` enables the polynomial-bound column.
    Plan(LogReturnsPlan),
    /// Manual probe parameters.
    Manual { u: f64, gamma: f64 },
}

impl PlanSource {
    fn u_gamma(&self) -> Result<(f64, f64)> {
        match self {
            PlanSource::Plan(p) => {
                if !p.feasible {
                    return Err(Error::invalid("plan", "infeasible plan passed to the experiment"));
                }
                Ok((p.u_beta, p.gamma))
            }
            PlanSource::Manual { u, gamma } => Ok((*u, *gamma)),
        }
    }

    fn kappa(&self) -> Option<f64> {
        match self {
            PlanSource::Plan(p) if p.feasible => Some(p.kappa),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogReturnsConfig<'a> {
    pub kernel: &'a RenewalKernel,
    pub law: DisorderLaw,
    pub params: PolymerParams,
    pub source: PlanSource,
    pub n_grid: Vec<u64>,
    /// Contact-rate grid: events {contacts > nu' log n}.
    pub nu_grid: Vec<f64>,
    pub replicas: u64,
    pub master_seed: u64,
    /// Plant the segment (set disorder to `u` on it) instead of waiting for
    /// a natural hit.
    pub plant: bool,
    pub budget: Budget,
}

/// One (replica, n, nu') row.
#[derive(Debug, Clone)]
pub struct LogReturnsRow {
    pub replica: u64,
    pub seed: u64,
    pub n: u64,
    pub nu: f64,
    /// Integer contact threshold floor(nu log n).
    pub contacts_threshold: u64,
    pub synthetic: bool,
    pub hit: bool,
    pub segment_len: u64,
    pub segment_average: f64,
    /// Exact Gaussian tail P(segment average >= u); NaN for other laws.
    pub exact_hit_tail: f64,
    /// Exact Gibbs P(contacts > nu log n).
    pub p_returns: f64,
    pub log_z: f64,
    pub segment_weight: f64,
    pub trajectory_bound_ok: bool,
    pub kappa_applicable: bool,
    pub kappa_bound_ok: bool,
    pub expected_contacts: f64,
    pub expected_segment_contacts: f64,
}

#[derive(Debug, Clone)]
pub struct LogReturnsOutput {
    pub rows: Vec<LogReturnsRow>,
    /// Running maximum over the n grid of p_returns per nu (the limsup
    /// surrogate), maximized over replicas.
    pub running_max: Vec<(f64, f64)>,
    pub u: f64,
    pub gamma: f64,
    pub kappa: Option<f64>,
    pub plant: bool,
}

pub fn log_returns_experiment(cfg: &LogReturnsConfig) -> Result<LogReturnsOutput> {
    let (u, gamma) = cfg.source.u_gamma()?;
    let kappa = cfg.source.kappa();
    if cfg.n_grid.is_empty() || cfg.nu_grid.is_empty() {
        return Err(Error::invalid("grid", "empty n or nu grid"));
    }
    let max_n = *cfg.n_grid.iter().max().unwrap();
    if max_n > cfg.kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "experiment horizon vs kernel table",
            index: max_n as i64,
            limit: cfg.kernel.table_horizon() as i64,
        });
    }
    let r = cfg.kernel.support_min();
    for &n in &cfg.n_grid {
        let len = (gamma * (n as f64).ln()).ceil() as u64;
        if len < 1 || r * (len - 1) >= n {
            return Err(Error::invalid(
                "n_grid",
                format!("segment of {len} sites at spacing {r} does not fit strictly inside [1, {n}]"),
            ));
        }
    }
    polymer_smoke_check(cfg.kernel, cfg.law, cfg.params, &cfg.budget)?;

    let alpha = cfg.kernel.alpha();
    let log_phi_c = cfg.kernel.slowly_varying_constant().ln();
    let per_replica: Vec<Vec<LogReturnsRow>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| -> Result<Vec<LogReturnsRow>> {
            let seed = replica_seed(cfg.master_seed, "log-returns", replica);
            let base_env = sample_environment(cfg.law, 0..=max_n as i64, seed)?;
            let mut rows = Vec::new();
            for &n in &cfg.n_grid {
                let probe = rich_segment_scan(&base_env, n, r, gamma, u)?;
                let (env, segment) = if cfg.plant {
                    let planted = base_env.planted(&probe.indices, u)?;
                    let seg = rich_segment_scan(&planted, n, r, gamma, u)?;
                    (planted, seg)
                } else {
                    (base_env.clone(), probe)
                };
                let len = segment.indices.len() as u64;
                let exact_hit_tail = match cfg.law {
                    DisorderLaw::Gaussian => normal_upper_tail(u * (len as f64).sqrt()),
                    _ => f64::NAN,
                };

                // Contact-count table sized for the largest threshold.
                let thresholds: Vec<u64> = cfg
                    .nu_grid
                    .iter()
                    .map(|&nu| (nu * (n as f64).ln()).floor() as u64)
                    .collect();
                let k_max = thresholds.iter().max().copied().unwrap_or(0);
                let opts = TableOptions {
                    count_axis: if k_max > 0 { Some(k_max) } else { None },
                    ..TableOptions::default()
                };
                let table = build_partition_table(&env, cfg.params, cfg.kernel, n, &opts, &cfg.budget)?;
                let log_z = table.free_log_partition(cfg.kernel);

                // The single trajectory visiting 0 and the segment.
                let mut epochs: Vec<u64> =
                    segment.indices.iter().map(|&i| i as u64).collect();
                epochs.push(0);
                epochs.sort_unstable();
                let traj = RenewalTrajectory { epochs, horizon: n };
                let w = trajectory_log_weight(&traj, &env, cfg.params, cfg.kernel, Boundary::Free)?;
                let bound_ok = log_z + 1e-9 >= w.log_weight;

                let (kappa_applicable, kappa_bound_ok) = match kappa {
                    Some(k) if segment.hit => {
                        let target = 0.5f64.ln() + log_phi_c + (-alpha + k) * (n as f64).ln();
                        (true, log_z >= target)
                    }
                    _ => (false, false),
                };

                let stats = contact_statistics(
                    &env,
                    cfg.params,
                    cfg.kernel,
                    n,
                    Boundary::Free,
                    &StatsOptions::default(),
                    &cfg.budget,
                )?;
                let seg_contacts: f64 = segment
                    .indices
                    .iter()
                    .map(|&i| stats.contact_marginals[i as usize])
                    .sum();

                for (&nu, &threshold) in cfg.nu_grid.iter().zip(&thresholds) {
                    let restricted = table.assemble(
                        cfg.kernel,
                        Boundary::Free,
                        0,
                        n,
                        CountSel::TotalMoreThan(threshold),
                    )?;
                    let p_returns = (restricted - log_z).exp().clamp(0.0, 1.0);
                    rows.push(LogReturnsRow {
                        replica,
                        seed,
                        n,
                        nu,
                        contacts_threshold: threshold,
                        synthetic: cfg.plant,
                        hit: segment.hit,
                        segment_len: len,
                        segment_average: segment.average,
                        exact_hit_tail,
                        p_returns,
                        log_z,
                        segment_weight: w.log_weight,
                        trajectory_bound_ok: bound_ok,
                        kappa_applicable,
                        kappa_bound_ok,
                        expected_contacts: stats.expected_contacts,
                        expected_segment_contacts: seg_contacts,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<LogReturnsRow> = per_replica.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.n, a.replica)
            .cmp(&(b.n, b.replica))
            .then(a.nu.partial_cmp(&b.nu).unwrap())
    });

    let mut running_max = Vec::new();
    for &nu in &cfg.nu_grid {
        let max_p = rows
            .iter()
            .filter(|r| r.nu == nu)
            .map(|r| r.p_returns)
            .fold(0.0f64, f64::max);
        running_max.push((nu, max_p));
    }

    Ok(LogReturnsOutput {
        rows,
        running_max,
        u,
        gamma,
        kappa,
        plant: cfg.plant,
    })
}

impl LogReturnsOutput {
    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header.set("u", self.u).set("gamma", self.gamma).set("plant", self.plant);
        if let Some(k) = self.kappa {
            header.set("kappa", k);
        }
        let mut report = ExperimentReport::new(
            header,
            &[
                "replica",
                "seed",
                "n",
                "nu",
                "contacts_threshold",
                "synthetic",
                "hit",
                "segment_len",
                "segment_average",
                "exact_hit_tail",
                "p_returns",
                "log_z",
                "segment_weight",
                "trajectory_bound_ok",
                "kappa_applicable",
                "kappa_bound_ok",
                "expected_contacts",
                "expected_segment_contacts",
            ],
        );
        for r in &self.rows {
            report.push_row(vec![
                Value::U64(r.replica),
                Value::U64(r.seed),
                Value::U64(r.n),
                Value::F64(r.nu),
                Value::U64(r.contacts_threshold),
                Value::Bool(r.synthetic),
                Value::Bool(r.hit),
                Value::U64(r.segment_len),
                Value::F64(r.segment_average),
                Value::F64(r.exact_hit_tail),
                Value::F64(r.p_returns),
                Value::F64(r.log_z),
                Value::F64(r.segment_weight),
                Value::Bool(r.trajectory_bound_ok),
                Value::Bool(r.kappa_applicable),
                Value::Bool(r.kappa_bound_ok),
                Value::F64(r.expected_contacts),
                Value::F64(r.expected_segment_contacts),
            ]);
        }
        let all_bounds = self.rows.iter().all(|r| r.trajectory_bound_ok);
        report.push_check(Check::new(
            "single_trajectory_lower_bound",
            all_bounds,
            "log Z >= segment-trajectory weight on every instance",
        ));
        for (nu, max_p) in &self.running_max {
            report.push_check(Check::new(
                &format!("running_max_nu_{nu}"),
                true,
                format!("max over grid of P(contacts > {nu} log n) = {max_p:.6e}"),
            ));
        }
        report
    }
}
