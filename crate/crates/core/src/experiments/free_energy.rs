//! Quenched free-energy estimation and the homogeneous root oracle.
//!
//! The quenched estimate is the disorder average of `(1/n) log Z_n` over an
//! ascending horizon grid, with a Richardson-style elimination of the 1/n
//! correction across consecutive grid points. The homogeneous (and hence
//! annealed) value comes from the root of `sum_n K(n) exp(-f n) = exp(-h)`,
//! solved by bisection with a certified truncation bracket.

use super::polymer_smoke_check;
use crate::disorder::{sample_environment, DisorderLaw};
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::polymer::{build_partition_table, PolymerParams, TableOptions};
use crate::report::{Check, ExperimentReport, ReportHeader, Value};
use crate::seeding::replica_seed;
use crate::Budget;
use rayon::prelude::*;

/// Positive root f of `sum_n K(n) exp(-f n) = exp(-h_eff)`, the localized
/// free energy of homogeneous pinning at effective reward `h_eff`; zero in
/// the delocalized phase `h_eff <= 0`.
pub fn homogeneous_free_energy(kernel: &RenewalKernel, h_eff: f64) -> Result<f64> {
    if h_eff <= 0.0 {
        return Ok(0.0);
    }
    let target = (-h_eff).exp();
    let horizon = kernel.table_horizon();
    let mass = kernel.mass_table();
    let tail_beyond = kernel.tail_table()[horizon as usize];
    // Partial sum plus the truncation bracket [0, K^+(H) exp(-f (H+1))].
    let eval = |f: f64| -> (f64, f64) {
        let mut sum = 0.0f64;
        for n in (kernel.support_min() as usize)..=(horizon as usize) {
            let term = mass[n] * (-f * n as f64).exp();
            sum += term;
            if term < 1e-18 * sum && n as f64 * f > 40.0 {
                break;
            }
        }
        let slack = tail_beyond * (-f * (horizon as f64 + 1.0)).exp();
        (sum, slack)
    };
    let mut hi = 1.0f64;
    let mut tries = 0;
    while eval(hi).0 + eval(hi).1 * 0.5 > target {
        hi *= 2.0;
        tries += 1;
        if tries > 100 {
            return Err(Error::RootBracket("upper bracket expansion exhausted".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (sum, slack) = eval(mid);
        if sum + 0.5 * slack > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    let (_, slack) = eval(root);
    if slack > 1e-9 * target {
        return Err(Error::RootBracket(format!(
            "truncation slack {slack:.3e} too large at the root; kernel horizon too small for h_eff = {h_eff}"
        )));
    }
    Ok(root)
}

#[derive(Debug, Clone)]
pub struct FreeEnergyConfig<'a> {
    pub kernel: &'a RenewalKernel,
    pub law: DisorderLaw,
    pub params: PolymerParams,
    /// Ascending horizons.
    pub n_grid: Vec<u64>,
    pub replicas: u64,
    pub master_seed: u64,
    pub budget: Budget,
}

#[derive(Debug, Clone)]
pub struct FreeEnergyPoint {
    pub n: u64,
    /// Disorder mean of (1/n) log Z_n.
    pub mean: f64,
    pub std_error: f64,
    /// Exact finite-n annealed value (1/n) log E Z_n.
    pub annealed_finite_n: f64,
}

#[derive(Debug, Clone)]
pub struct FreeEnergyOutput {
    /// One row per (n, replica).
    pub samples: Vec<(u64, u64, u64, f64)>,
    pub per_n: Vec<FreeEnergyPoint>,
    /// Richardson extrapolants over consecutive grid pairs.
    pub richardson: Vec<(u64, u64, f64)>,
    /// Final quenched estimate (last extrapolant, or the last mean for a
    /// single-point grid).
    pub estimate: f64,
    /// Asymptotic annealed value from the root characterization.
    pub annealed_root: f64,
    /// Per-n Jensen check: quenched mean <= finite-n annealed + 3 SE.
    pub jensen_ok: bool,
}

pub fn free_energy_estimate(cfg: &FreeEnergyConfig) -> Result<FreeEnergyOutput> {
    if cfg.n_grid.is_empty() || cfg.replicas == 0 {
        return Err(Error::invalid("grid", "need at least one horizon and one replica"));
    }
    let mut sorted = cfg.n_grid.clone();
    sorted.sort_unstable();
    let max_n = *sorted.last().unwrap();
    if max_n > cfg.kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "free-energy horizon vs kernel table",
            index: max_n as i64,
            limit: cfg.kernel.table_horizon() as i64,
        });
    }
    polymer_smoke_check(cfg.kernel, cfg.law, cfg.params, &cfg.budget)?;

    let h_eff = cfg.params.h + cfg.law.log_mgf(cfg.params.beta);
    let annealed_root = homogeneous_free_energy(cfg.kernel, h_eff)?;

    let samples: Vec<(u64, u64, u64, f64)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| -> Result<Vec<(u64, u64, u64, f64)>> {
            let seed = replica_seed(cfg.master_seed, "free-energy", replica);
            let env = sample_environment(cfg.law, 0..=max_n as i64, seed)?;
            let mut out = Vec::with_capacity(sorted.len());
            for &n in &sorted {
                let table = build_partition_table(
                    &env,
                    cfg.params,
                    cfg.kernel,
                    n,
                    &TableOptions::default(),
                    &cfg.budget,
                )?;
                out.push((n, replica, seed, table.free_log_partition(cfg.kernel) / n as f64));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut per_n = Vec::new();
    let mut jensen_ok = true;
    for &n in &sorted {
        let vals: Vec<f64> = samples
            .iter()
            .filter(|s| s.0 == n)
            .map(|s| s.3)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() as f64 - 1.0)
        } else {
            0.0
        };
        let std_error = (var / vals.len() as f64).sqrt();
        // Finite-n annealed value: the homogeneous DP at h_eff, exactly
        // (1/n) log E Z_n.
        let weights = vec![h_eff; n as usize + 1];
        let hom = crate::polymer::build_table_from_weights(
            weights,
            PolymerParams::new(0.0, h_eff)?,
            cfg.kernel,
            &TableOptions::default(),
            &cfg.budget,
        )?;
        let annealed_finite_n = hom.free_log_partition(cfg.kernel) / n as f64;
        if mean > annealed_finite_n + 3.0 * std_error + 1e-12 {
            jensen_ok = false;
        }
        per_n.push(FreeEnergyPoint {
            n,
            mean,
            std_error,
            annealed_finite_n,
        });
    }

    let mut richardson = Vec::new();
    for w in per_n.windows(2) {
        let (n1, f1) = (w[0].n as f64, w[0].mean);
        let (n2, f2) = (w[1].n as f64, w[1].mean);
        richardson.push((w[0].n, w[1].n, (n2 * f2 - n1 * f1) / (n2 - n1)));
    }
    let estimate = richardson
        .last()
        .map(|r| r.2)
        .unwrap_or_else(|| per_n.last().unwrap().mean);

    Ok(FreeEnergyOutput {
        samples,
        per_n,
        richardson,
        estimate,
        annealed_root,
        jensen_ok,
    })
}

impl FreeEnergyOutput {
    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header
            .set("estimate", self.estimate)
            .set("annealed_root", self.annealed_root);
        let mut report = ExperimentReport::new(
            header,
            &["n", "replica", "seed", "free_energy_density"],
        );
        for &(n, replica, seed, v) in &self.samples {
            report.push_row(vec![
                Value::U64(n),
                Value::U64(replica),
                Value::U64(seed),
                Value::F64(v),
            ]);
        }
        report.push_check(Check::new(
            "jensen_annealing_bound",
            self.jensen_ok,
            "quenched mean <= finite-n annealed + 3 SE on every grid point",
        ));
        for p in &self.per_n {
            report.push_check(Check::new(
                &format!("mean_n_{}", p.n),
                true,
                format!(
                    "mean {:.8} se {:.2e} annealed_finite_n {:.8}",
                    p.mean, p.std_error, p.annealed_finite_n
                ),
            ));
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelFamily};

    #[test]
    fn delocalized_root_is_zero() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 4096, 1).unwrap();
        assert_eq!(homogeneous_free_energy(&kernel, 0.0).unwrap(), 0.0);
        assert_eq!(homogeneous_free_energy(&kernel, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn root_satisfies_the_characterization() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 4096, 1).unwrap();
        let h = 1.0f64;
        let f = homogeneous_free_energy(&kernel, h).unwrap();
        assert!(f > 0.0);
        let mut sum = 0.0;
        for n in 1..=4096u64 {
            sum += kernel.mass(n).unwrap() * (-f * n as f64).exp();
        }
        assert!((sum - (-h).exp()).abs() < 1e-10, "sum={sum}");
    }

    #[test]
    fn root_is_monotone_in_reward() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 4096, 1).unwrap();
        let f1 = homogeneous_free_energy(&kernel, 0.5).unwrap();
        let f2 = homogeneous_free_energy(&kernel, 1.0).unwrap();
        let f3 = homogeneous_free_energy(&kernel, 2.0).unwrap();
        assert!(0.0 < f1 && f1 < f2 && f2 < f3);
    }

    #[test]
    fn homogeneous_quenched_estimate_approaches_root() {
        // beta = 0 collapses the disorder: one replica suffices.
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 2048, 1).unwrap();
        let cfg = FreeEnergyConfig {
            kernel: &kernel,
            law: DisorderLaw::Gaussian,
            params: PolymerParams::new(0.0, 1.0).unwrap(),
            n_grid: vec![512, 1024, 2048],
            replicas: 1,
            master_seed: 0,
            budget: Budget::default(),
        };
        let out = free_energy_estimate(&cfg).unwrap();
        let root = out.annealed_root;
        let last = out.per_n.last().unwrap();
        assert!(
            (last.mean - root).abs() / root < 0.02,
            "mean {} root {root}",
            last.mean
        );
        assert!(out.jensen_ok);
        // Richardson tightens the plain density estimate.
        assert!((out.estimate - root).abs() <= (last.mean - root).abs() + 1e-9);
    }

    #[test]
    fn disordered_estimate_respects_annealing_bound() {
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 512, 1).unwrap();
        let cfg = FreeEnergyConfig {
            kernel: &kernel,
            law: DisorderLaw::Gaussian,
            params: PolymerParams::new(1.0, 0.5).unwrap(),
            n_grid: vec![128, 256, 512],
            replicas: 12,
            master_seed: 4,
            budget: Budget::default(),
        };
        let out = free_energy_estimate(&cfg).unwrap();
        assert!(out.jensen_ok);
        assert_eq!(out.samples.len(), 3 * 12);
        let report = out.to_report(ReportHeader::new("free-energy", 4));
        assert_eq!(report.rows.len(), 36);
    }
}
