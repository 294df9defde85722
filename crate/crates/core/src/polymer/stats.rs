//! Exact contact statistics under the Gibbs measure.
//!
//! Contact marginals come from a forward/backward table pair, the
//! contact-count law from the count-resolved table, and the last-contact and
//! midpoint-contact laws from last-renewal cutoffs and forbidden-window DPs.

use super::{
    build_partition_table, build_table_from_weights, Boundary, PolymerParams, TableOptions,
};
use crate::disorder::Environment;
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::logspace::LogSumAcc;
use crate::Budget;

/// Exact contact-count law; index t-1 holds P(total contacts = t) and
/// `overflow` any mass above the resolved range (zero when fully resolved).
#[derive(Debug, Clone)]
pub struct CountDistribution {
    pub probs: Vec<f64>,
    pub overflow: f64,
}

/// Laws of the last contact in [0, n/2] and the first contact in [n/2, n]
/// for the constrained boundary.
#[derive(Debug, Clone)]
pub struct MidpointStats {
    /// P(last contact in [0, floor(n/2)] = j), j = 0..=floor(n/2).
    pub hat_distribution: Vec<f64>,
    /// P(first contact in [ceil(n/2), n] = j), index j - ceil(n/2).
    pub check_distribution: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct StatsOptions {
    /// Resolve the full contact-count law (needs the count axis up to n).
    pub count_distribution: bool,
    /// Resolve the midpoint-contact laws (constrained boundary only).
    pub midpoint: bool,
}

/// Exact statistics of one instance under the Gibbs measure.
#[derive(Debug, Clone)]
pub struct ContactStatistics {
    /// E |tau ∩ [0, n]| (the contact at 0 included).
    pub expected_contacts: f64,
    /// E sum_i w_i delta_i, the disorder part of the energy derivative.
    pub expected_disorder_energy: f64,
    /// P(m in tau) for m = 0..=n.
    pub contact_marginals: Vec<f64>,
    /// P(tau_last = m) for m = 0..=n (point mass at n when constrained).
    pub tau_last_distribution: Vec<f64>,
    pub count_distribution: Option<CountDistribution>,
    pub midpoint: Option<MidpointStats>,
}

/// Backward companion of the forward table: `B[m]` is the log-partition of
/// the path from a renewal at m to the boundary, excluding the site weight
/// at m itself.
fn backward_table(
    weights: &[f64],
    kernel: &RenewalKernel,
    boundary: Boundary,
) -> Vec<f64> {
    let n = weights.len() - 1;
    let r = kernel.support_min() as usize;
    let log_k = kernel.log_mass_table();
    let log_tail = kernel.log_tail_table();
    let mut b = vec![f64::NEG_INFINITY; n + 1];
    match boundary {
        Boundary::Free => b[n] = log_tail[0],
        Boundary::Constrained => b[n] = 0.0,
    }
    for m in (0..n).rev() {
        let mut acc = LogSumAcc::new();
        if boundary == Boundary::Free {
            acc.push(log_tail[n - m]);
        }
        for j in (m + r)..=n {
            acc.push(log_k[j - m] + weights[j] + b[j]);
        }
        b[m] = acc.value();
    }
    b
}

/// Computes the exact contact statistics of an instance.
pub fn contact_statistics(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    boundary: Boundary,
    options: &StatsOptions,
    budget: &Budget,
) -> Result<ContactStatistics> {
    let omega = env.slice(0, n as i64)?;
    let weights: Vec<f64> = omega.iter().map(|&w| params.beta * w + params.h).collect();
    let table = build_table_from_weights(weights.clone(), params, kernel, &TableOptions::default(), budget)?;
    let log_z = table.boundary_log_partition(kernel, boundary);
    let nu = n as usize;

    let b = backward_table(&weights, kernel, boundary);
    let mut marginals = vec![0.0f64; nu + 1];
    let mut expected = 0.0;
    let mut energy = 0.0;
    for m in 0..=nu {
        let p = (table.log_zc(m as u64) + b[m] - log_z).exp();
        let p = p.clamp(0.0, 1.0);
        marginals[m] = p;
        expected += p;
        energy += omega[m] * p;
    }

    let log_tail = kernel.log_tail_table();
    let mut tau_last = vec![0.0f64; nu + 1];
    match boundary {
        Boundary::Constrained => tau_last[nu] = 1.0,
        Boundary::Free => {
            for m in 0..=nu {
                tau_last[m] = (table.log_zc(m as u64) + log_tail[nu - m] - log_z)
                    .exp()
                    .clamp(0.0, 1.0);
            }
        }
    }

    let count_distribution = if options.count_distribution {
        let opts = TableOptions {
            count_axis: Some(n),
            ..TableOptions::default()
        };
        let counted = build_table_from_weights(weights.clone(), params, kernel, &opts, budget)?;
        let mut probs = Vec::with_capacity(nu + 1);
        for total in 1..=(nu as u64 + 1) {
            // total = t <=> (> t-1) minus (> t); resolve via bucket selection.
            let lo = counted.assemble(
                kernel,
                boundary,
                0,
                n,
                super::CountSel::TotalAtMost(total),
            )?;
            let lo_prev = counted.assemble(
                kernel,
                boundary,
                0,
                n,
                super::CountSel::TotalAtMost(total - 1),
            )?;
            let p = ((lo - log_z).exp() - (lo_prev - log_z).exp()).max(0.0);
            probs.push(p);
        }
        Some(CountDistribution {
            probs,
            overflow: 0.0,
        })
    } else {
        None
    };

    let midpoint = if options.midpoint {
        if boundary != Boundary::Constrained {
            return Err(Error::invalid(
                "midpoint",
                "midpoint statistics are defined for the constrained boundary",
            ));
        }
        let work = n.saturating_mul(n / 2);
        if work > budget.max_count_cells.saturating_mul(64) {
            return Err(Error::BudgetExceeded {
                what: "midpoint distribution DP sweep",
                needed: work,
                limit: budget.max_count_cells.saturating_mul(64),
            });
        }
        let half_floor = nu / 2;
        let half_ceil = nu - half_floor;
        let restricted = |windows: Vec<(u64, u64)>| -> Result<f64> {
            let opts = TableOptions {
                forbidden: windows,
                ..TableOptions::default()
            };
            let t = build_table_from_weights(weights.clone(), params, kernel, &opts, budget)?;
            Ok(t.boundary_log_partition(kernel, boundary))
        };
        // Hat CDF: P(hat <= j) = Z(no contact in [j+1, floor(n/2)]) / Z.
        let mut hat_cdf = vec![0.0f64; half_floor + 1];
        for j in 0..=half_floor {
            let z = if j == half_floor {
                log_z
            } else {
                restricted(vec![(j as u64 + 1, half_floor as u64)])?
            };
            hat_cdf[j] = (z - log_z).exp().clamp(0.0, 1.0);
        }
        let mut hat = vec![0.0f64; half_floor + 1];
        let mut prev = 0.0;
        for j in 0..=half_floor {
            hat[j] = (hat_cdf[j] - prev).max(0.0);
            prev = hat_cdf[j];
        }
        // Check survival: P(check >= j) = Z(no contact in [ceil(n/2), j-1]) / Z.
        let mut check_sf = vec![0.0f64; nu - half_ceil + 2];
        for j in half_ceil..=nu {
            let z = if j == half_ceil {
                log_z
            } else {
                restricted(vec![(half_ceil as u64, j as u64 - 1)])?
            };
            check_sf[j - half_ceil] = (z - log_z).exp().clamp(0.0, 1.0);
        }
        check_sf[nu - half_ceil + 1] = 0.0;
        let mut check = vec![0.0f64; nu - half_ceil + 1];
        for j in 0..=(nu - half_ceil) {
            check[j] = (check_sf[j] - check_sf[j + 1]).max(0.0);
        }
        Some(MidpointStats {
            hat_distribution: hat,
            check_distribution: check,
        })
    } else {
        None
    };

    Ok(ContactStatistics {
        expected_contacts: expected,
        expected_disorder_energy: energy,
        contact_marginals: marginals,
        tau_last_distribution: tau_last,
        count_distribution,
        midpoint,
    })
}

/// Centered finite difference of the log-partition in h, the numerical side
/// of the contact-fraction derivative identity.
pub fn log_partition_h_derivative(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    boundary: Boundary,
    step: f64,
    budget: &Budget,
) -> Result<f64> {
    let up = PolymerParams::new(params.beta, params.h + step)?;
    let dn = PolymerParams::new(params.beta, params.h - step)?;
    let z_up = build_partition_table(env, up, kernel, n, &TableOptions::default(), budget)?
        .boundary_log_partition(kernel, boundary);
    let z_dn = build_partition_table(env, dn, kernel, n, &TableOptions::default(), budget)?
        .boundary_log_partition(kernel, boundary);
    Ok((z_up - z_dn) / (2.0 * step))
}

/// Centered finite difference of the log-partition in beta.
pub fn log_partition_beta_derivative(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    boundary: Boundary,
    step: f64,
    budget: &Budget,
) -> Result<f64> {
    let up = PolymerParams::new(params.beta + step, params.h)?;
    let dn = PolymerParams::new((params.beta - step).max(0.0), params.h)?;
    let denom = up.beta - dn.beta;
    let z_up = build_partition_table(env, up, kernel, n, &TableOptions::default(), budget)?
        .boundary_log_partition(kernel, boundary);
    let z_dn = build_partition_table(env, dn, kernel, n, &TableOptions::default(), budget)?
        .boundary_log_partition(kernel, boundary);
    Ok((z_up - z_dn) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_environment, DisorderLaw};
    use crate::kernel::{build_kernel, KernelFamily};

    fn setup(n: i64, seed: u64) -> (Environment, RenewalKernel, PolymerParams) {
        let env = sample_environment(DisorderLaw::Gaussian, 0..=n, seed).unwrap();
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 600, 1).unwrap();
        let params = PolymerParams::new(0.9, -0.6).unwrap();
        (env, kernel, params)
    }

    #[test]
    fn distributions_sum_to_one() {
        let (env, kernel, params) = setup(20, 8);
        let opts = StatsOptions {
            count_distribution: true,
            midpoint: true,
        };
        let stats = contact_statistics(
            &env,
            params,
            &kernel,
            20,
            Boundary::Constrained,
            &opts,
            &Budget::default(),
        )
        .unwrap();
        let cd = stats.count_distribution.unwrap();
        let total: f64 = cd.probs.iter().sum::<f64>() + cd.overflow;
        assert!((total - 1.0).abs() < 1e-10, "count law total {total}");
        let mp = stats.midpoint.unwrap();
        let hat_total: f64 = mp.hat_distribution.iter().sum();
        let check_total: f64 = mp.check_distribution.iter().sum();
        assert!((hat_total - 1.0).abs() < 1e-10);
        assert!((check_total - 1.0).abs() < 1e-10);
        let tau_total: f64 = stats.tau_last_distribution.iter().sum();
        assert!((tau_total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expected_contacts_matches_h_derivative() {
        let (env, kernel, params) = setup(256, 15);
        for boundary in [Boundary::Free, Boundary::Constrained] {
            let stats = contact_statistics(
                &env,
                params,
                &kernel,
                256,
                boundary,
                &StatsOptions::default(),
                &Budget::default(),
            )
            .unwrap();
            let fd = log_partition_h_derivative(
                &env,
                params,
                &kernel,
                256,
                boundary,
                1e-5,
                &Budget::default(),
            )
            .unwrap();
            let rel = (stats.expected_contacts - fd).abs() / fd.abs().max(1e-12);
            assert!(rel < 1e-5, "boundary={boundary:?} rel={rel:e}");
        }
    }

    #[test]
    fn disorder_energy_matches_beta_derivative() {
        let (env, kernel, params) = setup(128, 23);
        let stats = contact_statistics(
            &env,
            params,
            &kernel,
            128,
            Boundary::Free,
            &StatsOptions::default(),
            &Budget::default(),
        )
        .unwrap();
        let fd = log_partition_beta_derivative(
            &env,
            params,
            &kernel,
            128,
            Boundary::Free,
            1e-5,
            &Budget::default(),
        )
        .unwrap();
        let rel = (stats.expected_disorder_energy - fd).abs() / fd.abs().max(1e-9);
        assert!(rel < 1e-5, "rel={rel:e}");
    }

    #[test]
    fn midpoint_laws_swap_under_environment_reversal() {
        // Reversing the disorder about n/2 maps constrained trajectories to
        // their reflections, so the left-half last-contact law becomes the
        // reflected right-half first-contact law, exactly per instance.
        let n = 20i64;
        let (env, kernel, params) = setup(n, 42);
        let sites: Vec<i64> = (0..=n).collect();
        let mut reversed = env.clone();
        for &i in &sites {
            reversed = reversed.planted(&[i], env.value(n - i)).unwrap();
        }
        let opts = StatsOptions {
            count_distribution: false,
            midpoint: true,
        };
        let a = contact_statistics(
            &env, params, &kernel, n as u64, Boundary::Constrained, &opts, &Budget::default(),
        )
        .unwrap()
        .midpoint
        .unwrap();
        let b = contact_statistics(
            &reversed, params, &kernel, n as u64, Boundary::Constrained, &opts, &Budget::default(),
        )
        .unwrap()
        .midpoint
        .unwrap();
        let half = n as usize / 2;
        for j in 0..=half {
            // hat_a(j) = P(last left contact = j); in the reversed
            // environment the first right contact sits at n - j.
            let check_b = b.check_distribution[n as usize - j - half];
            assert!(
                (a.hat_distribution[j] - check_b).abs() < 1e-12,
                "j={j}: {} vs {check_b}",
                a.hat_distribution[j]
            );
        }
    }

    #[test]
    fn free_and_constrained_marginals_anchor_correctly() {
        let (env, kernel, params) = setup(30, 5);
        let free = contact_statistics(
            &env,
            params,
            &kernel,
            30,
            Boundary::Free,
            &StatsOptions::default(),
            &Budget::default(),
        )
        .unwrap();
        assert!((free.contact_marginals[0] - 1.0).abs() < 1e-12);
        let cons = contact_statistics(
            &env,
            params,
            &kernel,
            30,
            Boundary::Constrained,
            &StatsOptions::default(),
            &Budget::default(),
        )
        .unwrap();
        assert!((cons.contact_marginals[0] - 1.0).abs() < 1e-12);
        assert!((cons.contact_marginals[30] - 1.0).abs() < 1e-12);
    }
}
