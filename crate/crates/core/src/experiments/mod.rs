//! Batch experiments over disorder replicas and parameter grids.
//!
//! Each experiment validates its inputs, runs an embedded n = 12 smoke
//! comparison of the exact DP quantities against direct enumeration, fans
//! replicas out over the work pool with deterministic per-replica seeds, and
//! returns a typed output convertible to an [`ExperimentReport`].
//!
//! Asymptotic statements are operationalized at desk scale: "limsup over n"
//! becomes a running maximum over the tested grid, and "infinitely often"
//! claims are reported as occurrence counts along sparse subsequences, never
//! asserted as limits.

mod decay;
mod free_energy;
mod log_returns;
mod planner;
mod series_sum;
mod tightness;

pub use decay::{decay_check, DecayConfig, DecayOutput, DecayRow};
pub use free_energy::{
    free_energy_estimate, homogeneous_free_energy, FreeEnergyConfig, FreeEnergyOutput,
    FreeEnergyPoint,
};
pub use log_returns::{
    log_returns_experiment, LogReturnsConfig, LogReturnsOutput, LogReturnsRow, PlanSource,
};
pub use planner::{plan_log_returns, rich_subsequence, LogReturnsPlan};
pub use series_sum::{
    series_event_sum, series_experiment, SeriesConfig, SeriesEventOutput, SeriesOutput,
    SeriesReplicaRow,
};
pub use tightness::{
    constrained_tightness_scan, tightness_scan, ConstrainedTightnessConfig, TightnessCell,
    TightnessConfig, TightnessOutput,
};

use crate::disorder::{sample_environment, DisorderLaw, Environment};
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::polymer::{Boundary, PolymerParams};
use crate::Budget;

/// Fixed seed of the embedded smoke instances.
const SMOKE_SEED: u64 = 0x5330_4B45;
const SMOKE_N: u64 = 12;

/// Direct enumeration of the free and constrained partitions and of the
/// last-contact tail weight at small n, in plain linear arithmetic.
///
/// Independent of the log-space DP path: used as the embedded pre-grid
/// oracle for every experiment.
fn enumerate_small_instance(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    last_above: u64,
) -> (f64, f64, f64) {
    let n = n as usize;
    let mut z_free = 0.0f64;
    let mut z_cons = 0.0f64;
    let mut z_event = 0.0f64;
    'subset: for bits in 0u64..(1 << n) {
        let mut epochs = vec![0usize];
        for i in 1..=n {
            if bits & (1 << (i - 1)) != 0 {
                epochs.push(i);
            }
        }
        let mut weight = (params.beta * env.value(0) + params.h).exp();
        for w in epochs.windows(2) {
            let k = kernel.mass((w[1] - w[0]) as u64).expect("gap in table");
            if k == 0.0 {
                continue 'subset;
            }
            weight *= k * (params.beta * env.value(w[1] as i64) + params.h).exp();
        }
        let last = *epochs.last().unwrap();
        let free_weight = weight * kernel.tail_mass((n - last) as u64).expect("tail in table");
        z_free += free_weight;
        if last == n {
            z_cons += weight;
        }
        if last as u64 > last_above {
            z_event += free_weight;
        }
    }
    (z_free, z_cons, z_event)
}

/// Pre-grid smoke check: the exact DP quantities must agree with direct
/// enumeration on an embedded n = 12 instance before a main grid runs.
pub fn polymer_smoke_check(
    kernel: &RenewalKernel,
    law: DisorderLaw,
    params: PolymerParams,
    budget: &Budget,
) -> Result<()> {
    use crate::polymer::{build_partition_table, TableOptions};
    let env = sample_environment(law, 0..=SMOKE_N as i64, SMOKE_SEED)?;
    let (z_free, z_cons, z_event) = enumerate_small_instance(&env, params, kernel, SMOKE_N, 6);
    let table = build_partition_table(&env, params, kernel, SMOKE_N, &TableOptions::default(), budget)?;
    let dp_free = table.free_log_partition(kernel).exp();
    let dp_cons = table.log_zc(SMOKE_N).exp();
    let spec = crate::polymer::EventSpec::last_contact_above(6);
    let dp_event =
        crate::polymer::event_log_partition(&env, params, kernel, SMOKE_N, &spec, Boundary::Free, budget)?
            .log_z
            .exp();
    for (name, dp, oracle) in [
        ("free", dp_free, z_free),
        ("constrained", dp_cons, z_cons),
        ("event", dp_event, z_event),
    ] {
        let rel = (dp - oracle).abs() / oracle.abs().max(1e-300);
        if rel > 1e-9 {
            return Err(Error::invalid(
                "smoke",
                format!("{name} partition mismatch vs enumeration: rel {rel:.3e}"),
            ));
        }
    }
    Ok(())
}

/// Smoke check for the free-renewal event DP used by the decay experiment.
pub fn renewal_smoke_check(kernel: &RenewalKernel, budget: &Budget) -> Result<()> {
    let n = SMOKE_N;
    let (mc, gc, fg) = (Some(4u64), Some(5u64), Some(6u64));
    let dp = kernel.free_event_probability(n, mc, gc, fg, budget)?;
    // Direct enumeration of the same event.
    let nu = n as usize;
    let mut oracle = 0.0f64;
    'subset: for bits in 0u64..(1 << nu) {
        let mut epochs = vec![0usize];
        for i in 1..=nu {
            if bits & (1 << (i - 1)) != 0 {
                epochs.push(i);
            }
        }
        if epochs.len() as u64 > mc.unwrap() {
            continue;
        }
        let mut prob = 1.0f64;
        for w in epochs.windows(2) {
            let gap = (w[1] - w[0]) as u64;
            if gap >= gc.unwrap() {
                continue 'subset;
            }
            let k = kernel.mass(gap).expect("gap in table");
            if k == 0.0 {
                continue 'subset;
            }
            prob *= k;
        }
        let last = *epochs.last().unwrap();
        if (nu - last) as u64 >= fg.unwrap() {
            continue;
        }
        oracle += prob * kernel.tail_mass((nu - last) as u64).expect("tail in table");
    }
    let rel = (dp - oracle).abs() / oracle.abs().max(1e-300);
    if rel > 1e-9 {
        return Err(Error::invalid(
            "smoke",
            format!("free-renewal event DP mismatch vs enumeration: rel {rel:.3e}"),
        ));
    }
    Ok(())
}
