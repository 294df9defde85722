//! Brute-force enumeration oracles shared by the integration suites.
//!
//! Everything here works in plain linear arithmetic directly from the event
//! definitions, independent of the log-space DP implementation it checks.

use pinlab::disorder::Environment;
use pinlab::kernel::RenewalKernel;
use pinlab::polymer::{Boundary, EventSpec, PolymerParams};

/// Linear-space weight of one trajectory given by its epochs (0 included);
/// zero when a gap has no mass or the constrained endpoint is missed.
pub fn trajectory_weight_linear(
    epochs: &[usize],
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: usize,
    boundary: Boundary,
) -> f64 {
    let mut weight = (params.beta * env.value(0) + params.h).exp();
    for w in epochs.windows(2) {
        let k = kernel.mass((w[1] - w[0]) as u64).expect("gap in table");
        if k == 0.0 {
            return 0.0;
        }
        weight *= k * (params.beta * env.value(w[1] as i64) + params.h).exp();
    }
    let last = *epochs.last().unwrap();
    match boundary {
        Boundary::Free => weight * kernel.tail_mass((n - last) as u64).expect("tail in table"),
        Boundary::Constrained => {
            if last == n {
                weight
            } else {
                0.0
            }
        }
    }
}

/// Whether an event holds for a trajectory, evaluated straight from the
/// event definitions.
pub fn event_holds(epochs: &[usize], n: usize, spec: &EventSpec) -> bool {
    let tau_last = *epochs.last().unwrap();
    let mut ok = true;
    if let Some(c) = spec.more_contacts_than {
        ok &= epochs.len() as u64 > c;
    }
    if let Some(g) = spec.internal_gap_at_least {
        ok &= epochs.windows(2).any(|w| (w[1] - w[0]) as u64 >= g);
    }
    if let Some(g) = spec.final_gap_at_least {
        ok &= (n - tau_last) as u64 >= g;
    }
    if let Some(v) = spec.last_contact_above {
        ok &= tau_last as u64 > v;
    }
    if let Some((hat_above, margin)) = spec.midpoint_escape {
        let half_floor = n / 2;
        let half_ceil = n - half_floor;
        let hat = epochs
            .iter()
            .copied()
            .filter(|&e| e <= half_floor)
            .max()
            .expect("epoch 0 is always present");
        let check = epochs.iter().copied().filter(|&e| e >= half_ceil).min();
        let escape = (hat as u64) > hat_above
            || check.is_some_and(|c| (c as u64) + margin < n as u64);
        ok &= escape;
    }
    if spec.complement {
        !ok
    } else {
        ok
    }
}

/// Sum of trajectory weights over every renewal subset of [1, n] satisfying
/// the event; `n <= 20` or so.
pub fn enumerate_event_z(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: usize,
    boundary: Boundary,
    spec: &EventSpec,
) -> f64 {
    let mut total = 0.0f64;
    let mut epochs: Vec<usize> = Vec::with_capacity(n + 1);
    for bits in 0u64..(1 << n) {
        epochs.clear();
        epochs.push(0);
        for i in 1..=n {
            if bits & (1 << (i - 1)) != 0 {
                epochs.push(i);
            }
        }
        if !event_holds(&epochs, n, spec) {
            continue;
        }
        total += trajectory_weight_linear(&epochs, env, params, kernel, n, boundary);
    }
    total
}

/// Full partition value by enumeration (the trivial event).
pub fn enumerate_z(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: usize,
    boundary: Boundary,
) -> f64 {
    enumerate_event_z(env, params, kernel, n, boundary, &EventSpec::trivial())
}

/// Relative error against an enumeration value, comparing in linear space.
pub fn rel_error(log_dp: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        return if log_dp == f64::NEG_INFINITY { 0.0 } else { f64::INFINITY };
    }
    (log_dp.exp() - oracle).abs() / oracle.abs()
}
