//! Exact event-restricted partition values and Gibbs probabilities.
//!
//! Events are intersections of the path events the experiments need:
//! contact-count exceedances, long internal gaps, a long final gap, a late
//! last contact, and the two-sided midpoint escape for the constrained
//! boundary. Whenever a component (or its complement) maps onto a table
//! restriction it is computed by a restricted DP directly; only genuinely
//! subtractive components (long internal gap, the midpoint union) go through
//! a guarded log-difference, by inclusion-exclusion over at most two of
//! them.

use super::{
    build_partition_table, build_table_from_weights, Boundary, CountSel,
    PolymerParams, TableOptions,
};
use crate::disorder::Environment;
use crate::error::{Error, Result};
use crate::kernel::{RenewalKernel, RenewalTrajectory};
use crate::logspace::{log_diff_exp, LogSumAcc};
use crate::Budget;

/// An intersection of optional path-event components, with an overall
/// complement flag.
///
/// Component semantics on `[0, n]` (contacts count epoch 0):
/// * `more_contacts_than = N`: more than `N` contacts;
/// * `internal_gap_at_least = g`: some complete gap (both endpoints renewals
///   in `[0, n]`) of length >= `g`;
/// * `final_gap_at_least = g`: `n - tau_last >= g`;
/// * `last_contact_above = N`: `tau_last > N`;
/// * `midpoint_escape = (N, M)`: the union {last contact in [0, n/2] > N}
///   or {first contact in [n/2, n] < n - M}; constrained boundary only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventSpec {
    pub more_contacts_than: Option<u64>,
    pub internal_gap_at_least: Option<u64>,
    pub final_gap_at_least: Option<u64>,
    pub last_contact_above: Option<u64>,
    pub midpoint_escape: Option<(u64, u64)>,
    pub complement: bool,
}

impl EventSpec {
    /// The trivial event (full trajectory space).
    pub fn trivial() -> Self {
        EventSpec::default()
    }

    pub fn contacts_above(n: u64) -> Self {
        EventSpec {
            more_contacts_than: Some(n),
            ..EventSpec::default()
        }
    }

    pub fn last_contact_above(n: u64) -> Self {
        EventSpec {
            last_contact_above: Some(n),
            ..EventSpec::default()
        }
    }

    pub fn internal_gap_at_least(g: u64) -> Self {
        EventSpec {
            internal_gap_at_least: Some(g),
            ..EventSpec::default()
        }
    }

    pub fn final_gap_at_least(g: u64) -> Self {
        EventSpec {
            final_gap_at_least: Some(g),
            ..EventSpec::default()
        }
    }

    pub fn midpoint_escape(hat_above: u64, check_margin: u64) -> Self {
        EventSpec {
            midpoint_escape: Some((hat_above, check_margin)),
            ..EventSpec::default()
        }
    }

    pub fn complemented(mut self) -> Self {
        self.complement = !self.complement;
        self
    }

    fn component_count(&self) -> usize {
        usize::from(self.more_contacts_than.is_some())
            + usize::from(self.internal_gap_at_least.is_some())
            + usize::from(self.final_gap_at_least.is_some())
            + usize::from(self.last_contact_above.is_some())
            + usize::from(self.midpoint_escape.is_some())
    }

    fn validate(&self, n: u64, boundary: Boundary) -> Result<()> {
        let within = |name: &str, v: u64, max: u64| {
            if v > max {
                Err(Error::invalid(
                    name,
                    format!("threshold {v} outside [0, {max}] for horizon {n}"),
                ))
            } else {
                Ok(())
            }
        };
        if let Some(c) = self.more_contacts_than {
            within("more_contacts_than", c, n + 1)?;
        }
        if let Some(g) = self.internal_gap_at_least {
            if g == 0 {
                return Err(Error::invalid("internal_gap_at_least", "gap bound must be >= 1"));
            }
            within("internal_gap_at_least", g, n + 1)?;
        }
        if let Some(g) = self.final_gap_at_least {
            within("final_gap_at_least", g, n + 1)?;
        }
        if let Some(v) = self.last_contact_above {
            within("last_contact_above", v, n)?;
        }
        if let Some((hat, margin)) = self.midpoint_escape {
            within("midpoint_escape.hat", hat, n)?;
            within("midpoint_escape.margin", margin, n)?;
            if boundary != Boundary::Constrained {
                return Err(Error::invalid(
                    "midpoint_escape",
                    "midpoint events are defined for the constrained boundary",
                ));
            }
        }
        Ok(())
    }
}

/// Event-restricted log-partition value plus a cancellation flag for
/// results obtained through a guarded log-difference.
#[derive(Debug, Clone, Copy)]
pub struct FlaggedLogZ {
    pub log_z: f64,
    pub cancelled: bool,
}

/// Gibbs probability with the propagated cancellation flag.
#[derive(Debug, Clone, Copy)]
pub struct FlaggedProb {
    pub p: f64,
    pub cancelled: bool,
}

/// One directly DP-able restriction set.
#[derive(Debug, Clone)]
struct Restriction {
    count: CountSel,
    gap_cap: Option<u64>,
    tau_lo: u64,
    tau_hi: u64,
    forbidden: Vec<(u64, u64)>,
}

impl Restriction {
    fn unrestricted(n: u64) -> Self {
        Restriction {
            count: CountSel::Any,
            gap_cap: None,
            tau_lo: 0,
            tau_hi: n,
            forbidden: Vec::new(),
        }
    }

    fn narrow_gap_cap(&mut self, g: u64) {
        self.gap_cap = Some(self.gap_cap.map_or(g, |old| old.min(g)));
    }
}

/// Forbidden windows expressing "no contact in (N, n/2]" and
/// "no contact in [n/2, n - M)" simultaneously, i.e. the complement of the
/// two-sided midpoint escape event.
pub(crate) fn midpoint_forbidden_windows(n: u64, hat_above: u64, check_margin: u64) -> Vec<(u64, u64)> {
    let mut windows = Vec::new();
    let half_floor = n / 2;
    let half_ceil = n - half_floor; // == ceil(n/2)
    if hat_above < half_floor {
        windows.push((hat_above + 1, half_floor));
    }
    if half_ceil + check_margin < n {
        windows.push((half_ceil, n - check_margin - 1));
    }
    windows
}

#[derive(Debug, Clone, Copy)]
enum Subtractive {
    InternalGap(u64),
    Midpoint(u64, u64),
}

struct Evaluator<'a> {
    weights: &'a [f64],
    params: PolymerParams,
    kernel: &'a RenewalKernel,
    n: u64,
    boundary: Boundary,
    budget: &'a Budget,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, r: &Restriction) -> Result<f64> {
        if r.tau_lo > r.tau_hi {
            return Ok(f64::NEG_INFINITY);
        }
        let count_axis = match r.count {
            CountSel::Any => None,
            CountSel::TotalAtMost(c) | CountSel::TotalMoreThan(c) => {
                if c == 0 {
                    None
                } else {
                    Some(c - 1)
                }
            }
        };
        let opts = TableOptions {
            count_axis,
            gap_cap: r.gap_cap,
            forbidden: r.forbidden.clone(),
        };
        let table = build_table_from_weights(
            self.weights.to_vec(),
            self.params,
            self.kernel,
            &opts,
            self.budget,
        )?;
        table.assemble(self.kernel, self.boundary, r.tau_lo, r.tau_hi, r.count)
    }

    /// Z(intersection) by inclusion-exclusion over the subtractive
    /// components, every term a direct restricted DP.
    fn eval_intersection(
        &self,
        direct: &Restriction,
        subtractives: &[Subtractive],
    ) -> Result<FlaggedLogZ> {
        let mut pos = LogSumAcc::new();
        let mut neg = LogSumAcc::new();
        for mask in 0..(1u32 << subtractives.len()) {
            let mut r = direct.clone();
            for (i, s) in subtractives.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    match *s {
                        Subtractive::InternalGap(g) => r.narrow_gap_cap(g),
                        Subtractive::Midpoint(hat, margin) => {
                            r.forbidden
                                .extend(midpoint_forbidden_windows(self.n, hat, margin));
                        }
                    }
                }
            }
            let v = self.eval(&r)?;
            if mask.count_ones() % 2 == 0 {
                pos.push(v);
            } else {
                neg.push(v);
            }
        }
        let d = log_diff_exp(pos.value(), neg.value());
        Ok(FlaggedLogZ {
            log_z: d.value,
            cancelled: d.cancelled && !subtractives.is_empty(),
        })
    }
}

fn compile_positive(spec: &EventSpec, n: u64) -> (Restriction, Vec<Subtractive>) {
    let mut direct = Restriction::unrestricted(n);
    let mut subtractives = Vec::new();
    if let Some(c) = spec.more_contacts_than {
        direct.count = CountSel::TotalMoreThan(c);
    }
    if let Some(g) = spec.final_gap_at_least {
        // tau_last <= n - g
        direct.tau_hi = direct.tau_hi.min(n.saturating_sub(g));
        if g > n {
            direct.tau_hi = 0;
            direct.tau_lo = 1; // empty
        }
    }
    if let Some(v) = spec.last_contact_above {
        direct.tau_lo = direct.tau_lo.max(v + 1);
    }
    if let Some(g) = spec.internal_gap_at_least {
        subtractives.push(Subtractive::InternalGap(g));
    }
    if let Some((hat, margin)) = spec.midpoint_escape {
        subtractives.push(Subtractive::Midpoint(hat, margin));
    }
    (direct, subtractives)
}

/// Direct complement for single-component specs, when one exists.
fn compile_single_complement(spec: &EventSpec, n: u64) -> Option<Restriction> {
    let mut r = Restriction::unrestricted(n);
    if let Some(c) = spec.more_contacts_than {
        r.count = CountSel::TotalAtMost(c);
        return Some(r);
    }
    if let Some(g) = spec.internal_gap_at_least {
        r.gap_cap = Some(g);
        return Some(r);
    }
    if let Some(g) = spec.final_gap_at_least {
        // complement: n - tau_last < g
        r.tau_lo = (n + 1).saturating_sub(g);
        return Some(r);
    }
    if let Some(v) = spec.last_contact_above {
        r.tau_hi = v;
        return Some(r);
    }
    if let Some((hat, margin)) = spec.midpoint_escape {
        r.forbidden = midpoint_forbidden_windows(n, hat, margin);
        return Some(r);
    }
    None
}

/// Exact `log Z(A)` for the event described by `spec` under the given
/// boundary.
///
/// Complement events are computed by a restricted DP directly whenever the
/// complement is itself an intersection of table restrictions; otherwise
/// the value falls back to a guarded log-difference against the
/// unrestricted partition and carries a cancellation flag.
pub fn event_log_partition(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    spec: &EventSpec,
    boundary: Boundary,
    budget: &Budget,
) -> Result<FlaggedLogZ> {
    spec.validate(n, boundary)?;
    let omega = env.slice(0, n as i64)?;
    let weights: Vec<f64> = omega.iter().map(|&w| params.beta * w + params.h).collect();
    let ev = Evaluator {
        weights: &weights,
        params,
        kernel,
        n,
        boundary,
        budget,
    };

    if !spec.complement {
        let (direct, subs) = compile_positive(spec, n);
        return ev.eval_intersection(&direct, &subs);
    }

    // Complemented event.
    if spec.component_count() <= 1 {
        if let Some(r) = compile_single_complement(spec, n) {
            return Ok(FlaggedLogZ {
                log_z: ev.eval(&r)?,
                cancelled: false,
            });
        }
        // complement of the trivial event: empty.
        return Ok(FlaggedLogZ {
            log_z: f64::NEG_INFINITY,
            cancelled: false,
        });
    }
    let (direct, subs) = compile_positive(spec, n);
    let inner = ev.eval_intersection(&direct, &subs)?;
    let full = ev.eval(&Restriction::unrestricted(n))?;
    let d = log_diff_exp(full, inner.log_z);
    Ok(FlaggedLogZ {
        log_z: d.value,
        cancelled: d.cancelled || inner.cancelled,
    })
}

/// Gibbs probability of the event: `exp(log Z(A) - log Z)`, clamped to
/// `[0, 1]` within 1e-12 slack.
pub fn gibbs_probability(
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    n: u64,
    spec: &EventSpec,
    boundary: Boundary,
    budget: &Budget,
) -> Result<FlaggedProb> {
    let event = event_log_partition(env, params, kernel, n, spec, boundary, budget)?;
    let table = build_partition_table(env, params, kernel, n, &TableOptions::default(), budget)?;
    let total = table.boundary_log_partition(kernel, boundary);
    let raw = (event.log_z - total).exp();
    debug_assert!(raw <= 1.0 + 1e-12, "probability overshoot: {raw}");
    Ok(FlaggedProb {
        p: raw.clamp(0.0, 1.0),
        cancelled: event.cancelled,
    })
}

/// Log Gibbs weight of one trajectory plus an impossibility flag.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryWeight {
    pub log_weight: f64,
    /// Set when some factor had zero mass (a sub-support gap, or a
    /// constrained boundary without a contact at n).
    pub impossible: bool,
}

/// `sum_{i in tau} (beta w_i + h) + sum log K(gaps)`, plus
/// `log K^+(n - tau_last)` for the free boundary.
pub fn trajectory_log_weight(
    traj: &RenewalTrajectory,
    env: &Environment,
    params: PolymerParams,
    kernel: &RenewalKernel,
    boundary: Boundary,
) -> Result<TrajectoryWeight> {
    if traj.epochs.first() != Some(&0) {
        return Err(Error::invalid("trajectory", "epochs must start at 0"));
    }
    let n = traj.horizon;
    if traj.last_contact() > n {
        return Err(Error::invalid("trajectory", "epoch beyond horizon"));
    }
    env.slice(0, n as i64)?;
    let mut impossible = false;
    let mut total = 0.0f64;
    for &e in &traj.epochs {
        total += params.beta * env.value(e as i64) + params.h;
    }
    for w in traj.epochs.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("trajectory", "epochs must be strictly increasing"));
        }
        let lk = kernel.log_mass(w[1] - w[0])?;
        if lk == f64::NEG_INFINITY {
            impossible = true;
        }
        total += lk;
    }
    match boundary {
        Boundary::Free => {
            total += kernel.log_tail_mass(n - traj.last_contact())?;
        }
        Boundary::Constrained => {
            if traj.last_contact() != n {
                impossible = true;
                total = f64::NEG_INFINITY;
            }
        }
    }
    if impossible {
        total = f64::NEG_INFINITY;
    }
    Ok(TrajectoryWeight {
        log_weight: total,
        impossible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_environment, DisorderLaw};
    use crate::kernel::{build_kernel, KernelFamily};
    use crate::logspace::log_add_exp;

    fn setup(n: i64, seed: u64) -> (Environment, RenewalKernel, PolymerParams) {
        let env = sample_environment(DisorderLaw::Gaussian, 0..=n, seed).unwrap();
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 64, 1).unwrap();
        let params = PolymerParams::new(1.3, -0.7).unwrap();
        (env, kernel, params)
    }

    #[test]
    fn trivial_event_equals_free_partition() {
        let (env, kernel, params) = setup(12, 4);
        let b = Budget::default();
        let t = build_partition_table(&env, params, &kernel, 12, &TableOptions::default(), &b).unwrap();
        let e = event_log_partition(&env, params, &kernel, 12, &EventSpec::trivial(), Boundary::Free, &b)
            .unwrap();
        assert!((e.log_z - t.free_log_partition(&kernel)).abs() < 1e-12);
        assert!(!e.cancelled);
    }

    #[test]
    fn last_contact_event_is_a_tail_sum() {
        let (env, kernel, params) = setup(12, 4);
        let b = Budget::default();
        let t = build_partition_table(&env, params, &kernel, 12, &TableOptions::default(), &b).unwrap();
        let mut acc = LogSumAcc::new();
        for m in 7..=12u64 {
            acc.push(t.log_zc(m) + kernel.log_tail_mass(12 - m).unwrap());
        }
        let e = event_log_partition(
            &env,
            params,
            &kernel,
            12,
            &EventSpec::last_contact_above(6),
            Boundary::Free,
            &b,
        )
        .unwrap();
        assert!((e.log_z - acc.value()).abs() < 1e-12);
    }

    #[test]
    fn event_additivity_over_complement() {
        let (env, kernel, params) = setup(14, 21);
        let b = Budget::default();
        for spec in [
            EventSpec::contacts_above(3),
            EventSpec::internal_gap_at_least(5),
            EventSpec::final_gap_at_least(4),
            EventSpec::last_contact_above(9),
        ] {
            let z_e = event_log_partition(&env, params, &kernel, 14, &spec, Boundary::Free, &b)
                .unwrap()
                .log_z;
            let z_c = event_log_partition(
                &env,
                params,
                &kernel,
                14,
                &spec.clone().complemented(),
                Boundary::Free,
                &b,
            )
            .unwrap()
            .log_z;
            let t = build_partition_table(&env, params, &kernel, 14, &TableOptions::default(), &b)
                .unwrap();
            let z = t.free_log_partition(&kernel);
            let sum = log_add_exp(z_e, z_c);
            assert!(
                (sum - z).abs() < 1e-10,
                "spec={spec:?}: {sum} vs {z}"
            );
        }
    }

    #[test]
    fn full_event_probability_is_one() {
        let (env, kernel, params) = setup(10, 2);
        let p = gibbs_probability(
            &env,
            params,
            &kernel,
            10,
            &EventSpec::trivial(),
            Boundary::Free,
            &Budget::default(),
        )
        .unwrap();
        assert!((p.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strong_pinning_fills_all_contacts() {
        // h -> h + 10 with r = 1: the all-contacts event dominates.
        let (env, kernel, _) = setup(12, 31);
        let params = PolymerParams::new(1.0, 10.0).unwrap();
        let p = gibbs_probability(
            &env,
            params,
            &kernel,
            12,
            &EventSpec::contacts_above(12),
            Boundary::Free,
            &Budget::default(),
        )
        .unwrap();
        assert!(p.p > 0.99, "p={}", p.p);
    }

    #[test]
    fn midpoint_requires_constrained_boundary() {
        let (env, kernel, params) = setup(12, 2);
        let err = event_log_partition(
            &env,
            params,
            &kernel,
            12,
            &EventSpec::midpoint_escape(2, 2),
            Boundary::Free,
            &Budget::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    #[test]
    fn one_jump_lower_bound_holds() {
        for seed in 0..50u64 {
            let (env, kernel, params) = setup(40, 1000 + seed);
            let t = build_partition_table(
                &env,
                params,
                &kernel,
                40,
                &TableOptions::default(),
                &Budget::default(),
            )
            .unwrap();
            let one_jump = kernel.log_tail_mass(40).unwrap() + t.site_weight(0);
            assert!(t.free_log_partition(&kernel) >= one_jump);
        }
    }

    #[test]
    fn trajectory_weight_matches_spec_cases() {
        let (env, kernel, params) = setup(20, 77);
        // Trajectory {0}: free weight is w_0 + log K^+(n).
        let t0 = RenewalTrajectory {
            epochs: vec![0],
            horizon: 20,
        };
        let w = trajectory_log_weight(&t0, &env, params, &kernel, Boundary::Free).unwrap();
        let expected = params.beta * env.value(0) + params.h + kernel.log_tail_mass(20).unwrap();
        assert!((w.log_weight - expected).abs() < 1e-14);
        assert!(!w.impossible);
        // Constrained without a contact at n is impossible.
        let wc = trajectory_log_weight(&t0, &env, params, &kernel, Boundary::Constrained).unwrap();
        assert!(wc.impossible);
        assert_eq!(wc.log_weight, f64::NEG_INFINITY);
    }

    #[test]
    fn sub_support_gap_is_flagged() {
        let env = sample_environment(DisorderLaw::Gaussian, 0..=10, 5).unwrap();
        let kernel = build_kernel(0.5, KernelFamily::PowerLawConstant, 64, 2).unwrap();
        let params = PolymerParams::new(0.4, 0.1).unwrap();
        let t = RenewalTrajectory {
            epochs: vec![0, 1],
            horizon: 10,
        };
        let w = trajectory_log_weight(&t, &env, params, &kernel, Boundary::Free).unwrap();
        assert!(w.impossible);
        assert_eq!(w.log_weight, f64::NEG_INFINITY);
    }
}
