//! Parameter planner for the rich-segment log-returns mechanism.
//!
//! Given a disorder law, a kernel, a margin `epsilon` and an operating point
//! `(beta, h)` with `h > h_eps(beta)`, the planner derives the full
//! constructive chain: the tilt level `u_beta`, its rate value `Phi(u_beta)`,
//! feasibility of the gain-vs-entropy-cost inequality, and then
//! `(delta, gamma, kappa, m, lambda, nu)`. The chain only constrains `delta`
//! and `1/gamma` to open intervals; the tie-breaks here are half the slack
//! ratio for `delta` and the interval midpoint for `1/gamma`, recorded in
//! every report header. Re-running with identical inputs is bit-identical.

use crate::disorder::{h_t, rate_function, segment_gain_threshold, tilt_level, DisorderLaw};
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::report::{Check, ExperimentReport, ReportHeader, Value};

/// The planned parameter chain, with re-verified inequalities in `checks`.
#[derive(Debug, Clone)]
pub struct LogReturnsPlan {
    pub epsilon: f64,
    pub beta: f64,
    pub h: f64,
    pub h_eps: f64,
    pub u_beta: f64,
    pub phi_u: f64,
    /// Per-return entropy cost `log(1/K(r))`.
    pub cost: f64,
    /// `beta u_beta + h_eps - cost`, the admissible upper end for `1/gamma`.
    pub gain: f64,
    pub feasible: bool,
    /// Minimal beta at which the chain becomes feasible for this kernel.
    pub threshold_beta: f64,
    pub infeasibility: Option<String>,
    pub delta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub m: u64,
    pub lambda: f64,
    pub nu: f64,
    pub checks: Vec<Check>,
}

/// Derives the parameter chain; infeasible inputs yield `feasible = false`
/// with the feasibility threshold attached (not an error).
pub fn plan_log_returns(
    law: DisorderLaw,
    kernel: &RenewalKernel,
    epsilon: f64,
    beta: f64,
    h: f64,
) -> Result<LogReturnsPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    if beta <= 0.0 {
        return Err(Error::invalid("beta", "must be positive"));
    }
    let alpha = kernel.alpha();
    let h_eps = h_t(law, beta, epsilon, alpha)?;
    if h <= h_eps {
        return Err(Error::invalid(
            "h",
            format!("the mechanism requires h > h_eps(beta) = {h_eps}, got {h}"),
        ));
    }
    let k_r = kernel.mass(kernel.support_min())?;
    let cost = (1.0 / k_r).ln();
    let u_beta = tilt_level(law, beta)?;
    let phi = rate_function(law, u_beta)?;
    if phi.diverged {
        return Err(Error::invalid("beta", "tilt level outside the achievable mean range"));
    }
    let phi_u = phi.value;
    let gain = beta * u_beta + h_eps - cost;
    let threshold_beta = segment_gain_threshold(law, epsilon, alpha, k_r)?;

    // Feasibility: the tilted-moment gain must exceed the entropy cost,
    // equivalently gain > Phi(u_beta) through the Legendre identity.
    let s = 1.0 + epsilon * alpha;
    let direct = law.log_mgf(beta) - s * law.log_mgf(beta / s);
    let feasible = direct > cost;

    let mut plan = LogReturnsPlan {
        epsilon,
        beta,
        h,
        h_eps,
        u_beta,
        phi_u,
        cost,
        gain,
        feasible,
        threshold_beta,
        infeasibility: None,
        delta: f64::NAN,
        gamma: f64::NAN,
        kappa: f64::NAN,
        m: 0,
        lambda: f64::NAN,
        nu: f64::NAN,
        checks: Vec::new(),
    };
    if !feasible {
        plan.infeasibility = Some(format!(
            "gain {direct:.6} does not exceed the entropy cost {cost:.6}; feasible only for beta > {threshold_beta:.6}"
        ));
        return Ok(plan);
    }

    // delta: half the slack ratio between the interval ends.
    let slack_ratio = gain / phi_u;
    let delta = 0.5 * (slack_ratio - 1.0);
    // 1/gamma: midpoint of the admissible interval ((1+delta) Phi(u), gain).
    let lo = (1.0 + delta) * phi_u;
    let inv_gamma = 0.5 * (lo + gain);
    let gamma = 1.0 / inv_gamma;
    let kappa = gamma * gain - 1.0;
    // Smallest integer strictly above 4/kappa.
    let m = (4.0 / kappa).floor() as u64 + 1;
    let lambda = 2.0 * (law.log_mgf(m as f64 * beta) / m as f64 + h);
    let nu = kappa / (2.0 * lambda);

    plan.delta = delta;
    plan.gamma = gamma;
    plan.kappa = kappa;
    plan.m = m;
    plan.lambda = lambda;
    plan.nu = nu;

    let mut check = |name: &str, pass: bool, slack: f64| {
        plan.checks
            .push(Check::new(name, pass, format!("slack {slack:.6e}")));
    };
    check("gain_exceeds_entropy_cost", direct > cost, direct - cost);
    check(
        "legendre_equivalence",
        (gain - phi_u) > 0.0 && ((beta * u_beta - phi_u) - law.log_mgf(beta)).abs() < 1e-9,
        gain - phi_u,
    );
    check("inv_gamma_above_rate", inv_gamma > (1.0 + delta) * phi_u, inv_gamma - lo);
    check("inv_gamma_below_gain", inv_gamma < gain, gain - inv_gamma);
    check("kappa_positive", kappa > 0.0, kappa);
    check("m_exceeds_four_over_kappa", m as f64 > 4.0 / kappa, m as f64 - 4.0 / kappa);
    check("lambda_positive", lambda > 0.0, lambda);
    check("nu_positive", nu > 0.0, nu);
    Ok(plan)
}

impl LogReturnsPlan {
    pub fn all_checks_pass(&self) -> bool {
        self.feasible && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header
            .set("delta_rule", "half-slack-ratio")
            .set("gamma_rule", "interval-midpoint");
        let mut report = ExperimentReport::new(
            header,
            &[
                "feasible",
                "epsilon",
                "beta",
                "h",
                "h_eps",
                "u_beta",
                "phi_u",
                "cost",
                "gain",
                "threshold_beta",
                "delta",
                "gamma",
                "kappa",
                "m",
                "lambda",
                "nu",
            ],
        );
        report.push_row(vec![
            Value::Bool(self.feasible),
            Value::F64(self.epsilon),
            Value::F64(self.beta),
            Value::F64(self.h),
            Value::F64(self.h_eps),
            Value::F64(self.u_beta),
            Value::F64(self.phi_u),
            Value::F64(self.cost),
            Value::F64(self.gain),
            Value::F64(self.threshold_beta),
            Value::F64(self.delta),
            Value::F64(self.gamma),
            Value::F64(self.kappa),
            Value::U64(self.m),
            Value::F64(self.lambda),
            Value::F64(self.nu),
        ]);
        for c in &self.checks {
            report.push_check(c.clone());
        }
        if let Some(reason) = &self.infeasibility {
            report.push_check(Check::new("feasible", false, reason.clone()));
        }
        report
    }
}

/// Sparse horizon subsequence `n_{j+1} = n_j + ceil(2 r gamma log n_j)` whose
/// rich segments are pairwise disjoint (the independence precondition).
pub fn rich_subsequence(n0: u64, r: u64, gamma: f64, count: usize) -> Result<Vec<u64>> {
    if r == 0 || gamma <= 0.0 {
        return Err(Error::invalid("gamma", "requires r >= 1 and gamma > 0"));
    }
    if n0 < 2 || 2.0 * r as f64 * gamma * (n0 as f64).ln() < 1.0 {
        return Err(Error::invalid(
            "n0",
            "starting point too small: the step 2 r gamma log n0 must be >= 1",
        ));
    }
    let mut out = Vec::with_capacity(count);
    let mut n = n0;
    for _ in 0..count {
        out.push(n);
        let step = (2.0 * r as f64 * gamma * (n as f64).ln()).ceil() as u64;
        n = n
            .checked_add(step)
            .ok_or_else(|| Error::invalid("count", "subsequence overflow"))?;
    }
    // Disjointness of consecutive rich segments: the segment at n_j spans
    // [n_j - r (len_j - 1), n_j]; the next segment must start above n_j.
    for w in out.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len_b = (gamma * (b as f64).ln()).ceil() as u64;
        let start_b = b as i64 - (r * (len_b - 1)) as i64;
        if start_b <= a as i64 {
            return Err(Error::invalid(
                "n0",
                format!("rich segments at {a} and {b} overlap; n0 too small"),
            ));
        }
    }
    Ok(out)
}
