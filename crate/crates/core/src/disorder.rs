//! Disorder laws and their cumulant calculus.
//!
//! Mean-zero i.i.d. disorder with all exponential moments: the standard
//! Gaussian (the default for every experiment) and a bounded symmetric
//! two-point law kept only to cross-check the generating-function and
//! rate-function code paths.
//!
//! Environments are realized per index with counter-based generation, so a
//! window can be extended (to negative indices for the reversed process)
//! without changing values already drawn.

use crate::error::{Error, Result};
use crate::seeding::{site_key, splitmix_next};
use std::f64::consts::{PI, TAU};

/// A mean-zero disorder law with finite exponential moments of all orders.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DisorderLaw {
    /// Standard normal.
    Gaussian,
    /// `+a` or `-a` with probability 1/2 each.
    TwoPoint { a: f64 },
}

impl DisorderLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            DisorderLaw::Gaussian => Ok(()),
            DisorderLaw::TwoPoint { a } => {
                if *a > 0.0 && a.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("law", "two-point amplitude must be positive"))
                }
            }
        }
    }

    /// Short descriptor for report headers.
    pub fn descriptor(&self) -> String {
        match self {
            DisorderLaw::Gaussian => "gaussian".to_string(),
            DisorderLaw::TwoPoint { a } => format!("two-point:{a}"),
        }
    }

    /// `log M(beta) = log E[exp(beta w)]`, exact closed form per family.
    pub fn log_mgf(&self, beta: f64) -> f64 {
        match self {
            DisorderLaw::Gaussian => 0.5 * beta * beta,
            DisorderLaw::TwoPoint { a } => {
                // log cosh(a beta), stable for large arguments.
                let x = (a * beta).abs();
                x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
            }
        }
    }

    /// `(log M)'(beta)`.
    pub fn log_mgf_deriv(&self, beta: f64) -> f64 {
        match self {
            DisorderLaw::Gaussian => beta,
            DisorderLaw::TwoPoint { a } => a * (a * beta).tanh(),
        }
    }

    /// `(log M)''(beta)`.
    pub fn log_mgf_second_deriv(&self, beta: f64) -> f64 {
        match self {
            DisorderLaw::Gaussian => 1.0,
            DisorderLaw::TwoPoint { a } => {
                let c = (a * beta).cosh();
                (a * a) / (c * c)
            }
        }
    }

    /// One disorder value at `index`, keyed by `(seed, index)` only.
    pub fn site_value(&self, seed: u64, index: i64) -> f64 {
        let mut state = site_key(seed, index);
        let a = splitmix_next(&mut state);
        let b = splitmix_next(&mut state);
        match self {
            DisorderLaw::Gaussian => {
                // Box-Muller from two 53-bit uniforms; u1 in (0, 1].
                let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / 9007199254740992.0);
                let u2 = (b >> 11) as f64 * (1.0 / 9007199254740992.0);
                (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
            }
            DisorderLaw::TwoPoint { a: amp } => {
                if a & 1 == 0 {
                    *amp
                } else {
                    -*amp
                }
            }
        }
    }
}

/// Annealed critical point `h_c^ann(beta) = -log M(beta)`.
pub fn annealed_critical_point(law: DisorderLaw, beta: f64) -> f64 {
    -law.log_mgf(beta)
}

/// The interpolation family `h_t(beta) = -(1 + t alpha) log M(beta / (1 + t alpha))`.
///
/// Nondecreasing in `t`; `t = 0` recovers the annealed critical point and
/// `t = 1` an upper bound for the quenched one.
pub fn h_t(law: DisorderLaw, beta: f64, t: f64, alpha: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::invalid("t", "interpolation parameter must be >= 0"));
    }
    let s = 1.0 + t * alpha;
    Ok(-s * law.log_mgf(beta / s))
}

/// Rate-function evaluation; `diverged` marks means outside the achievable
/// range, reported as +inf.
#[derive(Debug, Clone, Copy)]
pub struct RateEval {
    pub value: f64,
    /// The mean `u` lies outside the open achievable range of the law.
    pub diverged: bool,
    /// The maximizing tilt argument, when one exists.
    pub argmax: Option<f64>,
}

/// Large-deviation rate function `Phi(u) = sup_l { l u - log M(l) }`.
///
/// Solved by safeguarded Newton on the strictly concave inner problem: the
/// stationarity condition is `(log M)'(l) = u`, driven to residual 1e-12
/// with a bisection fallback whenever a Newton step leaves the bracket.
pub fn rate_function(law: DisorderLaw, u: f64) -> Result<RateEval> {
    law.validate()?;
    if u == 0.0 {
        return Ok(RateEval {
            value: 0.0,
            diverged: false,
            argmax: Some(0.0),
        });
    }
    if let DisorderLaw::TwoPoint { a } = law {
        if u.abs() >= a {
            return Ok(RateEval {
                value: f64::INFINITY,
                diverged: true,
                argmax: None,
            });
        }
    }

    // Bracket the root of g(l) = (log M)'(l) - u; g is increasing.
    let (mut lo, mut hi);
    if u > 0.0 {
        lo = 0.0;
        hi = 1.0;
        let mut tries = 0;
        while law.log_mgf_deriv(hi) < u {
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::NonConvergence { what: "rate-function bracket" });
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        let mut tries = 0;
        while law.log_mgf_deriv(lo) > u {
            lo *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::NonConvergence { what: "rate-function bracket" });
            }
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = law.log_mgf_deriv(x) - u;
        if g.abs() <= 1e-12 {
            return Ok(RateEval {
                value: x * u - law.log_mgf(x),
                diverged: false,
                argmax: Some(x),
            });
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = g / law.log_mgf_second_deriv(x);
        let newton = x - step;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence { what: "rate-function Newton iteration" })
}

/// Tilt level `u_beta` with `beta u - Phi(u) = log M(beta)`, i.e.
/// `u_beta = (log M)'(beta)`.
pub fn tilt_level(law: DisorderLaw, beta: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::invalid("beta", "tilt level requires beta > 0"));
    }
    law.validate()?;
    Ok(law.log_mgf_deriv(beta))
}

/// Minimal `beta` at which the tilted-moment gain exceeds the per-return
/// entropy cost `log(1/K(r))`:
///
/// `log M(beta) - (1 + eps alpha) log M(beta / (1 + eps alpha)) > log(1/K(r))`.
///
/// Found by bisection to 1e-6 after expanding the upper bracket; existence
/// for large `beta` follows from superlinearity of the cumulant function,
/// which the bracket expansion verifies in passing.
pub fn segment_gain_threshold(law: DisorderLaw, epsilon: f64, alpha: f64, k_r: f64) -> Result<f64> {
    law.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    if !(k_r > 0.0 && k_r <= 1.0) {
        return Err(Error::invalid("k_r", "K(r) must lie in (0, 1]"));
    }
    let cost = (1.0 / k_r).ln();
    let s = 1.0 + epsilon * alpha;
    let gain = |beta: f64| law.log_mgf(beta) - s * law.log_mgf(beta / s);
    if cost <= 0.0 {
        // K(r) = 1: the gain is strictly positive for every beta > 0.
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    let mut tries = 0;
    while gain(hi) <= cost {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NonConvergence { what: "gain-threshold bracket expansion" });
        }
    }
    let mut lo = 0.0f64;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if gain(mid) > cost {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Annealed critical point plus the interpolation bracket for the quenched
/// critical point: `h_0(beta) <= h_c(beta) <= h_1(beta)`.
#[derive(Debug, Clone, Copy)]
pub struct CriticalPoints {
    pub law: DisorderLaw,
    pub alpha: f64,
    pub beta: f64,
    pub h_ann: f64,
    /// `(h_0, h_1)` bracket for the quenched critical point.
    pub h_c_bracket: (f64, f64),
    /// Externally supplied estimate of the quenched critical point; high
    /// precision estimation is out of scope, so none is computed here.
    pub h_c_estimate: Option<f64>,
}

impl CriticalPoints {
    pub fn new(law: DisorderLaw, alpha: f64, beta: f64) -> Result<Self> {
        if beta < 0.0 {
            return Err(Error::invalid("beta", "must be >= 0"));
        }
        law.validate()?;
        let h_ann = annealed_critical_point(law, beta);
        let h1 = h_t(law, beta, 1.0, alpha)?;
        Ok(CriticalPoints {
            law,
            alpha,
            beta,
            h_ann,
            h_c_bracket: (h_ann, h1),
            h_c_estimate: None,
        })
    }

    /// Attaches a quenched critical-point estimate; it must respect the
    /// bracket.
    pub fn with_estimate(mut self, h_c: f64) -> Result<Self> {
        let (lo, hi) = self.h_c_bracket;
        if h_c < lo || h_c > hi {
            return Err(Error::invalid(
                "h_c_estimate",
                format!("estimate {h_c} outside the bracket [{lo}, {hi}]"),
            ));
        }
        self.h_c_estimate = Some(h_c);
        Ok(self)
    }

    /// `h_t(beta)` along the family at this beta.
    pub fn h_t(&self, t: f64) -> Result<f64> {
        h_t(self.law, self.beta, t, self.alpha)
    }
}

/// A realized disorder sequence over a contiguous integer window.
#[derive(Debug, Clone)]
pub struct Environment {
    law: DisorderLaw,
    lo: i64,
    hi: i64,
    seed: u64,
    values: Vec<f64>,
}

/// Draws an i.i.d. environment over `window`, deterministic in
/// `(law, seed, index)` alone: extending the window later reproduces the
/// same values at already-generated indices.
pub fn sample_environment(
    law: DisorderLaw,
    window: std::ops::RangeInclusive<i64>,
    seed: u64,
) -> Result<Environment> {
    law.validate()?;
    let (lo, hi) = (*window.start(), *window.end());
    if lo > hi {
        return Err(Error::invalid("window", "empty environment window"));
    }
    let values = (lo..=hi).map(|i| law.site_value(seed, i)).collect();
    Ok(Environment {
        law,
        lo,
        hi,
        seed,
        values,
    })
}

impl Environment {
    pub fn law(&self) -> DisorderLaw {
        self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Value at site `i`; the site must lie in the window.
    #[inline]
    pub fn value(&self, i: i64) -> f64 {
        debug_assert!(i >= self.lo && i <= self.hi, "site {i} outside window");
        self.values[(i - self.lo) as usize]
    }

    /// Contiguous slice of values for `a..=b`.
    pub fn slice(&self, a: i64, b: i64) -> Result<&[f64]> {
        if a < self.lo || b > self.hi || a > b {
            return Err(Error::WindowTooSmall {
                lo: self.lo,
                hi: self.hi,
                need_lo: a,
                need_hi: b,
            });
        }
        Ok(&self.values[(a - self.lo) as usize..=(b - self.lo) as usize])
    }

    /// Same environment over a (usually larger) window; values agree on the
    /// overlap by construction.
    pub fn extended(&self, window: std::ops::RangeInclusive<i64>) -> Result<Environment> {
        sample_environment(self.law, window, self.seed)
    }

    /// Copy with the values on `sites` replaced by `value`; used to plant
    /// synthetic rich segments.
    pub fn planted(&self, sites: &[i64], value: f64) -> Result<Environment> {
        let mut env = self.clone();
        for &s in sites {
            if s < env.lo || s > env.hi {
                return Err(Error::WindowTooSmall {
                    lo: env.lo,
                    hi: env.hi,
                    need_lo: s,
                    need_hi: s,
                });
            }
            env.values[(s - env.lo) as usize] = value;
        }
        Ok(env)
    }
}

/// Result of scanning one rich segment.
#[derive(Debug, Clone)]
pub struct RichSegment {
    /// The scanned sites `n - i r`, i = 0..len-1.
    pub indices: Vec<i64>,
    /// Disorder average over the segment.
    pub average: f64,
    /// Whether the average reached the level `u`.
    pub hit: bool,
}

/// Scans the arithmetic segment of `ceil(gamma log n)` sites ending at `n`
/// with spacing `r`, and reports whether its disorder average reaches `u`.
///
/// The segment length uses the ceiling convention: the probe must be at
/// least `gamma log n` sites long.
pub fn rich_segment_scan(
    env: &Environment,
    n: u64,
    r: u64,
    gamma: f64,
    u: f64,
) -> Result<RichSegment> {
    if n < 2 {
        return Err(Error::invalid("n", "rich segment scan requires n >= 2"));
    }
    if gamma <= 0.0 {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if r == 0 {
        return Err(Error::invalid("r", "segment spacing must be >= 1"));
    }
    let len = (gamma * (n as f64).ln()).ceil() as i64;
    let len = len.max(1);
    let mut indices = Vec::with_capacity(len as usize);
    for i in 0..len {
        indices.push(n as i64 - i * r as i64);
    }
    let (lo, hi) = env.window();
    let need_lo = *indices.last().unwrap();
    if need_lo < lo || (n as i64) > hi {
        return Err(Error::WindowTooSmall {
            lo,
            hi,
            need_lo,
            need_hi: n as i64,
        });
    }
    let sum: f64 = indices.iter().map(|&i| env.value(i)).sum();
    let average = sum / len as f64;
    Ok(RichSegment {
        indices,
        average,
        hit: average >= u,
    })
}

/// Exact standard-normal upper tail, used as the oracle for Gaussian
/// rich-segment hit frequencies.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Density of the standard normal, occasionally useful alongside the tail.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_log_mgf_closed_form() {
        assert_eq!(DisorderLaw::Gaussian.log_mgf(1.0), 0.5);
        assert_eq!(DisorderLaw::Gaussian.log_mgf(0.0), 0.0);
        assert_eq!(annealed_critical_point(DisorderLaw::Gaussian, 2.0), -2.0);
        assert_eq!(annealed_critical_point(DisorderLaw::Gaussian, 0.0), 0.0);
    }

    #[test]
    fn two_point_log_mgf_matches_two_atom_expectation() {
        let law = DisorderLaw::TwoPoint { a: 1.0 };
        // Direct expectation over the two atoms.
        let direct = |beta: f64| (0.5 * (beta.exp() + (-beta).exp())).ln();
        for beta in [0.0, 0.5, 1.0, 2.0, 5.0] {
            assert!((law.log_mgf(beta) - direct(beta)).abs() < 1e-14, "beta={beta}");
        }
        assert!((law.log_mgf(2.0) - 1.3250027473578645).abs() < 1e-12);
        assert!(
            (annealed_critical_point(law, 1.0) + 0.4337808304830272).abs() < 1e-12
        );
    }

    #[test]
    fn h_t_closed_form_and_monotonicity() {
        // Gaussian: h_t = -beta^2 / (2 (1 + t alpha)).
        let v = h_t(DisorderLaw::Gaussian, 2.0, 1.0, 1.0).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        let h0 = h_t(DisorderLaw::Gaussian, 1.7, 0.0, 0.5).unwrap();
        assert!((h0 - annealed_critical_point(DisorderLaw::Gaussian, 1.7)).abs() < 1e-15);
        for law in [DisorderLaw::Gaussian, DisorderLaw::TwoPoint { a: 1.3 }] {
            for beta in [0.3, 1.0, 2.5] {
                let a = h_t(law, beta, 0.2, 0.5).unwrap();
                let b = h_t(law, beta, 0.8, 0.5).unwrap();
                assert!(a <= b + 1e-15, "law={law:?} beta={beta}");
            }
        }
        assert!(h_t(DisorderLaw::Gaussian, 1.0, -0.1, 0.5).is_err());
    }

    #[test]
    fn gaussian_rate_function_is_half_square() {
        let e = rate_function(DisorderLaw::Gaussian, 3.0).unwrap();
        assert!(!e.diverged);
        assert!((e.value - 4.5).abs() < 1e-12);
        assert!((e.argmax.unwrap() - 3.0).abs() < 1e-10);
        let z = rate_function(DisorderLaw::Gaussian, 0.0).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn tilt_level_satisfies_legendre_identity() {
        for law in [DisorderLaw::Gaussian, DisorderLaw::TwoPoint { a: 2.0 }] {
            for beta in [0.25, 1.0, 3.5] {
                let u = tilt_level(law, beta).unwrap();
                let phi = rate_function(law, u).unwrap();
                assert!(!phi.diverged);
                let residual = beta * u - phi.value - law.log_mgf(beta);
                assert!(residual.abs() < 1e-10, "law={law:?} beta={beta} residual={residual:e}");
            }
        }
        assert!((tilt_level(DisorderLaw::Gaussian, 3.5).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn two_point_rate_function_diverges_outside_support() {
        let law = DisorderLaw::TwoPoint { a: 1.0 };
        let e = rate_function(law, 1.5).unwrap();
        assert!(e.diverged);
        assert!(e.value.is_infinite());
        // Interior value against the closed form
        // Phi(u) = ((1+t) ln(1+t) + (1-t) ln(1-t)) / 2, t = u/a.
        let t: f64 = 0.6;
        let closed = 0.5 * ((1.0 + t) * (1.0 + t).ln() + (1.0 - t) * (1.0 - t).ln());
        let e = rate_function(law, 0.6).unwrap();
        assert!((e.value - closed).abs() < 1e-11);
    }

    #[test]
    fn gain_threshold_gaussian_reduction() {
        // Gaussian, eps = 0.5, alpha = 0.5: gain reduces to beta^2 / 10,
        // so the threshold is sqrt(10 log(1/K(1))) for K(1) = 1/zeta(1.5).
        let k1 = 0.3827929116254098; // 1 / zeta(1.5)
        let t = segment_gain_threshold(DisorderLaw::Gaussian, 0.5, 0.5, k1).unwrap();
        let expected = (10.0 * (1.0f64 / k1).ln()).sqrt();
        assert!((t - expected).abs() < 2e-6, "t={t} expected={expected}");
        // Bisection contract.
        let s = 1.25;
        let gain =
            |beta: f64| DisorderLaw::Gaussian.log_mgf(beta) - s * DisorderLaw::Gaussian.log_mgf(beta / s);
        let cost = (1.0f64 / k1).ln();
        assert!(gain(t + 1e-3) > cost);
        assert!(gain(t - 1e-3) < cost);
    }

    #[test]
    fn gain_threshold_zero_cost() {
        assert_eq!(
            segment_gain_threshold(DisorderLaw::Gaussian, 0.5, 0.5, 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn gain_threshold_two_point_contract() {
        // Bounded disorder saturates the gain at (s - 1) log 2, so the
        // threshold exists only below that cost; above it the bracket
        // expansion must report failure.
        let law = DisorderLaw::TwoPoint { a: 2.0 };
        let (eps, alpha) = (0.4, 0.8);
        let s = 1.0 + eps * alpha;
        let k_r = 0.9; // cost 0.105 < (s - 1) log 2 = 0.222
        let t = segment_gain_threshold(law, eps, alpha, k_r).unwrap();
        let gain = |beta: f64| law.log_mgf(beta) - s * law.log_mgf(beta / s);
        let cost = (1.0f64 / k_r).ln();
        assert!(gain(t + 1e-3) > cost);
        assert!(gain(t - 1e-3) < cost);
        let unattainable = segment_gain_threshold(law, eps, alpha, 0.3);
        assert!(matches!(unattainable, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn critical_points_bracket_and_estimate() {
        let cp = CriticalPoints::new(DisorderLaw::Gaussian, 0.5, 2.0).unwrap();
        assert_eq!(cp.h_ann, -2.0);
        assert_eq!(cp.h_c_bracket.0, cp.h_ann);
        assert!(cp.h_c_bracket.0 <= cp.h_c_bracket.1);
        assert!((cp.h_t(0.0).unwrap() - cp.h_ann).abs() < 1e-15);
        assert!((cp.h_t(1.0).unwrap() - cp.h_c_bracket.1).abs() < 1e-15);
        let mid = 0.5 * (cp.h_c_bracket.0 + cp.h_c_bracket.1);
        let with = cp.with_estimate(mid).unwrap();
        assert_eq!(with.h_c_estimate, Some(mid));
        assert!(with.h_c_bracket.0 <= with.h_c_estimate.unwrap());
        assert!(cp.with_estimate(cp.h_ann - 1.0).is_err());
    }

    #[test]
    fn environment_is_deterministic_and_window_independent() {
        let law = DisorderLaw::Gaussian;
        let a = sample_environment(law, 0..=100, 42).unwrap();
        let b = sample_environment(law, 0..=100, 42).unwrap();
        for i in 0..=100 {
            assert_eq!(a.value(i), b.value(i));
        }
        let wide = sample_environment(law, -50..=100, 42).unwrap();
        for i in 0..=100 {
            assert_eq!(a.value(i), wide.value(i));
        }
        let c = sample_environment(law, 0..=100, 43).unwrap();
        assert!((0..=100).any(|i| a.value(i) != c.value(i)));
    }

    #[test]
    fn environment_mean_is_clt_consistent() {
        let n = 1_000_000i64;
        let env = sample_environment(DisorderLaw::Gaussian, 0..=n - 1, 7).unwrap();
        let mean: f64 = (0..n).map(|i| env.value(i)).sum::<f64>() / n as f64;
        let band = 4.0 / (n as f64).sqrt();
        assert!(mean.abs() < band, "mean={mean} band={band}");
        let var: f64 = (0..n).map(|i| env.value(i).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.01, "var={var}");
    }

    #[test]
    fn rich_segment_unrolls_the_ceiling_convention() {
        // gamma log n = 3.1 -> 4 sites at spacing 2 ending at 100.
        let n = 100u64;
        let gamma = 3.1 / (100f64).ln();
        let env = sample_environment(DisorderLaw::Gaussian, 0..=120, 1).unwrap();
        let seg = rich_segment_scan(&env, n, 2, gamma, 0.0).unwrap();
        assert_eq!(seg.indices, vec![100, 98, 96, 94]);
    }

    #[test]
    fn rich_segment_constant_environment_hits_exactly() {
        let env = sample_environment(DisorderLaw::Gaussian, 0..=200, 3)
            .unwrap()
            .planted(&(0..=200).collect::<Vec<_>>(), 1.25)
            .unwrap();
        let seg = rich_segment_scan(&env, 150, 1, 0.6, 1.25).unwrap();
        assert_eq!(seg.average, 1.25);
        assert!(seg.hit);
    }

    #[test]
    fn rich_segment_hit_frequency_matches_normal_tail() {
        let n = 600u64;
        let gamma = 1.0;
        let u = 0.8;
        let len = (gamma * (n as f64).ln()).ceil();
        let exact = normal_upper_tail(u * len.sqrt());
        let replicas = 40_000u64;
        let mut hits = 0u64;
        for k in 0..replicas {
            let env = sample_environment(DisorderLaw::Gaussian, 0..=n as i64, 1000 + k).unwrap();
            if rich_segment_scan(&env, n, 1, gamma, u).unwrap().hit {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / replicas as f64;
        let se = (exact * (1.0 - exact) / replicas as f64).sqrt();
        assert!(
            (p_hat - exact).abs() <= 3.0 * se,
            "p_hat={p_hat} exact={exact} se={se}"
        );
    }

    #[test]
    fn rich_segment_rejects_small_window() {
        let env = sample_environment(DisorderLaw::Gaussian, 50..=100, 1).unwrap();
        let err = rich_segment_scan(&env, 100, 25, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::WindowTooSmall { .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn log_mgf_is_convex_nondecreasing_from_zero(
            beta in 0.05f64..6.0,
            step in 0.01f64..0.5,
        ) {
            for law in [DisorderLaw::Gaussian, DisorderLaw::TwoPoint { a: 1.5 }] {
                let f0 = law.log_mgf(beta - step.min(beta));
                let f1 = law.log_mgf(beta);
                let f2 = law.log_mgf(beta + step);
                prop_assert!(law.log_mgf(0.0).abs() < 1e-15);
                prop_assert!(f2 >= f1 - 1e-12);
                // Second difference nonnegative on the grid.
                prop_assert!(f2 - 2.0 * f1 + f0 >= -1e-8);
            }
        }

        #[test]
        fn superlinear_gain_is_monotone_and_divergent(x in 0.5f64..20.0) {
            // Psi(s x) - s Psi(x) nondecreasing in x and eventually large.
            for s in [1.25f64, 2.0] {
                let g = |x: f64| DisorderLaw::Gaussian.log_mgf(s * x)
                    - s * DisorderLaw::Gaussian.log_mgf(x);
                prop_assert!(g(x + 0.25) >= g(x) - 1e-12);
                prop_assert!(g(x + 50.0) > g(x) + 10.0);
            }
        }

        #[test]
        fn rate_function_is_nonnegative_and_convex(u in -4.0f64..4.0) {
            let phi = |u: f64| rate_function(DisorderLaw::Gaussian, u).unwrap().value;
            prop_assert!(phi(u) >= -1e-14);
            let d = 0.3;
            prop_assert!(phi(u + d) - 2.0 * phi(u) + phi(u - d) >= -1e-9);
        }

        #[test]
        fn window_extension_preserves_values(seed in 0u64..1000, shift in 1i64..64) {
            let env = sample_environment(DisorderLaw::Gaussian, 0..=32, seed).unwrap();
            let ext = env.extended(-shift..=32).unwrap();
            for i in 0..=32 {
                prop_assert_eq!(env.value(i), ext.value(i));
            }
        }
    }
}
