//! Decay of the few-contacts/small-gaps event under the free renewal law.
//!
//! For each horizon n the exact probability of
//! {contacts <= c1 log n} ∩ {complete gaps < b n} ∩ {final gap < b n}
//! is computed by the count-resolved renewal DP and compared against the
//! reference envelope n^(-alpha/(9 b)); the report records the first grid
//! point where the envelope holds, whether it persists from there on, and
//! the fitted log-log slope. Threshold conventions: the contact cap uses the
//! floor (a count that must not exceed the bound), the gap thresholds use
//! the ceiling (lengths that must be at least the bound).

use super::renewal_smoke_check;
use crate::error::{Error, Result};
use crate::kernel::RenewalKernel;
use crate::report::{Check, ExperimentReport, ReportHeader, Value};
use crate::stats::fit_line;
use crate::Budget;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct DecayConfig<'a> {
    pub kernel: &'a RenewalKernel,
    /// Gap fraction b in (0, 1/2).
    pub b: f64,
    /// Contact-cap coefficient: the cap is floor(c1 log n).
    pub c1: f64,
    pub n_grid: Vec<u64>,
    pub budget: Budget,
}

#[derive(Debug, Clone)]
pub struct DecayRow {
    pub n: u64,
    pub contacts_cap: u64,
    pub gap_threshold: u64,
    pub probability: f64,
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct DecayOutput {
    pub rows: Vec<DecayRow>,
    /// First grid point where probability <= envelope.
    pub first_crossing: Option<u64>,
    /// Whether the envelope keeps holding after the first crossing.
    pub persistent: bool,
    /// Least-squares slope of log p against log n over positive rows.
    pub fitted_slope: Option<f64>,
    pub envelope_exponent: f64,
}

pub fn decay_check(cfg: &DecayConfig) -> Result<DecayOutput> {
    if !(cfg.b > 0.0 && cfg.b < 0.5) {
        return Err(Error::invalid("b", "gap fraction must lie in (0, 1/2)"));
    }
    if cfg.c1 <= 0.0 {
        return Err(Error::invalid("c1", "contact coefficient must be positive"));
    }
    if cfg.n_grid.is_empty() {
        return Err(Error::invalid("n_grid", "empty grid"));
    }
    let max_n = *cfg.n_grid.iter().max().unwrap();
    if max_n > cfg.kernel.table_horizon() {
        return Err(Error::OutOfRange {
            what: "decay horizon vs kernel table",
            index: max_n as i64,
            limit: cfg.kernel.table_horizon() as i64,
        });
    }
    renewal_smoke_check(cfg.kernel, &cfg.budget)?;

    let alpha = cfg.kernel.alpha();
    let exponent = -alpha / (9.0 * cfg.b);
    let mut rows: Vec<DecayRow> = cfg
        .n_grid
        .par_iter()
        .map(|&n| -> Result<DecayRow> {
            let contacts_cap = (cfg.c1 * (n as f64).ln()).floor() as u64;
            let gap_threshold = (cfg.b * n as f64).ceil() as u64;
            let probability = cfg.kernel.free_event_probability(
                n,
                Some(contacts_cap),
                Some(gap_threshold),
                Some(gap_threshold),
                &cfg.budget,
            )?;
            let envelope = (n as f64).powf(exponent);
            Ok(DecayRow {
                n,
                contacts_cap,
                gap_threshold,
                probability,
                envelope,
                holds: probability <= envelope,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.n);

    let first_crossing = rows.iter().find(|r| r.holds).map(|r| r.n);
    let persistent = match first_crossing {
        None => false,
        Some(n0) => rows.iter().filter(|r| r.n >= n0).all(|r| r.holds),
    };

    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.probability > 0.0)
        .map(|r| ((r.n as f64).ln(), r.probability.ln()))
        .collect();
    let fitted_slope = if fit.len() >= 2 {
        let xs: Vec<f64> = fit.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = fit.iter().map(|p| p.1).collect();
        Some(fit_line(&xs, &ys).0)
    } else {
        None
    };

    Ok(DecayOutput {
        rows,
        first_crossing,
        persistent,
        fitted_slope,
        envelope_exponent: exponent,
    })
}

impl DecayOutput {
    pub fn to_report(&self, mut header: ReportHeader) -> ExperimentReport {
        header.set("envelope_exponent", self.envelope_exponent);
        let mut report = ExperimentReport::new(
            header,
            &["n", "contacts_cap", "gap_threshold", "probability", "envelope", "holds"],
        );
        for r in &self.rows {
            report.push_row(vec![
                Value::U64(r.n),
                Value::U64(r.contacts_cap),
                Value::U64(r.gap_threshold),
                Value::F64(r.probability),
                Value::F64(r.envelope),
                Value::Bool(r.holds),
            ]);
        }
        report.push_check(Check::new(
            "envelope_first_crossing",
            self.first_crossing.is_some(),
            match self.first_crossing {
                Some(n) => format!("envelope first holds at n = {n}"),
                None => "envelope never holds on the grid".to_string(),
            },
        ));
        report.push_check(Check::new(
            "envelope_persists",
            self.persistent,
            "envelope holds for every tabulated n beyond the first crossing",
        ));
        if let Some(slope) = self.fitted_slope {
            report.push_check(Check::new(
                "fitted_slope_below_envelope",
                slope <= self.envelope_exponent + 0.1,
                format!("slope {slope:.4} vs envelope exponent {:.4}", self.envelope_exponent),
            ));
        }
        report
    }
}
