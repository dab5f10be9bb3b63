//! Early identification of the MTD.
//!
//! Every remaining enrollment is hypothetically assigned to the current dose.
//! With the DLT rate at the current dose following `Beta(n_dlt, n_e)`, the
//! number of future DLTs among the remaining patients is beta-binomial, and
//! the dose is *retained* when the final count at `n + r` patients lands
//! strictly between the escalation and de-escalation boundaries of row
//! `n + r`:
//!
//! ```text
//! retain = P(X ≤ D − 1 − n_dlt) − P(X ≤ E − n_dlt),   X ~ BB(r_pend, α, β)
//! ```
//!
//! At the lowest dose only the escalation term applies (`1 − P(X ≤ E − n_dlt)`),
//! at the highest only the de-escalation term. The MTD is identified when the
//! retainment probability exceeds the threshold, which is doubled at the
//! edges.

use serde::{Deserialize, Serialize};

use crate::designs::BoundaryTable;
use crate::error::{domain, Error, Result};
use crate::mathcore::{beta_binomial_cdf, BetaShape, Probability};
use crate::tite::DoseSnapshot;

/// Enrollment still to come.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainingBudget {
    /// Remaining enrollments trial-wide, `N − enrolled`.
    pub r: u32,
    /// `r` plus the unobserved pending follow-up at the current dose.
    pub r_pend: f64,
}

impl RemainingBudget {
    pub fn new(n_max: u32, enrolled: u32, snap: &DoseSnapshot) -> Result<Self> {
        let r = n_max
            .checked_sub(enrolled)
            .ok_or_else(|| Error::Domain(format!("{enrolled} enrolled exceeds the sample size {n_max}")))?;
        Ok(RemainingBudget {
            r,
            r_pend: r as f64 + snap.pend_unobserved_frac,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    /// Threshold at interior doses.
    pub tau: f64,
    /// Threshold at the lowest or highest admissible dose.
    pub tau_edge: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { tau: 0.4, tau_edge: 0.8 }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.tau && self.tau <= self.tau_edge && self.tau_edge <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "thresholds need 0 < tau ≤ tau_edge ≤ 1, got ({}, {})",
                self.tau, self.tau_edge
            )))
        }
    }
}

/// Where the current dose sits among the admissible doses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosePosition {
    Min,
    Interior,
    Max,
    /// The only admissible dose.
    Only,
}

impl DosePosition {
    /// Position of `dose` (1-based) when doses `1..=highest` are admissible.
    pub fn of(dose: usize, highest: usize) -> Self {
        match (dose <= 1, dose >= highest) {
            (true, true) => DosePosition::Only,
            (true, false) => DosePosition::Min,
            (false, true) => DosePosition::Max,
            (false, false) => DosePosition::Interior,
        }
    }

    pub fn is_edge(self) -> bool {
        self != DosePosition::Interior
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopOutcome {
    pub retainment: Probability,
    pub threshold_used: Probability,
    pub identified: bool,
    pub mtd_level: Option<usize>,
}

impl EarlyStopOutcome {
    pub fn not_identified(threshold: f64) -> Self {
        EarlyStopOutcome {
            retainment: Probability::ZERO,
            threshold_used: Probability::clamped(threshold),
            identified: false,
            mtd_level: None,
        }
    }
}

/// Beta shape for the predictive distribution: `(n_dlt, n_e)`, or
/// `(0.5, n_e + 0.5)` when no DLT has been seen at the dose.
pub fn effective_shape(snap: &DoseSnapshot) -> Result<BetaShape> {
    if snap.n == 0 {
        return domain("no patients at the current dose");
    }
    if snap.n_dlt == 0 {
        BetaShape::new(0.5, snap.n_e + 0.5)
    } else if snap.n_e > 0.0 {
        BetaShape::new(snap.n_dlt as f64, snap.n_e)
    } else {
        domain("DLTs observed but no DLT-free follow-up at the current dose")
    }
}

/// The two cumulative terms behind the retainment probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetainmentTerms {
    pub shape: BetaShape,
    /// Boundary row `n + r`.
    pub row_n: u32,
    pub escalate_max: i64,
    pub deescalate_min: i64,
    /// `P(X ≤ D − 1 − n_dlt)`: the dose is not de-escalated.
    pub not_deescalate: Probability,
    /// `P(X ≤ E − n_dlt)`: the dose is escalated.
    pub escalate: Probability,
    pub retainment: Probability,
}

pub fn retainment_terms(
    snap: &DoseSnapshot,
    budget: &RemainingBudget,
    table: &BoundaryTable,
    position: DosePosition,
) -> Result<RetainmentTerms> {
    let shape = effective_shape(snap)?;
    let row_n = snap.n + budget.r;
    let row = table.row(row_n)?;
    let dlt = snap.n_dlt as i64;
    let not_deescalate = beta_binomial_cdf(row.deescalate_min - 1 - dlt, budget.r_pend, shape)?;
    let escalate = beta_binomial_cdf(row.escalate_max - dlt, budget.r_pend, shape)?;
    let (upper, lower) = (not_deescalate.value(), escalate.value());
    let retainment = match position {
        DosePosition::Interior => upper - lower,
        DosePosition::Max => upper,
        DosePosition::Min => 1.0 - lower,
        DosePosition::Only => upper.min(1.0 - lower),
    };
    Ok(RetainmentTerms {
        shape,
        row_n,
        escalate_max: row.escalate_max,
        deescalate_min: row.deescalate_min,
        not_deescalate,
        escalate,
        retainment: Probability::clamped(retainment),
    })
}

pub fn retainment_probability(
    snap: &DoseSnapshot,
    budget: &RemainingBudget,
    table: &BoundaryTable,
    at_min_dose: bool,
    at_max_dose: bool,
) -> Result<Probability> {
    let position = match (at_min_dose, at_max_dose) {
        (true, true) => DosePosition::Only,
        (true, false) => DosePosition::Min,
        (false, true) => DosePosition::Max,
        (false, false) => DosePosition::Interior,
    };
    Ok(retainment_terms(snap, budget, table, position)?.retainment)
}

pub fn evaluate_early_stop(
    snap: &DoseSnapshot,
    budget: &RemainingBudget,
    table: &BoundaryTable,
    position: DosePosition,
    current_dose: usize,
    cfg: &ThresholdConfig,
) -> Result<EarlyStopOutcome> {
    let threshold = if position.is_edge() { cfg.tau_edge } else { cfg.tau };
    let retainment = retainment_terms(snap, budget, table, position)?.retainment;
    let identified = retainment.value() > threshold;
    Ok(EarlyStopOutcome {
        retainment,
        threshold_used: Probability::new(threshold)?,
        identified,
        mtd_level: identified.then_some(current_dose),
    })
}
