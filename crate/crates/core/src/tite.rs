//! Time-to-event bookkeeping: per-dose snapshots with fractional follow-up and
//! dose decisions that tolerate pending assessments.

use serde::{Deserialize, Serialize};

use crate::designs::{Decision, Design};
use crate::error::{domain, Result};

/// Assessment status of one patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// Still inside the assessment window with no DLT. `observed_days` is the
    /// follow-up known at the time the record was written; snapshots extend
    /// it up to their own `now`.
    Pending { observed_days: f64 },
    CompletedNoDlt,
    Dlt { at_day: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: u64,
    /// 1-based dose level.
    pub dose_level: usize,
    pub enroll_time: f64,
    pub outcome: Outcome,
}

impl PatientRecord {
    pub fn pending(id: u64, dose_level: usize, enroll_time: f64) -> Self {
        PatientRecord {
            id,
            dose_level,
            enroll_time,
            outcome: Outcome::Pending { observed_days: 0.0 },
        }
    }
}

/// Tallies at one dose at a decision instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoseSnapshot {
    pub n: u32,
    pub n_dlt: u32,
    /// Patients who completed the window without a DLT.
    pub n_nodlt: u32,
    /// Σ observed pending follow-up ÷ window.
    pub pend_observed_frac: f64,
    /// Σ remaining pending follow-up ÷ window.
    pub pend_unobserved_frac: f64,
    /// Estimated number of DLT-free patients, `n_nodlt + pend_observed_frac`.
    pub n_e: f64,
    pub pending_count: u32,
}

impl DoseSnapshot {
    /// Snapshot with every patient fully assessed.
    pub fn completed(n_dlt: u32, n: u32) -> Self {
        let n_nodlt = n.saturating_sub(n_dlt);
        DoseSnapshot {
            n,
            n_dlt,
            n_nodlt,
            n_e: n_nodlt as f64,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Aggregate the records at `dose_level` as of `now`. Pending follow-up is
/// `now - enroll_time`, floored at the recorded `observed_days` and capped
/// at the window; a pending patient who reaches the window counts as a
/// completed non-DLT.
pub fn dose_snapshot(patients: &[PatientRecord], dose_level: usize, now: f64, window: f64) -> Result<DoseSnapshot> {
    if !(window.is_finite() && window >= 0.0) {
        return domain(format!("window must be nonnegative, got {window}"));
    }
    let mut snap = DoseSnapshot::default();
    for p in patients.iter().filter(|p| p.dose_level == dose_level) {
        snap.n += 1;
        match p.outcome {
            Outcome::Dlt { .. } => snap.n_dlt += 1,
            Outcome::CompletedNoDlt => snap.n_nodlt += 1,
            Outcome::Pending { observed_days } => {
                let observed = (now - p.enroll_time).max(observed_days).min(window);
                if observed >= window {
                    snap.n_nodlt += 1;
                } else {
                    snap.pending_count += 1;
                    snap.pend_observed_frac += observed / window;
                    snap.pend_unobserved_frac += (window - observed) / window;
                }
            }
        }
    }
    snap.n_e = snap.n_nodlt as f64 + snap.pend_observed_frac;
    Ok(snap)
}

/// Accrual control while assessments are pending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuspensionPolicy {
    /// Suspend when more than this fraction of current-dose patients is pending.
    pub max_pending_fraction: f64,
    /// Escalation needs this many patients who completed the full window.
    pub min_completed_for_escalation: u32,
}

impl Default for SuspensionPolicy {
    fn default() -> Self {
        SuspensionPolicy {
            max_pending_fraction: 0.5,
            min_completed_for_escalation: 1,
        }
    }
}

impl SuspensionPolicy {
    /// Plain designs: wait until nothing at the current dose is pending.
    pub const COMPLETE_DATA: SuspensionPolicy = SuspensionPolicy {
        max_pending_fraction: 0.0,
        min_completed_for_escalation: 0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiteDecision {
    Dose(Decision),
    Suspend,
}

impl TiteDecision {
    pub fn decision(self) -> Option<Decision> {
        match self {
            TiteDecision::Dose(d) => Some(d),
            TiteDecision::Suspend => None,
        }
    }
}

/// Dose decision from a snapshot that may contain pending patients.
pub fn tite_decide(design: &Design, snap: &DoseSnapshot, policy: &SuspensionPolicy) -> Result<TiteDecision> {
    if snap.n == 0 {
        return domain("no patients at the current dose");
    }
    if snap.pending_count as f64 > policy.max_pending_fraction * snap.n as f64 {
        return Ok(TiteDecision::Suspend);
    }
    if design.eliminates(snap.n_dlt, snap.n_dlt + snap.n_nodlt) {
        return Ok(TiteDecision::Dose(Decision::Eliminate));
    }
    let decision = match design.signal(snap.n_dlt as f64, snap.n_e) {
        Decision::Escalate if snap.n_nodlt < policy.min_completed_for_escalation => Decision::Stay,
        d => d,
    };
    Ok(TiteDecision::Dose(decision))
}
