//! Trial state rebuilt from the event log, and the decision view derived
//! from it.

use mtdfind_core::designs::{BoundaryTable, Decision, Design};
use mtdfind_core::early_stop::{evaluate_early_stop, DosePosition, EarlyStopOutcome, RemainingBudget};
use mtdfind_core::mathcore::Probability;
use mtdfind_core::simulator::{Mode, TrialConfig};
use mtdfind_core::tite::{dose_snapshot, tite_decide, DoseSnapshot, Outcome, PatientRecord, SuspensionPolicy, TiteDecision};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::event::{EventKind, TrialEvent};

/// Slack for comparing client-supplied day counts.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    pub patient_id: String,
    pub dose: usize,
    pub enrolled_at: f64,
    pub enrolled_seq: u64,
    pub dlt_day: Option<f64>,
    pub completed_at: Option<f64>,
}

impl Patient {
    fn resolved(&self) -> bool {
        self.dlt_day.is_some() || self.completed_at.is_some()
    }

    fn record(&self, index: usize, now: f64) -> PatientRecord {
        let outcome = match (self.dlt_day, self.completed_at) {
            (Some(day), _) => Outcome::Dlt { at_day: day },
            (None, Some(_)) => Outcome::CompletedNoDlt,
            (None, None) => Outcome::Pending {
                observed_days: (now - self.enrolled_at).max(0.0),
            },
        };
        PatientRecord {
            id: index as u64,
            dose_level: self.dose,
            enroll_time: self.enrolled_at,
            outcome,
        }
    }
}

/// Everything the service reports about the trial at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionView {
    pub as_of: f64,
    /// Sequence number of the last log entry taken into account.
    pub seq: u64,
    pub current_dose: usize,
    /// Highest dose not removed by the elimination rule (at least 1; the
    /// trial keeps treating at the lowest dose even when it is eliminated).
    pub highest_admissible: usize,
    /// Lowest eliminated dose, if any.
    pub eliminated_from: Option<usize>,
    pub enrolled: u32,
    pub snapshot: DoseSnapshot,
    /// Absent while nobody has been treated at the current dose.
    pub decision: Option<TiteDecision>,
    /// Dose the next patient should receive; absent while accrual is
    /// suspended or no decision exists.
    pub next_dose: Option<usize>,
    pub retainment: Option<Probability>,
    pub threshold: Probability,
    pub early_stop: EarlyStopOutcome,
    pub budget: RemainingBudget,
    /// True once early identification has fired at any logged event.
    pub identified: bool,
}

#[derive(Debug, Clone)]
pub struct TrialState {
    config: TrialConfig,
    design: Design,
    table: BoundaryTable,
    /// Raw log; index is the sequence number.
    log: Vec<TrialEvent>,
    voided: Vec<bool>,
    patients: Vec<Patient>,
    identified_seq: Option<u64>,
}

impl TrialState {
    /// Start a trial from its creation event.
    pub fn create(event: TrialEvent) -> Result<Self> {
        let EventKind::TrialCreated { config, .. } = &event.kind else {
            return Err(ServiceError::validation("a trial log must start with trial_created"));
        };
        if !event.at.is_finite() {
            return Err(ServiceError::validation("event time must be finite"));
        }
        config.validate().map_err(|e| ServiceError::Validation(e.to_string()))?;
        let design = config.build_design().map_err(|e| ServiceError::Validation(e.to_string()))?;
        let table = design.boundary_table(config.n_max).map_err(|e| ServiceError::Validation(e.to_string()))?;
        Ok(TrialState {
            config: config.clone(),
            design,
            table,
            log: vec![event],
            voided: vec![false],
            patients: Vec::new(),
            identified_seq: None,
        })
    }

    /// Rebuild from a full log, validating every entry.
    pub fn replay(log: &[TrialEvent]) -> Result<Self> {
        let (first, rest) = log
            .split_first()
            .ok_or_else(|| ServiceError::validation("empty trial log"))?;
        let mut voided = vec![false; log.len()];
        for e in rest {
            if let EventKind::Correction { target_seq, .. } = e.kind {
                if let Some(v) = voided.get_mut(target_seq as usize) {
                    *v = true;
                }
            }
        }
        let mut state = TrialState::create(first.clone())?;
        for e in rest {
            let seq = state.log.len() as u64;
            state.check_time(e)?;
            if let EventKind::Correction { target_seq, .. } = e.kind {
                state.check_correction_target(seq, target_seq)?;
                state.voided[target_seq as usize] = true;
            }
            // events voided later never enter the state
            let effective = !voided[seq as usize] && !matches!(e.kind, EventKind::Correction { .. });
            if effective {
                state.apply(seq, e)?;
            }
            state.log.push(e.clone());
            state.voided.push(false);
            if effective {
                state.note_identification(seq, e.at)?;
            }
        }
        Ok(state)
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn log(&self) -> &[TrialEvent] {
        &self.log
    }

    pub fn voided(&self) -> &[bool] {
        &self.voided
    }

    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    pub fn last_seq(&self) -> u64 {
        self.log.len() as u64 - 1
    }

    pub fn last_at(&self) -> f64 {
        self.log.last().map_or(0.0, |e| e.at)
    }

    pub fn identified(&self) -> bool {
        self.identified_seq.is_some()
    }

    /// Validate `event` against the current state and append it. Returns
    /// the new sequence number.
    pub fn append(&mut self, event: TrialEvent) -> Result<u64> {
        let seq = self.log.len() as u64;
        self.check_time(&event)?;
        match event.kind {
            EventKind::TrialCreated { .. } => Err(ServiceError::validation("trial_created may only start a log")),
            EventKind::Correction { target_seq, .. } => {
                self.check_correction_target(seq, target_seq)?;
                let mut log = self.log.clone();
                log.push(event);
                *self = TrialState::replay(&log).map_err(|e| match e {
                    ServiceError::Validation(msg) => ServiceError::Validation(format!("correction leaves an inconsistent log: {msg}")),
                    other => other,
                })?;
                Ok(seq)
            }
            _ => {
                self.apply(seq, &event)?;
                let at = event.at;
                self.log.push(event);
                self.voided.push(false);
                self.note_identification(seq, at)?;
                Ok(seq)
            }
        }
    }

    /// State as recorded by the log entries with `at ≤ as_of`. Times are
    /// nondecreasing, so this is a prefix of the log.
    pub fn as_of(&self, as_of: f64) -> Result<TrialState> {
        let len = self.log.partition_point(|e| e.at <= as_of);
        if len == 0 {
            return Err(ServiceError::validation(format!("as_of {as_of} precedes the trial's creation")));
        }
        if len == self.log.len() {
            return Ok(self.clone());
        }
        TrialState::replay(&self.log[..len])
    }

    fn check_time(&self, event: &TrialEvent) -> Result<()> {
        if !event.at.is_finite() {
            return Err(ServiceError::validation("event time must be finite"));
        }
        let last = self.last_at();
        if event.at < last {
            return Err(ServiceError::validation(format!(
                "event time {} precedes the previous event at {last}",
                event.at
            )));
        }
        Ok(())
    }

    fn check_correction_target(&self, seq: u64, target: u64) -> Result<()> {
        if target == 0 || target >= seq {
            return Err(ServiceError::validation(format!("correction target {target} is not an earlier data event")));
        }
        let t = target as usize;
        if matches!(self.log[t].kind, EventKind::Correction { .. }) {
            return Err(ServiceError::validation("a correction cannot be corrected"));
        }
        if self.voided[t] {
            return Err(ServiceError::validation(format!("event {target} is already voided")));
        }
        Ok(())
    }

    fn patient_mut(&mut self, id: &str) -> Result<&mut Patient> {
        self.patients
            .iter_mut()
            .find(|p| p.patient_id == id)
            .ok_or_else(|| ServiceError::validation(format!("unknown patient `{id}`")))
    }

    fn apply(&mut self, seq: u64, event: &TrialEvent) -> Result<()> {
        let window = self.config.window_days;
        match &event.kind {
            EventKind::PatientEnrolled { patient_id, dose } => {
                let dose = *dose;
                if patient_id.trim().is_empty() {
                    return Err(ServiceError::validation("patient_id must not be empty"));
                }
                if self.patients.iter().any(|p| &p.patient_id == patient_id) {
                    return Err(ServiceError::validation(format!("patient `{patient_id}` is already enrolled")));
                }
                if self.patients.len() as u32 >= self.config.n_max {
                    return Err(ServiceError::validation(format!("sample size {} already reached", self.config.n_max)));
                }
                if dose == 0 || dose > self.config.n_doses {
                    return Err(ServiceError::validation(format!("dose {dose} outside 1..={}", self.config.n_doses)));
                }
                let tried = self.patients.iter().map(|p| p.dose).max().unwrap_or(0);
                let limit = tried.max(self.config.start_dose - 1) + 1;
                if dose > limit {
                    return Err(ServiceError::validation(format!("dose {dose} skips untried doses; at most {limit} is allowed")));
                }
                let (highest, _) = self.admissible(&self.records(event.at), event.at);
                if dose > highest {
                    return Err(ServiceError::validation(format!("dose {dose} is above the highest admissible dose {highest}")));
                }
                self.patients.push(Patient {
                    patient_id: patient_id.clone(),
                    dose,
                    enrolled_at: event.at,
                    enrolled_seq: seq,
                    dlt_day: None,
                    completed_at: None,
                });
            }
            EventKind::DltObserved { patient_id, day } => {
                let day = *day;
                let at = event.at;
                let p = self.patient_mut(patient_id)?;
                if p.resolved() {
                    return Err(ServiceError::validation(format!("patient `{patient_id}` already has a final outcome")));
                }
                if !(day.is_finite() && (0.0..=window).contains(&day)) {
                    return Err(ServiceError::validation(format!("DLT day {day} outside the window [0, {window}]")));
                }
                if p.enrolled_at + day > at + TIME_EPS {
                    return Err(ServiceError::validation(format!("DLT on day {day} lies after the event time {at}")));
                }
                p.dlt_day = Some(day);
            }
            EventKind::AssessmentCompleted { patient_id } => {
                let at = event.at;
                let p = self.patient_mut(patient_id)?;
                if p.resolved() {
                    return Err(ServiceError::validation(format!("patient `{patient_id}` already has a final outcome")));
                }
                if at + TIME_EPS < p.enrolled_at + window {
                    return Err(ServiceError::validation(format!(
                        "assessment of `{patient_id}` cannot complete before day {}",
                        p.enrolled_at + window
                    )));
                }
                p.completed_at = Some(at);
            }
            EventKind::TrialCreated { .. } | EventKind::Correction { .. } => unreachable!("handled by the caller"),
        }
        Ok(())
    }

    fn note_identification(&mut self, seq: u64, at: f64) -> Result<()> {
        if self.identified_seq.is_none() && self.view(at)?.early_stop.identified {
            self.identified_seq = Some(seq);
        }
        Ok(())
    }

    fn records(&self, now: f64) -> Vec<PatientRecord> {
        self.patients.iter().enumerate().map(|(i, p)| p.record(i, now)).collect()
    }

    fn snapshot(&self, records: &[PatientRecord], dose: usize, now: f64) -> Result<DoseSnapshot> {
        dose_snapshot(records, dose, now, self.config.window_days).map_err(|e| ServiceError::Internal(e.to_string()))
    }

    /// `(highest admissible dose, lowest eliminated dose)` from the
    /// completed data at each dose.
    fn admissible(&self, records: &[PatientRecord], now: f64) -> (usize, Option<usize>) {
        for dose in 1..=self.config.n_doses {
            let Ok(s) = self.snapshot(records, dose, now) else {
                continue;
            };
            if self.design.eliminates(s.n_dlt, s.n_dlt + s.n_nodlt) {
                return ((dose - 1).max(1), Some(dose));
            }
        }
        (self.config.n_doses, None)
    }

    fn policy(&self) -> SuspensionPolicy {
        match self.config.mode {
            Mode::Plain => SuspensionPolicy::COMPLETE_DATA,
            Mode::Tite | Mode::EiTite => self.config.suspension,
        }
    }

    pub fn current_dose(&self) -> usize {
        self.patients.last().map_or(self.config.start_dose, |p| p.dose)
    }

    /// Decision view at time `now` (no earlier than the last applied event).
    pub fn view(&self, now: f64) -> Result<DecisionView> {
        let cfg = &self.config;
        let internal = |e: mtdfind_core::Error| ServiceError::Internal(e.to_string());
        let records = self.records(now);
        let current = self.current_dose();
        let snap = self.snapshot(&records, current, now)?;
        let (highest, eliminated_from) = self.admissible(&records, now);
        let enrolled = self.patients.len() as u32;
        let budget = RemainingBudget::new(cfg.n_max, enrolled, &snap).map_err(internal)?;
        let position = DosePosition::of(current, highest);
        let threshold = if position.is_edge() {
            cfg.thresholds.tau_edge
        } else {
            cfg.thresholds.tau
        };

        let decision = if snap.is_empty() {
            None
        } else {
            Some(tite_decide(&self.design, &snap, &self.policy()).map_err(internal)?)
        };
        let next_dose = decision.and_then(TiteDecision::decision).map(|d| {
            let d = match d {
                Decision::Escalate => current + 1,
                Decision::Stay => current,
                Decision::DeEscalate | Decision::Eliminate => current.saturating_sub(1).max(1),
            };
            d.min(highest)
        });

        // A dose with DLTs but no DLT-free follow-up yields no predictive
        // shape; that is reported as "not identified" without a probability.
        let evaluated = if snap.is_empty() {
            None
        } else {
            evaluate_early_stop(&snap, &budget, &self.table, position, current, &cfg.thresholds).ok()
        };
        let retainment = evaluated.map(|o| o.retainment);
        let early_stop = match evaluated {
            Some(o) if cfg.mode == Mode::EiTite => o,
            Some(o) => EarlyStopOutcome {
                identified: false,
                mtd_level: None,
                ..o
            },
            None => EarlyStopOutcome::not_identified(threshold),
        };

        Ok(DecisionView {
            as_of: now,
            seq: self.last_seq(),
            current_dose: current,
            highest_admissible: highest,
            eliminated_from,
            enrolled,
            snapshot: snap,
            decision,
            next_dose,
            retainment,
            threshold: Probability::new(threshold).map_err(internal)?,
            identified: self.identified() || early_stop.identified,
            early_stop,
            budget,
        })
    }

    /// View at `as_of` (default: the last event time) with `what_if` events
    /// applied to a copy. Never modifies `self`.
    pub fn decision(&self, as_of: Option<f64>, what_if: &[TrialEvent]) -> Result<DecisionView> {
        let as_of = as_of.unwrap_or_else(|| self.last_at());
        if !as_of.is_finite() {
            return Err(ServiceError::validation("as_of must be finite"));
        }
        let mut state = self.as_of(as_of)?;
        let mut now = as_of;
        for e in what_if {
            if e.at < as_of {
                return Err(ServiceError::validation(format!("what-if event at {} precedes as_of {as_of}", e.at)));
            }
            state.append(e.clone())?;
            now = now.max(e.at);
        }
        state.view(now)
    }
}
