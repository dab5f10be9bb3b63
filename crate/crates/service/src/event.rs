use mtdfind_core::simulator::TrialConfig;
use serde::{Deserialize, Serialize};

/// One entry of a trial's append-only log. `at` is clinical time in days
/// from the trial's origin, supplied by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub at: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    TrialCreated {
        config: TrialConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
    },
    PatientEnrolled {
        patient_id: String,
        /// 1-based dose level.
        dose: usize,
    },
    DltObserved {
        patient_id: String,
        /// Day of follow-up on which the DLT occurred.
        day: f64,
    },
    /// The patient finished the assessment window without a DLT.
    AssessmentCompleted {
        patient_id: String,
    },
    /// Voids the event with sequence number `target_seq`.
    Correction {
        target_seq: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

impl TrialEvent {
    pub fn new(at: f64, kind: EventKind) -> Self {
        TrialEvent { at, kind }
    }

    pub fn enrolled(at: f64, patient_id: impl Into<String>, dose: usize) -> Self {
        TrialEvent::new(
            at,
            EventKind::PatientEnrolled {
                patient_id: patient_id.into(),
                dose,
            },
        )
    }

    pub fn dlt(at: f64, patient_id: impl Into<String>, day: f64) -> Self {
        TrialEvent::new(
            at,
            EventKind::DltObserved {
                patient_id: patient_id.into(),
                day,
            },
        )
    }

    pub fn completed(at: f64, patient_id: impl Into<String>) -> Self {
        TrialEvent::new(
            at,
            EventKind::AssessmentCompleted {
                patient_id: patient_id.into(),
            },
        )
    }

    pub fn correction(at: f64, target_seq: u64) -> Self {
        TrialEvent::new(at, EventKind::Correction { target_seq, reason: None })
    }
}

/// A log line: the event and its position in the trial's log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub event: TrialEvent,
}
