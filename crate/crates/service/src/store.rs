//! Per-trial append-only logs, one JSON record per line.
//!
//! Each trial lives in `<dir>/<id>.jsonl`. An append is validated against
//! the in-memory state, written and fsynced, and only then made visible.
//! Writers to one trial are serialized by that trial's lock; readers take
//! the read side and so never see a half-applied event.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mtdfind_core::simulator::TrialConfig;
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Result, ServiceError};
use crate::event::{EventKind, LogRecord, TrialEvent};
use crate::state::{DecisionView, Patient, TrialState};

struct Trial {
    state: TrialState,
    file: Option<File>,
}

/// Full trial record returned by the state endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub id: Uuid,
    pub config: TrialConfig,
    pub seq: u64,
    pub identified: bool,
    pub events: Vec<LogRecord>,
    /// Sequence numbers voided by corrections.
    pub voided: Vec<u64>,
    pub patients: Vec<Patient>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AppendOptions {
    /// Reject unless the log currently ends at this sequence number.
    pub expected_seq: Option<u64>,
    /// Allow new enrollments after the MTD has been identified.
    pub continue_after_identification: bool,
}

pub struct Store {
    dir: Option<PathBuf>,
    trials: RwLock<HashMap<Uuid, Arc<RwLock<Trial>>>>,
    /// Idempotency key → trial. Also serializes trial creation.
    keys: Mutex<HashMap<String, Uuid>>,
}

impl Store {
    /// A store that keeps logs in memory only.
    pub fn in_memory() -> Self {
        Store {
            dir: None,
            trials: RwLock::new(HashMap::new()),
            keys: Mutex::new(HashMap::new()),
        }
    }

    /// Open (or create) a store directory and replay every log in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut trials = HashMap::new();
        let mut keys = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| Uuid::parse_str(s).ok()) else {
                continue;
            };
            let state = load_log(&path)?;
            if let EventKind::TrialCreated {
                idempotency_key: Some(key),
                ..
            } = &state.log()[0].kind
            {
                keys.insert(key.clone(), id);
            }
            let file = OpenOptions::new().append(true).open(&path)?;
            trials.insert(id, Arc::new(RwLock::new(Trial { state, file: Some(file) })));
        }
        Ok(Store {
            dir: Some(dir),
            trials: RwLock::new(trials),
            keys: Mutex::new(keys),
        })
    }

    fn trial(&self, id: Uuid) -> Result<Arc<RwLock<Trial>>> {
        self.trials
            .read()
            .get(&id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("no trial {id}")))
    }

    /// Create a trial. A repeated idempotency key with the same config
    /// returns the existing id; with a different config it is a conflict.
    /// The flag is true when a new trial was created.
    pub fn create_trial(&self, config: TrialConfig, at: f64, idempotency_key: Option<String>) -> Result<(Uuid, bool)> {
        let mut keys = self.keys.lock();
        if let Some(key) = &idempotency_key {
            if let Some(&id) = keys.get(key) {
                let trial = self.trial(id)?;
                let same = trial.read().state.config() == &config;
                return if same {
                    Ok((id, false))
                } else {
                    Err(ServiceError::Conflict(format!("idempotency key `{key}` was used for a different config")))
                };
            }
        }
        let event = TrialEvent::new(
            at,
            EventKind::TrialCreated {
                config,
                idempotency_key: idempotency_key.clone(),
            },
        );
        let state = TrialState::create(event.clone())?;
        let id = Uuid::new_v4();
        let file = match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{id}.jsonl"));
                let mut file = OpenOptions::new().create_new(true).append(true).open(&path)?;
                write_record(&mut file, &LogRecord { seq: 0, event })?;
                File::open(dir)?.sync_all()?;
                Some(file)
            }
            None => None,
        };
        self.trials.write().insert(id, Arc::new(RwLock::new(Trial { state, file })));
        if let Some(key) = idempotency_key {
            keys.insert(key, id);
        }
        Ok((id, true))
    }

    /// Validate and durably append an event; returns its sequence number.
    pub fn append(&self, id: Uuid, event: TrialEvent, opts: AppendOptions) -> Result<u64> {
        let trial = self.trial(id)?;
        let mut guard = trial.write();
        let trial = &mut *guard;
        let last = trial.state.last_seq();
        if let Some(expected) = opts.expected_seq {
            if expected != last {
                return Err(ServiceError::Conflict(format!("expected sequence {expected}, log is at {last}")));
            }
        }
        // an enrollment is itself a decision instant, so identification
        // is judged at its time as well as from the log
        if !opts.continue_after_identification
            && matches!(event.kind, EventKind::PatientEnrolled { .. })
            && event.at >= trial.state.last_at()
            && (trial.state.identified() || trial.state.view(event.at)?.identified)
        {
            return Err(ServiceError::Conflict(
                "the MTD has been identified; enrolling further patients needs an explicit override".into(),
            ));
        }
        let mut next = trial.state.clone();
        let seq = next.append(event.clone())?;
        if let Some(file) = &mut trial.file {
            write_record(file, &LogRecord { seq, event })?;
        }
        trial.state = next;
        Ok(seq)
    }

    pub fn decision(&self, id: Uuid, as_of: Option<f64>, what_if: &[TrialEvent]) -> Result<DecisionView> {
        let trial = self.trial(id)?;
        let guard = trial.read();
        guard.state.decision(as_of, what_if)
    }

    pub fn summary(&self, id: Uuid) -> Result<TrialSummary> {
        let trial = self.trial(id)?;
        let guard = trial.read();
        let s = &guard.state;
        Ok(TrialSummary {
            id,
            config: s.config().clone(),
            seq: s.last_seq(),
            identified: s.identified(),
            events: s
                .log()
                .iter()
                .enumerate()
                .map(|(i, e)| LogRecord {
                    seq: i as u64,
                    event: e.clone(),
                })
                .collect(),
            voided: s.voided().iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i as u64).collect(),
            patients: s.patients().to_vec(),
        })
    }

    pub fn trial_ids(&self) -> Vec<Uuid> {
        let mut ids: Vec<Uuid> = self.trials.read().keys().copied().collect();
        ids.sort();
        ids
    }
}

fn write_record(file: &mut File, record: &LogRecord) -> Result<()> {
    let mut line = serde_json::to_vec(record).map_err(|e| ServiceError::Internal(e.to_string()))?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_data()?;
    Ok(())
}

/// Replay a log file. A final line without its newline was never
/// acknowledged and is cut off.
fn load_log(path: &Path) -> Result<TrialState> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    let mut valid_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        if !line.ends_with('\n') {
            OpenOptions::new().write(true).open(path)?.set_len(valid_len)?;
            break;
        }
        let record: LogRecord = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Internal(format!("{}: corrupt record {}: {e}", path.display(), events.len())))?;
        if record.seq != events.len() as u64 {
            return Err(ServiceError::Internal(format!(
                "{}: record {} carries sequence {}",
                path.display(),
                events.len(),
                record.seq
            )));
        }
        events.push(record.event);
        valid_len += n as u64;
    }
    TrialState::replay(&events).map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))
}
