//! Trial-conduct service: an event-sourced log per trial and the current
//! dose decision, retainment probability and early-identification status
//! derived from it.

pub mod api;
mod error;
pub mod event;
pub mod fixtures;
pub mod state;
pub mod store;
pub mod synth;

pub use error::{ErrorCode, Result, ServiceError};
pub use event::{EventKind, LogRecord, TrialEvent};
pub use state::{DecisionView, Patient, TrialState};
pub use store::{AppendOptions, Store, TrialSummary};
