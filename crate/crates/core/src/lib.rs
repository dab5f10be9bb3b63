//! Model-assisted dose-finding designs (mTPI, Keyboard, BOIN), their
//! time-to-event variants, early identification of the maximum tolerated dose,
//! and a Monte Carlo trial simulator.

pub mod designs;
pub mod early_stop;
mod error;
pub mod mathcore;
pub mod simulator;
pub mod tite;

pub use error::{Error, Result};
