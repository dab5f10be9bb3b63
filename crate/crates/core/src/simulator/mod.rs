//! Event-driven trial simulation and campaign aggregation.

mod campaign;
mod engine;
mod report;
mod scenario;

pub use campaign::{percent_change, run_campaign, CampaignSummary, PercentChange};
pub use engine::{projected_remaining_days, select_mtd, simulate_prepared, simulate_trial, PreparedTrial, TrialResult};
pub use report::{read_summaries, write_changes, write_summaries, SUMMARY_HEADER};
pub use scenario::{default_scenarios, random_scenario, RandomScenarioSpec, Scenario, ScenarioSource, ToxTimeLaw};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::designs::{Design, DesignKind, DesignParams};
use crate::early_stop::ThresholdConfig;
use crate::error::{Error, Result};
use crate::tite::SuspensionPolicy;

pub const DAYS_PER_MONTH: f64 = 30.0;

/// Which member of a design family runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Cohorts wait out the full assessment window before each decision.
    Plain,
    /// Pending patients contribute fractional follow-up.
    Tite,
    /// Time-to-event design with early identification of the MTD.
    EiTite,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Plain, Mode::Tite, Mode::EiTite];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Tite => "tite",
            Mode::EiTite => "ei_tite",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Mode::Plain),
            "tite" => Ok(Mode::Tite),
            "ei_tite" | "ei-tite" => Ok(Mode::EiTite),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Enrollment {
    Poisson { per_month: f64 },
    Deterministic { interval_days: f64 },
}

impl Default for Enrollment {
    fn default() -> Self {
        Enrollment::Poisson { per_month: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    pub design: DesignKind,
    pub mode: Mode,
    /// Planned sample size N.
    pub n_max: u32,
    pub n_doses: usize,
    pub cohort_size: u32,
    pub window_days: f64,
    pub enrollment: Enrollment,
    pub target: f64,
    /// Proper dosing interval; the design's standard interval when absent.
    pub interval: Option<(f64, f64)>,
    pub thresholds: ThresholdConfig,
    pub suspension: SuspensionPolicy,
    pub allow_dose_skipping: bool,
    pub terminate_on_lowest_elimination: bool,
    /// 1-based starting dose.
    pub start_dose: usize,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            design: DesignKind::Keyboard,
            mode: Mode::EiTite,
            n_max: 36,
            n_doses: 6,
            cohort_size: 3,
            window_days: 90.0,
            enrollment: Enrollment::default(),
            target: 0.3,
            interval: None,
            thresholds: ThresholdConfig::default(),
            suspension: SuspensionPolicy::default(),
            allow_dose_skipping: false,
            terminate_on_lowest_elimination: false,
            start_dose: 1,
            seed: 1,
        }
    }
}

impl TrialConfig {
    pub fn with_variant(&self, design: DesignKind, mode: Mode) -> Self {
        TrialConfig {
            design,
            mode,
            ..self.clone()
        }
    }

    pub fn design_params(&self) -> DesignParams {
        let params = DesignParams::standard(self.design, self.target);
        match self.interval {
            Some((lo, hi)) => params.with_interval(lo, hi),
            None => params,
        }
    }

    pub fn build_design(&self) -> Result<Design> {
        Design::new(self.design, self.design_params())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_max == 0 {
            return invalid("n_max must be at least 1".into());
        }
        if self.n_doses == 0 {
            return invalid("n_doses must be at least 1".into());
        }
        if self.cohort_size == 0 {
            return invalid("cohort_size must be at least 1".into());
        }
        if self.mode == Mode::Plain && !self.n_max.is_multiple_of(self.cohort_size) {
            return invalid(format!("n_max {} is not a multiple of cohort_size {}", self.n_max, self.cohort_size));
        }
        if !(self.window_days.is_finite() && self.window_days >= 0.0) {
            return invalid(format!("window_days must be nonnegative, got {}", self.window_days));
        }
        match self.enrollment {
            Enrollment::Poisson { per_month } if !(per_month.is_finite() && per_month > 0.0) => {
                return invalid(format!("enrollment rate must be positive, got {per_month}"));
            }
            Enrollment::Deterministic { interval_days } if !(interval_days.is_finite() && interval_days >= 0.0) => {
                return invalid(format!("enrollment interval must be nonnegative, got {interval_days}"));
            }
            _ => {}
        }
        if self.allow_dose_skipping {
            return invalid("dose skipping is not supported".into());
        }
        if self.start_dose == 0 || self.start_dose > self.n_doses {
            return invalid(format!("start_dose {} outside 1..={}", self.start_dose, self.n_doses));
        }
        let p = self.suspension.max_pending_fraction;
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("max_pending_fraction {p} outside [0, 1]"));
        }
        self.thresholds.validate()?;
        self.design_params().validate()
    }

    /// Short stable fingerprint of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
