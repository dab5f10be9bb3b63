use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{simulate_prepared, PreparedTrial, TrialResult};
use super::scenario::ScenarioSource;
use super::{Mode, TrialConfig};
use crate::designs::DesignKind;
use crate::error::{Error, Result};

/// Operating characteristics of one design variant on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub scenario: String,
    pub design: DesignKind,
    pub mode: Mode,
    /// Fraction of replications selecting the true MTD.
    pub pcms: f64,
    /// Fraction of replications stopped by early identification.
    pub ei_rate: f64,
    pub mean_duration_days: f64,
    pub mean_n: f64,
    pub replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub config_digest: String,
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.carry += (self.total - t) + x;
        } else {
            self.carry += (x - t) + self.total;
        }
        self.total = t;
    }

    fn value(&self) -> f64 {
        self.total + self.carry
    }
}

/// Scenario draws use a separate ChaCha stream so that replication `i` of a
/// campaign is exactly `simulate_trial(config, scenario_i, seed + i)`.
const SCENARIO_STREAM: u64 = 1;

fn replicate(prep: &PreparedTrial, source: &ScenarioSource, i: u64) -> Result<(TrialResult, Option<usize>)> {
    let seed = prep.config.seed.wrapping_add(i);
    let drawn;
    let scenario = match source {
        ScenarioSource::Fixed(s) => s,
        ScenarioSource::Random(spec) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SCENARIO_STREAM);
            drawn = spec.draw(&mut rng);
            &drawn
        }
    };
    let truth = scenario.true_mtd(prep.config.target, prep.design.params().interval_hi);
    Ok((simulate_prepared(prep, scenario, seed)?, truth))
}

#[cfg(feature = "parallel")]
fn run_all(prep: &PreparedTrial, source: &ScenarioSource, replications: u64, parallelism: usize) -> Result<Vec<(TrialResult, Option<usize>)>> {
    use rayon::prelude::*;

    if parallelism == 1 {
        return (0..replications).map(|i| replicate(prep, source, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| (0..replications).into_par_iter().map(|i| replicate(prep, source, i)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all(prep: &PreparedTrial, source: &ScenarioSource, replications: u64, _parallelism: usize) -> Result<Vec<(TrialResult, Option<usize>)>> {
    (0..replications).map(|i| replicate(prep, source, i)).collect()
}

/// Simulate `replications` trials with seeds `config.seed + i` and aggregate
/// them. `parallelism = 0` uses every available core; the result does not
/// depend on it.
pub fn run_campaign(config: &TrialConfig, source: &ScenarioSource, replications: u64, parallelism: usize) -> Result<CampaignSummary> {
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be at least 1".into()));
    }
    source.validate()?;
    if source.n_doses() != config.n_doses {
        return Err(Error::InvalidConfig(format!(
            "scenario `{}` has {} doses, config expects {}",
            source.label(),
            source.n_doses(),
            config.n_doses
        )));
    }
    let prep = PreparedTrial::new(config)?;
    let results = run_all(&prep, source, replications, parallelism)?;

    let (mut correct, mut early, mut duration, mut n) = (Sum::default(), Sum::default(), Sum::default(), Sum::default());
    for (r, truth) in &results {
        correct.add(f64::from(u8::from(r.selected_mtd == *truth)));
        early.add(f64::from(u8::from(r.early_identified)));
        duration.add(r.duration_days);
        n.add(r.n_enrolled as f64);
    }
    let reps = replications as f64;
    Ok(CampaignSummary {
        scenario: source.label().to_string(),
        design: config.design,
        mode: config.mode,
        pcms: correct.value() / reps,
        ei_rate: early.value() / reps,
        mean_duration_days: duration.value() / reps,
        mean_n: n.value() / reps,
        replications,
        seed: config.seed,
        config_digest: config.digest(),
    })
}

/// Change from a baseline variant to another on the same scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentChange {
    pub duration_pct: f64,
    pub n_pct: f64,
    /// PCMS difference in percentage points.
    pub pcms_delta: f64,
}

pub fn percent_change(baseline: &CampaignSummary, variant: &CampaignSummary) -> Result<PercentChange> {
    if baseline.scenario != variant.scenario {
        return Err(Error::Domain(format!(
            "cannot compare scenario `{}` with `{}`",
            baseline.scenario, variant.scenario
        )));
    }
    if baseline.mean_duration_days == 0.0 || baseline.mean_n == 0.0 {
        return Err(Error::Domain("baseline has zero duration or sample size".into()));
    }
    Ok(PercentChange {
        duration_pct: 100.0 * (variant.mean_duration_days - baseline.mean_duration_days) / baseline.mean_duration_days,
        n_pct: 100.0 * (variant.mean_n - baseline.mean_n) / baseline.mean_n,
        pcms_delta: 100.0 * (variant.pcms - baseline.pcms),
    })
}
