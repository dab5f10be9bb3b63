//! Campaign files and the runner behind `mtdfind simulate`.

use std::fs;
use std::path::{Path, PathBuf};

use mtdfind_core::designs::DesignKind;
use mtdfind_core::simulator::{
    default_scenarios, run_campaign, write_changes, write_summaries, CampaignSummary, Mode, RandomScenarioSpec, Scenario,
    ScenarioSource, ToxTimeLaw, TrialConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_REPLICATIONS: u64 = 1000;

/// Random sources after the first get their own seed block so that two
/// random scenarios never replay the same draws.
const RANDOM_SEED_STRIDE: u64 = 1 << 32;

/// One run: a trial template, the variants to cross with it, and the
/// scenarios. With no scenarios at all the standard set is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignFile {
    pub replications: u64,
    /// Worker threads; 0 uses every core.
    pub parallelism: Option<usize>,
    pub designs: Vec<DesignKind>,
    pub modes: Vec<Mode>,
    pub trial: TrialConfig,
    /// Another file whose `scenarios` and `random` tables are appended.
    pub scenario_file: Option<PathBuf>,
    pub scenarios: Vec<Scenario>,
    pub random: Vec<RandomScenarioSpec>,
}

impl Default for CampaignFile {
    fn default() -> Self {
        CampaignFile {
            replications: DEFAULT_REPLICATIONS,
            parallelism: None,
            designs: DesignKind::ALL.to_vec(),
            modes: Mode::ALL.to_vec(),
            trial: TrialConfig::default(),
            scenario_file: None,
            scenarios: Vec::new(),
            random: Vec::new(),
        }
    }
}

/// Scenario-only document, as printed by `mtdfind scenarios`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenarios: Vec<Scenario>,
    pub random: Vec<RandomScenarioSpec>,
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl CampaignFile {
    pub fn load(path: &Path) -> Result<Self> {
        let mut file: CampaignFile = parse_toml(path)?;
        if let Some(rel) = file.scenario_file.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            file.add_scenarios(&base.join(rel))?;
        }
        Ok(file)
    }

    pub fn add_scenarios(&mut self, path: &Path) -> Result<()> {
        let extra: ScenarioFile = parse_toml(path)?;
        self.scenarios.extend(extra.scenarios);
        self.random.extend(extra.random);
        Ok(())
    }

    /// Fixed scenarios first, then random ones, each with the seed offset
    /// it runs under.
    pub fn sources(&self) -> Vec<(ScenarioSource, u64)> {
        if self.scenarios.is_empty() && self.random.is_empty() {
            return standard_sources(self.trial.n_doses, self.trial.target);
        }
        let fixed = self.scenarios.iter().map(|s| (ScenarioSource::Fixed(s.clone()), 0));
        let random = self
            .random
            .iter()
            .enumerate()
            .map(|(k, r)| (ScenarioSource::Random(r.clone()), k as u64 * RANDOM_SEED_STRIDE));
        fixed.chain(random).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(CliError::Usage("replications must be at least 1".into()));
        }
        if self.designs.is_empty() || self.modes.is_empty() {
            return Err(CliError::Usage("at least one design and one mode are needed".into()));
        }
        for d in &self.designs {
            self.trial.with_variant(*d, Mode::EiTite).validate()?;
        }
        for (s, _) in self.sources() {
            s.validate()?;
            if s.n_doses() != self.trial.n_doses {
                return Err(CliError::Usage(format!(
                    "scenario `{}` has {} doses, the trial has {}",
                    s.label(),
                    s.n_doses(),
                    self.trial.n_doses
                )));
            }
        }
        Ok(())
    }
}

/// `count` default random generators labelled RS1, RS2, ...
pub fn random_specs(count: usize, n_doses: usize, target: f64) -> Vec<RandomScenarioSpec> {
    (1..=count)
        .map(|k| RandomScenarioSpec {
            label: format!("RS{k}"),
            n_doses,
            target,
            ..RandomScenarioSpec::default()
        })
        .collect()
}

/// The six fixed curves plus two random generators, the second with
/// DLTs front-loaded in the window.
pub fn standard_scenarios(n_doses: usize, target: f64) -> ScenarioFile {
    let mut random = random_specs(2, n_doses, target);
    random[1].tox_time_law = ToxTimeLaw::Weibull {
        shape: 2.0,
        fraction_in_first_half: 0.7,
    };
    let fixed = if n_doses == 6 && target == 0.3 { default_scenarios() } else { Vec::new() };
    ScenarioFile { scenarios: fixed, random }
}

fn standard_sources(n_doses: usize, target: f64) -> Vec<(ScenarioSource, u64)> {
    let set = standard_scenarios(n_doses, target);
    CampaignFile {
        scenarios: set.scenarios,
        random: set.random,
        ..CampaignFile::default()
    }
    .sources()
}

/// Every (scenario, design, mode) summary, scenario-major.
pub fn run(file: &CampaignFile, parallelism: usize) -> Result<Vec<CampaignSummary>> {
    file.validate()?;
    let mut rows = Vec::new();
    for (source, offset) in file.sources() {
        for &design in &file.designs {
            for &mode in &file.modes {
                let mut config = file.trial.with_variant(design, mode);
                config.seed = config.seed.wrapping_add(offset);
                rows.push(run_campaign(&config, &source, file.replications, parallelism)?);
            }
        }
    }
    Ok(rows)
}

/// Path of the percent-change file written next to `summary`.
pub fn changes_path(summary: &Path) -> PathBuf {
    let stem = summary.file_stem().map_or_else(|| "campaign".into(), |s| s.to_string_lossy().into_owned());
    summary.with_file_name(format!("{stem}.changes.csv"))
}

/// Write the summary CSV and, when any change rows exist, the
/// percent-change CSV. Returns the number of change rows.
pub fn write_outputs(rows: &[CampaignSummary], summary: &Path) -> Result<usize> {
    let mut buf = Vec::new();
    write_summaries(&mut buf, rows)?;
    fs::write(summary, &buf).map_err(|e| CliError::write(summary, e))?;
    let mut changes = Vec::new();
    let n = write_changes(&mut changes, rows)?;
    if n > 0 {
        let path = changes_path(summary);
        fs::write(&path, &changes).map_err(|e| CliError::write(&path, e))?;
    }
    Ok(n)
}
