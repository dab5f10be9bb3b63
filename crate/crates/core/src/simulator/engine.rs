use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, ToxTimeSampler};
use super::{Enrollment, Mode, TrialConfig, DAYS_PER_MONTH};
use crate::designs::{BoundaryTable, Decision, Design};
use crate::early_stop::{evaluate_early_stop, DosePosition, RemainingBudget};
use crate::error::{Error, Result};
use crate::mathcore::pava_isotonic;
use crate::tite::{dose_snapshot, tite_decide, DoseSnapshot, Outcome, PatientRecord, SuspensionPolicy, TiteDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub selected_mtd: Option<usize>,
    pub early_identified: bool,
    pub duration_days: f64,
    pub n_enrolled: u32,
    pub per_dose_allocation: Vec<u32>,
    pub per_dose_dlts: Vec<u32>,
    /// Dose level given to each patient in enrollment order.
    pub assignments: Vec<usize>,
}

/// A validated configuration with its design and boundary table built once.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    pub config: TrialConfig,
    pub design: Design,
    pub table: BoundaryTable,
}

impl PreparedTrial {
    pub fn new(config: &TrialConfig) -> Result<Self> {
        config.validate()?;
        let design = config.build_design()?;
        let table = design.boundary_table(config.n_max)?;
        Ok(PreparedTrial {
            config: config.clone(),
            design,
            table,
        })
    }

    fn policy(&self) -> SuspensionPolicy {
        match self.config.mode {
            Mode::Plain => SuspensionPolicy::COMPLETE_DATA,
            Mode::Tite | Mode::EiTite => self.config.suspension,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Patient {
    dose: usize,
    enroll: f64,
    dlt_day: Option<f64>,
}

impl Patient {
    /// Time at which the assessment outcome is known.
    fn resolved_at(&self, window: f64) -> f64 {
        self.enroll + self.dlt_day.unwrap_or(window)
    }

    fn record(&self, id: usize, now: f64, window: f64) -> PatientRecord {
        let outcome = match self.dlt_day {
            Some(d) if self.enroll + d <= now => Outcome::Dlt { at_day: d },
            _ if self.enroll + window <= now => Outcome::CompletedNoDlt,
            _ => Outcome::Pending {
                observed_days: (now - self.enroll).max(0.0),
            },
        };
        PatientRecord {
            id: id as u64,
            dose_level: self.dose,
            enroll_time: self.enroll,
            outcome,
        }
    }
}

struct Arrivals {
    enrollment: Enrollment,
    exp: Option<Exp<f64>>,
}

impl Arrivals {
    fn new(enrollment: Enrollment) -> Self {
        let exp = match enrollment {
            Enrollment::Poisson { per_month } => Some(Exp::new(per_month / DAYS_PER_MONTH).expect("validated rate")),
            Enrollment::Deterministic { .. } => None,
        };
        Arrivals { enrollment, exp }
    }

    fn gap(&self, rng: &mut ChaCha8Rng) -> f64 {
        match (self.enrollment, &self.exp) {
            (_, Some(exp)) => exp.sample(rng),
            (Enrollment::Deterministic { interval_days }, None) => interval_days,
            (Enrollment::Poisson { .. }, None) => unreachable!(),
        }
    }
}

struct Trial<'a> {
    prep: &'a PreparedTrial,
    window: f64,
    patients: Vec<Patient>,
    current: usize,
    /// Highest admissible dose; 0 once every dose is eliminated.
    ceiling: usize,
}

impl Trial<'_> {
    fn snapshot(&self, dose: usize, now: f64) -> DoseSnapshot {
        let records: Vec<PatientRecord> = self
            .patients
            .iter()
            .enumerate()
            .filter(|(_, p)| p.dose == dose)
            .map(|(i, p)| p.record(i, now, self.window))
            .collect();
        dose_snapshot(&records, dose, now, self.window).expect("window validated")
    }

    fn next_resolution_after(&self, now: f64) -> Option<f64> {
        self.patients
            .iter()
            .map(|p| p.resolved_at(self.window))
            .filter(|&t| t > now)
            .min_by(f64::total_cmp)
    }

    /// After the lowest dose is eliminated the trial keeps treating at it,
    /// and identification there is still allowed.
    fn early_identified(&self, now: f64) -> bool {
        let highest = self.ceiling.max(1);
        if self.current > highest {
            return false;
        }
        let snap = self.snapshot(self.current, now);
        if snap.is_empty() {
            return false;
        }
        let cfg = &self.prep.config;
        let Ok(budget) = RemainingBudget::new(cfg.n_max, self.patients.len() as u32, &snap) else {
            return false;
        };
        let position = DosePosition::of(self.current, highest);
        // No usable shape (DLTs without any DLT-free follow-up) means no evidence to retain on.
        evaluate_early_stop(&snap, &budget, &self.prep.table, position, self.current, &cfg.thresholds)
            .map(|o| o.identified)
            .unwrap_or(false)
    }

    fn apply(&mut self, decision: Decision) {
        match decision {
            Decision::Escalate if self.current < self.ceiling => self.current += 1,
            Decision::Escalate | Decision::Stay => {}
            Decision::DeEscalate => self.current = self.current.saturating_sub(1).max(1),
            Decision::Eliminate => {
                self.ceiling = self.ceiling.min(self.current - 1);
                self.current = self.ceiling.max(1);
            }
        }
    }
}

/// Run one trial. Deterministic in `(config, scenario, seed)`.
pub fn simulate_trial(config: &TrialConfig, scenario: &Scenario, seed: u64) -> Result<TrialResult> {
    let prep = PreparedTrial::new(config)?;
    simulate_prepared(&prep, scenario, seed)
}

pub fn simulate_prepared(prep: &PreparedTrial, scenario: &Scenario, seed: u64) -> Result<TrialResult> {
    let cfg = &prep.config;
    scenario.validate()?;
    if scenario.true_dlt_probs.len() != cfg.n_doses {
        return Err(Error::InvalidConfig(format!(
            "scenario `{}` has {} doses, config expects {}",
            scenario.label,
            scenario.true_dlt_probs.len(),
            cfg.n_doses
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arrivals = Arrivals::new(cfg.enrollment);
    let tox_time: ToxTimeSampler = scenario.tox_time_law.sampler(cfg.window_days);
    let policy = prep.policy();
    let cohort = cfg.cohort_size as usize;

    let mut trial = Trial {
        prep,
        window: cfg.window_days,
        patients: Vec::with_capacity(cfg.n_max as usize),
        current: cfg.start_dose,
        ceiling: cfg.n_doses,
    };
    let mut now = 0.0;
    let mut next_arrival = 0.0;
    let mut stopped_early = false;
    let mut terminated = false;

    'enroll: while trial.patients.len() < cfg.n_max as usize {
        now = f64::max(now, next_arrival);
        let boundary = !trial.patients.is_empty() && trial.patients.len().is_multiple_of(cohort);
        if boundary {
            loop {
                let snap = trial.snapshot(trial.current, now);
                match tite_decide(&prep.design, &snap, &policy)? {
                    TiteDecision::Suspend => {
                        now = trial
                            .next_resolution_after(now)
                            .expect("a suspended dose has a pending assessment");
                    }
                    TiteDecision::Dose(d) => {
                        // Early identification is judged on the dose about to be
                        // left or kept, at the instant the assignment is made.
                        if cfg.mode == Mode::EiTite && trial.early_identified(now) {
                            stopped_early = true;
                            break 'enroll;
                        }
                        trial.apply(d);
                        break;
                    }
                }
            }
        }
        if trial.ceiling == 0 && cfg.terminate_on_lowest_elimination {
            terminated = true;
            break;
        }

        let dose = trial.current;
        let u_dlt: f64 = rng.random();
        let u_time: f64 = rng.random();
        let dlt_day = (u_dlt < scenario.true_dlt_probs[dose - 1]).then(|| tox_time.day(u_time));
        trial.patients.push(Patient {
            dose,
            enroll: now,
            dlt_day,
        });
        next_arrival = now + arrivals.gap(&mut rng);
    }

    let end = if stopped_early || terminated {
        now
    } else {
        trial
            .patients
            .iter()
            .map(|p| p.resolved_at(trial.window))
            .fold(0.0, f64::max)
    };

    let n_doses = cfg.n_doses;
    let mut allocation = vec![0u32; n_doses];
    let mut dlts = vec![0u32; n_doses];
    for p in &trial.patients {
        allocation[p.dose - 1] += 1;
        if p.dlt_day.is_some_and(|d| p.enroll + d <= end) {
            dlts[p.dose - 1] += 1;
        }
    }
    let eliminated: Vec<bool> = (1..=n_doses).map(|d| d > trial.ceiling).collect();
    let selected_mtd = if stopped_early {
        Some(trial.current)
    } else {
        select_mtd(&dlts, &allocation, &eliminated, cfg.target)?
    };

    Ok(TrialResult {
        selected_mtd,
        early_identified: stopped_early,
        duration_days: end,
        n_enrolled: trial.patients.len() as u32,
        per_dose_allocation: allocation,
        per_dose_dlts: dlts,
        assignments: trial.patients.iter().map(|p| p.dose).collect(),
    })
}

/// Terminal MTD selection: isotonic DLT-rate estimates over doses with data,
/// then the admissible dose closest to `target`. Equal distances go to the
/// lower dose, except inside a pooled block estimated below target, where
/// the highest dose of the block is taken.
pub fn select_mtd(per_dose_dlts: &[u32], per_dose_allocation: &[u32], eliminated: &[bool], target: f64) -> Result<Option<usize>> {
    if per_dose_dlts.len() != per_dose_allocation.len() || eliminated.len() != per_dose_allocation.len() {
        return Err(Error::Domain("select_mtd needs equal-length inputs".into()));
    }
    let tried: Vec<usize> = (0..per_dose_allocation.len()).filter(|&i| per_dose_allocation[i] > 0).collect();
    if tried.is_empty() {
        return Ok(None);
    }
    let rates: Vec<f64> = tried
        .iter()
        .map(|&i| per_dose_dlts[i] as f64 / per_dose_allocation[i] as f64)
        .collect();
    let weights: Vec<f64> = tried.iter().map(|&i| per_dose_allocation[i] as f64).collect();
    let fit = pava_isotonic(&rates, &weights)?;

    const EPS: f64 = 1e-12;
    let mut best: Option<(usize, f64, f64)> = None;
    for (&i, &est) in tried.iter().zip(&fit) {
        if eliminated[i] {
            continue;
        }
        let dist = (est - target).abs();
        let better = match best {
            None => true,
            Some((_, best_dist, best_est)) => {
                dist < best_dist - EPS || ((dist - best_dist).abs() <= EPS && (est - best_est).abs() <= EPS && est < target)
            }
        };
        if better {
            best = Some((i, dist, est));
        }
    }
    Ok(best.map(|(i, _, _)| i + 1))
}

/// Days from `now` until a trial without early stopping finishes, under
/// deterministic enrollment every `interval` days: the wait for the next
/// enrollment, the gaps between the remaining `r` enrollments, and the last
/// patient's full window.
pub fn projected_remaining_days(now: f64, last_enroll_time: f64, interval: f64, r: u32, window: f64) -> f64 {
    if r == 0 {
        return (last_enroll_time + window - now).max(0.0);
    }
    (last_enroll_time + interval - now) + (r - 1) as f64 * interval + window
}
