//! The worked examples: a BOIN trial caught mid-way with two patients
//! pending, and the TBCRC 024 history replayed under deterministic
//! enrollment.

use std::fmt::Write as _;

use mtdfind_core::designs::{BoundaryTable, Design, DesignKind};
use mtdfind_core::early_stop::{
    evaluate_early_stop, retainment_terms, DosePosition, EarlyStopOutcome, RemainingBudget, RetainmentTerms, ThresholdConfig,
};
use mtdfind_core::simulator::projected_remaining_days;
use mtdfind_core::tite::{dose_snapshot, DoseSnapshot, Outcome, PatientRecord};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Figure1,
    TbcrcNoDlt,
    TbcrcOneDlt,
}

/// One computed value against its expected value.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            expected,
            tolerance,
        }
    }

    fn flag(name: impl Into<String>, value: bool, expected: bool) -> Self {
        Check::new(name, f64::from(u8::from(value)), f64::from(u8::from(expected)), 0.0)
    }

    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

/// The full pipeline at one instant of one example.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub label: String,
    pub design: DesignKind,
    pub now: f64,
    pub current_dose: usize,
    pub position: DosePosition,
    pub snapshot: DoseSnapshot,
    pub budget: RemainingBudget,
    pub terms: RetainmentTerms,
    pub outcome: EarlyStopOutcome,
    /// Days saved by stopping now, when the MTD is identified.
    pub savings_days: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleReport {
    pub example: Example,
    pub evaluations: Vec<Evaluation>,
    pub checks: Vec<Check>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.evaluations {
            let _ = writeln!(s, "[{}] design={} t={} dose={} ({:?})", e.label, e.design, e.now, e.current_dose, e.position);
            let sn = &e.snapshot;
            let _ = writeln!(
                s,
                "  n={} n_dlt={} n_nodlt={} pending={} n_pend={:.3} n_e={:.3}",
                sn.n, sn.n_dlt, sn.n_nodlt, sn.pending_count, sn.pend_observed_frac, sn.n_e
            );
            let _ = writeln!(s, "  r={} r_pend={:.3}", e.budget.r, e.budget.r_pend);
            let t = &e.terms;
            let _ = writeln!(
                s,
                "  shape=({:.3}, {:.3}) row n+r={} E={} D={}",
                t.shape.alpha(),
                t.shape.beta(),
                t.row_n,
                t.escalate_max,
                t.deescalate_min
            );
            let _ = writeln!(
                s,
                "  P(not de-escalated)={:.3} P(escalated)={:.3} retainment={:.3} threshold={:.3} -> {}",
                t.not_deescalate.value(),
                t.escalate.value(),
                e.outcome.retainment.value(),
                e.outcome.threshold_used.value(),
                if e.outcome.identified { "identified" } else { "not identified" }
            );
            if let Some(days) = e.savings_days {
                let _ = writeln!(s, "  study shortened by {days} days");
            }
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {}: {:.4} (expected {} ± {})",
                if c.passed() { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.expected,
                c.tolerance
            );
        }
        s
    }
}

struct Timeline {
    design: DesignKind,
    n_max: u32,
    n_doses: usize,
    window: f64,
    interval: f64,
    /// Dose and DLT day of each patient, in enrollment order.
    patients: Vec<(usize, Option<f64>)>,
}

impl Timeline {
    fn records(&self, now: f64) -> Vec<PatientRecord> {
        self.patients
            .iter()
            .enumerate()
            .map(|(i, &(dose, dlt))| {
                let enrolled = self.interval * i as f64;
                let outcome = match dlt {
                    Some(day) if enrolled + day <= now => Outcome::Dlt { at_day: day },
                    _ if enrolled + self.window <= now => Outcome::CompletedNoDlt,
                    _ => Outcome::Pending {
                        observed_days: now - enrolled,
                    },
                };
                PatientRecord {
                    id: i as u64,
                    dose_level: dose,
                    enroll_time: enrolled,
                    outcome,
                }
            })
            .collect()
    }

    fn evaluate(&self, label: &str, now: f64) -> Result<Evaluation> {
        let design = Design::standard(self.design, 0.3)?;
        let table: BoundaryTable = design.boundary_table(self.n_max)?;
        let records = self.records(now);
        let current = self.patients.last().map_or(1, |p| p.0);
        let snapshot = dose_snapshot(&records, current, now, self.window)?;
        let enrolled = self.patients.len() as u32;
        let budget = RemainingBudget::new(self.n_max, enrolled, &snapshot)?;
        let position = DosePosition::of(current, self.n_doses);
        let terms = retainment_terms(&snapshot, &budget, &table, position)?;
        let outcome = evaluate_early_stop(&snapshot, &budget, &table, position, current, &ThresholdConfig::default())?;
        let last_enroll = self.interval * (enrolled - 1) as f64;
        let savings_days = outcome
            .identified
            .then(|| projected_remaining_days(now, last_enroll, self.interval, budget.r, self.window));
        Ok(Evaluation {
            label: label.to_string(),
            design: self.design,
            now,
            current_dose: current,
            position,
            snapshot,
            budget,
            terms,
            outcome,
            savings_days,
        })
    }
}

fn figure1() -> Timeline {
    let mut patients = vec![(1, None), (2, None), (2, None)];
    patients.extend((0..9).map(|i| (3, (4..7).contains(&i).then_some(20.0))));
    Timeline {
        design: DesignKind::Boin,
        n_max: 18,
        n_doses: 5,
        window: 90.0,
        interval: 30.0,
        patients,
    }
}

/// 21 patients below the top dose: 3 at dose 1, 6 at dose 2 with two
/// DLTs, 12 at dose 3 with two DLTs.
fn tbcrc(design: DesignKind, top: &[Option<f64>]) -> Timeline {
    let mut patients: Vec<(usize, Option<f64>)> = (0..21)
        .map(|i| {
            let dose = match i {
                0..3 => 1,
                3..9 => 2,
                _ => 3,
            };
            (dose, matches!(i, 4 | 6 | 12 | 15).then_some(20.0))
        })
        .collect();
    patients.extend(top.iter().map(|&d| (4, d)));
    Timeline {
        design,
        n_max: 30,
        n_doses: 4,
        window: 70.0,
        interval: 60.0,
        patients,
    }
}

/// Third patient of the latest cohort has 35 days of follow-up.
fn cohort_instant(t: &Timeline) -> f64 {
    t.interval * (t.patients.len() - 1) as f64 + 35.0
}

const TBCRC_TOL: f64 = 0.03;

pub fn reproduce(example: Example) -> Result<ExampleReport> {
    let mut evaluations = Vec::new();
    let mut checks = Vec::new();
    match example {
        Example::Figure1 => {
            let t = figure1();
            let e = t.evaluate("figure1", 360.0)?;
            checks.push(Check::new("P(not de-escalated)", e.terms.not_deescalate.value(), 0.500, 0.001));
            checks.push(Check::new("P(escalated)", e.terms.escalate.value(), 0.096, 0.001));
            checks.push(Check::new("retainment", e.outcome.retainment.value(), 0.404, 0.001));
            checks.push(Check::flag("identified", e.outcome.identified, true));
            checks.push(Check::new("MTD", e.outcome.mtd_level.unwrap_or(0) as f64, 3.0, 0.0));
            evaluations.push(e);
        }
        Example::TbcrcNoDlt => {
            for design in DesignKind::ALL {
                let t = tbcrc(design, &[None; 3]);
                let e = t.evaluate("no DLT, first cohort", cohort_instant(&t))?;
                checks.push(Check::new(format!("{design} retainment"), e.outcome.retainment.value(), 0.93, TBCRC_TOL));
                checks.push(Check::flag(format!("{design} identified"), e.outcome.identified, true));
                checks.push(Check::new(format!("{design} days saved"), e.savings_days.unwrap_or(f64::NAN), 395.0, 0.0));
                evaluations.push(e);
            }
        }
        Example::TbcrcOneDlt => {
            for design in DesignKind::ALL {
                let first = tbcrc(design, &[Some(20.0), None, None]);
                let e = first.evaluate("one DLT, first cohort", cohort_instant(&first))?;
                checks.push(Check::new(format!("{design} first-cohort retainment"), e.outcome.retainment.value(), 0.55, TBCRC_TOL));
                checks.push(Check::flag(format!("{design} first cohort identified"), e.outcome.identified, false));
                evaluations.push(e);

                let second = tbcrc(design, &[Some(20.0), None, None, None, None, None]);
                let e = second.evaluate("one DLT, second cohort", cohort_instant(&second))?;
                checks.push(Check::new(format!("{design} second-cohort retainment"), e.outcome.retainment.value(), 0.98, TBCRC_TOL));
                checks.push(Check::flag(format!("{design} second cohort identified"), e.outcome.identified, true));
                checks.push(Check::new(format!("{design} days saved"), e.savings_days.unwrap_or(f64::NAN), 215.0, 0.0));
                evaluations.push(e);
            }
        }
    }
    Ok(ExampleReport {
        example,
        evaluations,
        checks,
    })
}
