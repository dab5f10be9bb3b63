//! Event logs for the worked trials used in examples and tests.

use mtdfind_core::designs::DesignKind;
use mtdfind_core::simulator::{Enrollment, Mode, TrialConfig};

use crate::event::{EventKind, TrialEvent};

/// A complete log (starting with `trial_created`) and the instant at which
/// it is meant to be read.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub events: Vec<TrialEvent>,
    pub as_of: f64,
}

impl Fixture {
    pub fn config(&self) -> &TrialConfig {
        match &self.events[0].kind {
            EventKind::TrialCreated { config, .. } => config,
            _ => unreachable!("fixtures start with trial_created"),
        }
    }
}

/// Patients enrolled every `interval` days at the given doses; `dlt[i]`
/// gives patient i's DLT day. Outcome events are interleaved in time order
/// and cut at `as_of`.
fn build(config: TrialConfig, doses: &[usize], dlt: &[Option<f64>], interval: f64, as_of: f64) -> Fixture {
    let window = config.window_days;
    let mut timed: Vec<(f64, usize, TrialEvent)> = Vec::new();
    for (i, &dose) in doses.iter().enumerate() {
        let t = interval * i as f64;
        let id = format!("p{}", i + 1);
        // tie order at equal times: outcomes before enrollments
        timed.push((t, 1, TrialEvent::enrolled(t, &id, dose)));
        match dlt[i] {
            Some(day) => timed.push((t + day, 0, TrialEvent::dlt(t + day, &id, day))),
            None => timed.push((t + window, 0, TrialEvent::completed(t + window, &id))),
        }
    }
    timed.retain(|(at, _, _)| *at <= as_of);
    timed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut events = vec![TrialEvent::new(
        0.0,
        EventKind::TrialCreated {
            config,
            idempotency_key: None,
        },
    )];
    events.extend(timed.into_iter().map(|(_, _, e)| e));
    Fixture { events, as_of }
}

/// Sample size 18, one patient a month, 3-month window, BOIN: 12 treated,
/// 9 at dose 3 with 3 DLTs, 4 completed and 2 pending for two months and
/// one month. The DLTs fall late enough that dose 3 is never eliminated.
pub fn figure1() -> Fixture {
    let config = TrialConfig {
        design: DesignKind::Boin,
        mode: Mode::EiTite,
        n_max: 18,
        n_doses: 5,
        window_days: 90.0,
        enrollment: Enrollment::Deterministic { interval_days: 30.0 },
        ..TrialConfig::default()
    };
    let doses = [1, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3];
    let mut dlt = [None; 12];
    for d in &mut dlt[7..10] {
        *d = Some(20.0);
    }
    build(config, &doses, &dlt, 30.0, 360.0)
}

fn tbcrc_config(design: DesignKind) -> TrialConfig {
    TrialConfig {
        design,
        mode: Mode::EiTite,
        n_max: 30,
        n_doses: 4,
        window_days: 70.0,
        enrollment: Enrollment::Deterministic { interval_days: 60.0 },
        ..TrialConfig::default()
    }
}

/// Doses and DLT days of the 21 patients before the top dose: 3 at dose 1,
/// 6 at dose 2 with 2 DLTs, 12 at dose 3 with 2 DLTs.
fn tbcrc_history() -> (Vec<usize>, Vec<Option<f64>>) {
    let doses = [vec![1; 3], vec![2; 6], vec![3; 12]].concat();
    let dlt = (0..21).map(|i| matches!(i, 4 | 6 | 12 | 15).then_some(20.0)).collect();
    (doses, dlt)
}

/// First cohort at the top dose: two completed without DLT, the third
/// observed 35 days.
pub fn tbcrc_no_dlt(design: DesignKind) -> Fixture {
    let (mut doses, mut dlt) = tbcrc_history();
    doses.extend([4; 3]);
    dlt.extend([None; 3]);
    build(tbcrc_config(design), &doses, &dlt, 60.0, 23.0 * 60.0 + 35.0)
}

/// One DLT in the first top-dose cohort; `second_cohort` moves to the
/// point where the next cohort has two completed and one at 35 days.
pub fn tbcrc_one_dlt(design: DesignKind, second_cohort: bool) -> Fixture {
    let (mut doses, mut dlt) = tbcrc_history();
    doses.extend([4; 3]);
    dlt.extend([Some(20.0), None, None]);
    let mut last = 23;
    if second_cohort {
        doses.extend([4; 3]);
        dlt.extend([None; 3]);
        last = 26;
    }
    build(tbcrc_config(design), &doses, &dlt, 60.0, 60.0 * last as f64 + 35.0)
}
