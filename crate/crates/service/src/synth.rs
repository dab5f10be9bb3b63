//! Seeded generator of valid trial logs, for soak tests and demos.
//!
//! A trial is run forward in time against [`TrialState`]: patients arrive
//! at exponential gaps, mostly receive the suggested dose, outcomes arrive
//! from a fixed toxicity curve, and now and then an outcome or a fresh
//! enrollment is voided by a correction and re-entered.

use mtdfind_core::designs::DesignKind;
use mtdfind_core::simulator::{Enrollment, Mode, TrialConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::event::{EventKind, TrialEvent};
use crate::state::TrialState;

#[derive(Debug, Clone, Copy)]
enum Due {
    Dlt { day: f64 },
    Completion,
}

#[derive(Debug, Clone)]
struct Pending {
    at: f64,
    patient: String,
    due: Due,
}

/// A random configuration small enough to finish in a few dozen events.
pub fn random_config(rng: &mut impl Rng) -> TrialConfig {
    let mode = match rng.random_range(0..10) {
        0 | 1 => Mode::Plain,
        2 | 3 => Mode::Tite,
        _ => Mode::EiTite,
    };
    TrialConfig {
        design: DesignKind::ALL[rng.random_range(0..DesignKind::ALL.len())],
        mode,
        n_max: 3 * rng.random_range(2..=10),
        n_doses: rng.random_range(3..=6),
        window_days: f64::from(rng.random_range(20..=100)),
        enrollment: Enrollment::Deterministic { interval_days: 30.0 },
        ..TrialConfig::default()
    }
}

/// A complete, valid log (creation first) for the trial drawn from `seed`.
pub fn random_log(seed: u64) -> Result<Vec<TrialEvent>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = random_config(&mut rng);
    let window = config.window_days;
    let mut p: Vec<f64> = (0..config.n_doses).map(|_| rng.random_range(0.0..0.6)).collect();
    p.sort_by(f64::total_cmp);
    let mean_gap = window / rng.random_range(1.0..4.0);

    let mut state = TrialState::create(TrialEvent::new(
        0.0,
        EventKind::TrialCreated {
            config: config.clone(),
            idempotency_key: None,
        },
    ))?;
    let mut queue: Vec<Pending> = Vec::new();
    let mut next_arrival = 0.0;
    let mut accruing = true;
    let mut serial = 0;

    loop {
        let enrolled = state.patients().len() as u32;
        let can_enroll = accruing && enrolled < config.n_max;
        let first_due = queue
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.at.total_cmp(&b.1.at))
            .map(|(i, q)| (i, q.at));
        match first_due {
            // outcomes go first at equal times
            Some((i, at)) if !can_enroll || at <= next_arrival => {
                let due = queue.swap_remove(i);
                let event = match due.due {
                    Due::Dlt { day } => TrialEvent::dlt(at, &due.patient, day),
                    Due::Completion => TrialEvent::completed(at, &due.patient),
                };
                let seq = state.append(event)?;
                if rng.random_bool(0.06) {
                    state.append(TrialEvent::correction(at, seq))?;
                    let enrolled_at = state
                        .patients()
                        .iter()
                        .find(|p| p.patient_id == due.patient)
                        .map_or(at, |p| p.enrolled_at);
                    // re-enter the opposite outcome
                    let redo = match due.due {
                        Due::Dlt { .. } => Pending {
                            at: (enrolled_at + window).max(at),
                            patient: due.patient,
                            due: Due::Completion,
                        },
                        Due::Completion => Pending {
                            at,
                            patient: due.patient,
                            due: Due::Dlt { day: window },
                        },
                    };
                    queue.push(redo);
                }
            }
            None if !can_enroll => break,
            _ => {
                let now = next_arrival;
                let view = state.view(now)?;
                if config.mode == Mode::EiTite && view.identified && rng.random_bool(0.5) {
                    accruing = false;
                    continue;
                }
                let dose = if view.snapshot.is_empty() {
                    Some(view.current_dose.min(view.highest_admissible))
                } else {
                    view.next_dose
                };
                let Some(mut dose) = dose else {
                    // accrual suspended: the next arrival waits for an outcome
                    match first_due {
                        Some((_, at)) => next_arrival = at,
                        None => accruing = false,
                    }
                    continue;
                };
                if rng.random_bool(0.1) {
                    let tried = state.patients().iter().map(|p| p.dose).max().unwrap_or(0);
                    let top = view.highest_admissible.min(tried.max(config.start_dose - 1) + 1);
                    dose = rng.random_range(1..=top);
                }
                serial += 1;
                let id = format!("s{seed}-{serial}");
                let seq = state.append(TrialEvent::enrolled(now, &id, dose))?;
                if rng.random_bool(0.04) {
                    state.append(TrialEvent::correction(now, seq))?;
                } else {
                    let due = if rng.random_bool(p[dose - 1]) {
                        let day = rng.random_range(0.0..window).max(1e-3);
                        Pending {
                            at: now + day,
                            patient: id,
                            due: Due::Dlt { day },
                        }
                    } else {
                        Pending {
                            at: now + window,
                            patient: id,
                            due: Due::Completion,
                        }
                    };
                    queue.push(due);
                }
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                next_arrival = now - mean_gap * u.ln();
            }
        }
    }
    Ok(state.log().to_vec())
}
