use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mtdfind_core::early_stop::{evaluate_early_stop, DosePosition, RemainingBudget};
use mtdfind_core::simulator::{Mode, TrialConfig};
use mtdfind_core::tite::{dose_snapshot, tite_decide, DoseSnapshot, Outcome, PatientRecord, SuspensionPolicy, TiteDecision};
use mtdfind_service::{api, synth, DecisionView, EventKind, LogRecord, Store, TrialEvent, TrialState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use crate::Verdict;

const LOGS: u64 = 100;

/// The decision quantities recomputed from raw events.
#[derive(Debug, PartialEq)]
struct Direct {
    current_dose: usize,
    highest_admissible: usize,
    eliminated_from: Option<usize>,
    enrolled: u32,
    snapshot: DoseSnapshot,
    decision: Option<TiteDecision>,
    retainment: Option<f64>,
    identified: bool,
}

impl Direct {
    fn of_view(v: &DecisionView) -> Self {
        Direct {
            current_dose: v.current_dose,
            highest_admissible: v.highest_admissible,
            eliminated_from: v.eliminated_from,
            enrolled: v.enrolled,
            snapshot: v.snapshot,
            decision: v.decision,
            retainment: v.retainment.map(|p| p.value()),
            identified: v.early_stop.identified,
        }
    }
}

struct Enrolled {
    id: String,
    dose: usize,
    at: f64,
    dlt_day: Option<f64>,
    completed: bool,
}

fn direct(log: &[TrialEvent], as_of: f64) -> Direct {
    let prefix: Vec<&TrialEvent> = log.iter().take_while(|e| e.at <= as_of).collect();
    let EventKind::TrialCreated { config, .. } = &prefix[0].kind else {
        panic!("log does not start with trial creation");
    };
    let config: &TrialConfig = config;
    let voided: HashSet<usize> = prefix
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Correction { target_seq, .. } => Some(target_seq as usize),
            _ => None,
        })
        .collect();
    let mut patients: Vec<Enrolled> = Vec::new();
    for (seq, e) in prefix.iter().enumerate().skip(1) {
        if voided.contains(&seq) {
            continue;
        }
        match &e.kind {
            EventKind::PatientEnrolled { patient_id, dose } => patients.push(Enrolled {
                id: patient_id.clone(),
                dose: *dose,
                at: e.at,
                dlt_day: None,
                completed: false,
            }),
            EventKind::DltObserved { patient_id, day } => {
                patients.iter_mut().find(|p| &p.id == patient_id).unwrap().dlt_day = Some(*day);
            }
            EventKind::AssessmentCompleted { patient_id } => {
                patients.iter_mut().find(|p| &p.id == patient_id).unwrap().completed = true;
            }
            _ => {}
        }
    }
    let records: Vec<PatientRecord> = patients
        .iter()
        .enumerate()
        .map(|(i, p)| PatientRecord {
            id: i as u64,
            dose_level: p.dose,
            enroll_time: p.at,
            outcome: match (p.dlt_day, p.completed) {
                (Some(d), _) => Outcome::Dlt { at_day: d },
                (None, true) => Outcome::CompletedNoDlt,
                (None, false) => Outcome::Pending {
                    observed_days: (as_of - p.at).max(0.0),
                },
            },
        })
        .collect();

    let design = config.build_design().unwrap();
    let table = design.boundary_table(config.n_max).unwrap();
    let window = config.window_days;
    let current = patients.last().map_or(config.start_dose, |p| p.dose);
    let snap = dose_snapshot(&records, current, as_of, window).unwrap();
    let mut highest = config.n_doses;
    let mut eliminated_from = None;
    for dose in 1..=config.n_doses {
        let s = dose_snapshot(&records, dose, as_of, window).unwrap();
        if design.eliminates(s.n_dlt, s.n_dlt + s.n_nodlt) {
            highest = (dose - 1).max(1);
            eliminated_from = Some(dose);
            break;
        }
    }
    let enrolled = patients.len() as u32;
    let budget = RemainingBudget::new(config.n_max, enrolled, &snap).unwrap();
    let position = DosePosition::of(current, highest);
    let policy = match config.mode {
        Mode::Plain => SuspensionPolicy::COMPLETE_DATA,
        _ => config.suspension,
    };
    let (decision, evaluated) = if snap.is_empty() {
        (None, None)
    } else {
        (
            Some(tite_decide(&design, &snap, &policy).unwrap()),
            evaluate_early_stop(&snap, &budget, &table, position, current, &config.thresholds).ok(),
        )
    };
    Direct {
        current_dose: current,
        highest_admissible: highest,
        eliminated_from,
        enrolled,
        snapshot: snap,
        decision,
        retainment: evaluated.map(|o| o.retainment.value()),
        identified: config.mode == Mode::EiTite && evaluated.is_some_and(|o| o.identified),
    }
}

async fn call(app: &Router, method: &str, uri: &str, headers: &[(&str, String)], body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, v.as_str());
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[derive(Default)]
struct Tally {
    reads: usize,
    what_ifs: usize,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }
}

async fn one_log(seed: u64, dir: &Path, tally: &mut Tally) {
    let log = synth::random_log(seed).unwrap();
    let EventKind::TrialCreated { config, .. } = &log[0].kind else {
        unreachable!()
    };
    let app = api::router(Arc::new(Store::open(dir).unwrap()));
    let (status, created) = call(&app, "POST", "/trials", &[], Some(json!({ "config": config, "at": log[0].at }))).await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    let id = created["id"].as_str().unwrap().to_string();
    for (seq, e) in log.iter().enumerate().skip(1) {
        let headers = [
            ("x-continue-after-identification", "true".to_string()),
            ("x-expected-seq", (seq - 1).to_string()),
        ];
        let (status, body) = call(&app, "POST", &format!("/trials/{id}/events"), &headers, Some(serde_json::to_value(e).unwrap())).await;
        assert_eq!(status, StatusCode::OK, "seed {seed} event {seq}: {body}");
        assert_eq!(body["seq"], json!(seq));
    }

    let last_at = log.last().unwrap().at;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![log[0].at, last_at];
    times.extend((0..3).map(|_| rng.random_range(log[0].at..=last_at)));
    times.extend((0..3).map(|_| log[rng.random_range(0..log.len())].at));

    let mut reads = Vec::new();
    for &t in &times {
        let (status, body) = call(&app, "GET", &format!("/trials/{id}/decision?as_of={t}"), &[], None).await;
        assert_eq!(status, StatusCode::OK, "seed {seed} as_of {t}: {body}");
        let view: DecisionView = serde_json::from_value(body.clone()).unwrap();
        let expected = direct(&log, t);
        let got = Direct::of_view(&view);
        tally.reads += 1;
        tally.check(got == expected, || format!("seed {seed} as_of {t}: service {got:?} vs direct {expected:?}"));
        reads.push(body);
    }

    // what-if: a DLT for someone still pending, else an empty hypothetical
    let (_, state_before) = call(&app, "GET", &format!("/trials/{id}/state"), &[], None).await;
    let pending = state_before["patients"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["dlt_day"].is_null() && p["completed_at"].is_null())
        .cloned();
    let events = match &pending {
        Some(p) => {
            let day = (last_at - p["enrolled_at"].as_f64().unwrap()).min(config.window_days);
            vec![json!({ "at": last_at, "type": "dlt_observed", "patient_id": p["patient_id"], "day": day })]
        }
        None => vec![],
    };
    let (status, hypo) = call(
        &app,
        "POST",
        &format!("/trials/{id}/decision:what-if"),
        &[],
        Some(json!({ "as_of": last_at, "events": events })),
    )
    .await;
    tally.what_ifs += 1;
    tally.check(status == StatusCode::OK, || format!("seed {seed} what-if rejected: {hypo}"));
    let (_, state_after) = call(&app, "GET", &format!("/trials/{id}/state"), &[], None).await;
    tally.check(state_before == state_after, || format!("seed {seed}: what-if changed the state"));
    let (_, read_after) = call(&app, "GET", &format!("/trials/{id}/decision?as_of={last_at}"), &[], None).await;
    tally.check(read_after == reads[1], || format!("seed {seed}: what-if changed a later read"));

    // replay: the stored log is the submitted one, and reopening reproduces every read
    let stored: Vec<LogRecord> = serde_json::from_value(state_before["events"].clone()).unwrap();
    let stored_events: Vec<TrialEvent> = stored.iter().map(|r| r.event.clone()).collect();
    tally.check(stored_events == log, || format!("seed {seed}: stored log differs from the submitted log"));
    drop(app);
    let reopened = api::router(Arc::new(Store::open(dir).unwrap()));
    let (_, state_reopened) = call(&reopened, "GET", &format!("/trials/{id}/state"), &[], None).await;
    tally.check(state_reopened == state_before, || format!("seed {seed}: state differs after reopening"));
    for (t, before) in times.iter().zip(&reads) {
        let (_, again) = call(&reopened, "GET", &format!("/trials/{id}/decision?as_of={t}"), &[], None).await;
        tally.check(&again == before, || format!("seed {seed} as_of {t}: read differs after reopening"));
    }
    let once = TrialState::replay(&log).unwrap();
    let twice = TrialState::replay(once.log()).unwrap();
    tally.check(
        once.log() == twice.log() && once.decision(None, &[]).unwrap() == twice.decision(None, &[]).unwrap(),
        || format!("seed {seed}: replaying a replayed log differs"),
    );
}

pub fn criterion_8() -> Verdict {
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let mut tally = Tally::default();
    runtime.block_on(async {
        for seed in 0..LOGS {
            let dir = tempfile::tempdir().unwrap();
            one_log(seed, dir.path(), &mut tally).await;
        }
    });
    let mut details = vec![format!(
        "{LOGS} logs: {} decision reads compared, {} what-if queries, replay after reopening checked",
        tally.reads, tally.what_ifs
    )];
    details.extend(tally.failures.iter().take(10).cloned());
    Verdict::new(tally.failures.is_empty(), details)
}
