use mtdfind_service::synth::random_log;
use mtdfind_service::{AppendOptions, EventKind, Store, TrialEvent, TrialState};
use proptest::prelude::*;

const FORCE: AppendOptions = AppendOptions {
    expected_seq: None,
    continue_after_identification: true,
};

fn load(store: &Store, log: &[TrialEvent]) -> uuid::Uuid {
    let EventKind::TrialCreated { config, .. } = &log[0].kind else {
        panic!("log must start with trial_created");
    };
    let (id, _) = store.create_trial(config.clone(), log[0].at, None).unwrap();
    for e in &log[1..] {
        store.append(id, e.clone(), FORCE).unwrap();
    }
    id
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn restart_reproduces_every_view(seed in 0u64..10_000, cut in 0.0f64..1.0) {
        let log = random_log(seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let id = load(&store, &log);
        let last = log.last().unwrap().at;
        let as_of = last * cut;
        let before = store.decision(id, Some(as_of), &[]).unwrap();
        let live = store.summary(id).unwrap();
        drop(store);

        let reopened = Store::open(dir.path()).unwrap();
        prop_assert_eq!(reopened.summary(id).unwrap(), live);
        prop_assert_eq!(reopened.decision(id, Some(as_of), &[]).unwrap(), before);
    }

    #[test]
    fn what_if_leaves_reads_unchanged(seed in 0u64..10_000) {
        let log = random_log(seed).unwrap();
        let state = TrialState::replay(&log).unwrap();
        let store = Store::in_memory();
        let id = load(&store, &log);
        let now = state.last_at();
        let baseline = store.decision(id, None, &[]).unwrap();
        let summary = store.summary(id).unwrap();

        if let Some(p) = state.patients().iter().find(|p| p.dlt_day.is_none() && p.completed_at.is_none()) {
            let day = (now - p.enrolled_at).min(state.config().window_days);
            let hypo = store.decision(id, None, &[TrialEvent::dlt(now, &p.patient_id, day)]).unwrap();
            prop_assert_eq!(hypo.seq, baseline.seq + 1);
        }
        // an invalid hypothetical is rejected and also leaves nothing behind
        let _ = store.decision(id, None, &[TrialEvent::enrolled(now, "", 1)]);
        prop_assert_eq!(store.decision(id, None, &[]).unwrap(), baseline);
        prop_assert_eq!(store.summary(id).unwrap(), summary);
    }

    #[test]
    fn replay_is_idempotent(seed in 0u64..10_000) {
        let log = random_log(seed).unwrap();
        let once = TrialState::replay(&log).unwrap();
        let twice = TrialState::replay(once.log()).unwrap();
        prop_assert_eq!(once.log(), twice.log());
        prop_assert_eq!(once.patients(), twice.patients());
        prop_assert_eq!(once.view(once.last_at()).unwrap(), twice.view(twice.last_at()).unwrap());
    }
}
