use mtdfind_core::designs::{BoundaryTable, Design, DesignKind};
use mtdfind_core::early_stop::{retainment_terms, DosePosition, RemainingBudget};
use mtdfind_core::simulator::{simulate_trial, Mode, Scenario, TrialConfig};
use mtdfind_core::tite::{dose_snapshot, tite_decide, DoseSnapshot, Outcome, PatientRecord, SuspensionPolicy, TiteDecision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};

use crate::Verdict;

const STATES: usize = 240;
const DRAWS: u64 = 1_000_000;
/// Power of two, so observed fractions of whole days are exact.
const WINDOW: f64 = 64.0;
const NOW: f64 = 1000.0;

/// C(r,k) · a^(k) b^(r-k) / (a+b)^(r) with rising factorials.
fn pmf_by_products(k: u64, r: u64, a: f64, b: f64) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v *= (r - i) as f64 / (i + 1) as f64 * (a + i as f64);
    }
    for j in 0..r - k {
        v *= b + j as f64;
    }
    for m in 0..r {
        v /= a + b + m as f64;
    }
    v
}

/// Whether a final DLT count keeps the dose from being de-escalated, and
/// from being escalated.
fn sides(total_dlt: i64, e: i64, d: i64) -> (bool, bool) {
    (total_dlt < d, total_dlt > e)
}

/// Combine the probabilities of each side and of both sides holding.
fn combine(up: f64, down: f64, both: f64, position: DosePosition) -> f64 {
    match position {
        DosePosition::Interior => both,
        DosePosition::Max => up,
        DosePosition::Min => down,
        DosePosition::Only => up.min(down),
    }
}

struct State {
    snap: DoseSnapshot,
    budget: RemainingBudget,
    /// Future outcomes: remaining enrollments plus unobserved pending follow-up.
    trials: u64,
    table: BoundaryTable,
    position: DosePosition,
}

impl State {
    fn shape(&self) -> (f64, f64) {
        if self.snap.n_dlt == 0 {
            (0.5, self.snap.n_e + 0.5)
        } else {
            (self.snap.n_dlt as f64, self.snap.n_e)
        }
    }

    fn sides(&self, future_dlt: u64) -> (bool, bool) {
        let row = self.table.row(self.snap.n + self.budget.r).unwrap();
        sides(self.snap.n_dlt as i64 + future_dlt as i64, row.escalate_max, row.deescalate_min)
    }

    fn enumerate(&self) -> f64 {
        let (a, b) = self.shape();
        let (mut up, mut down, mut both) = (0.0, 0.0, 0.0);
        for k in 0..=self.trials {
            let mass = pmf_by_products(k, self.trials, a, b);
            let (u, d) = self.sides(k);
            up += if u { mass } else { 0.0 };
            down += if d { mass } else { 0.0 };
            both += if u && d { mass } else { 0.0 };
        }
        combine(up, down, both, self.position)
    }

    fn monte_carlo(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (a, b) = self.shape();
        let beta = Beta::new(a, b).unwrap();
        let (mut up, mut down, mut both) = (0u64, 0u64, 0u64);
        for _ in 0..DRAWS {
            let p = beta.sample(rng);
            let k = Binomial::new(self.trials, p).unwrap().sample(rng);
            let (u, d) = self.sides(k);
            up += u64::from(u);
            down += u64::from(d);
            both += u64::from(u && d);
        }
        let f = |c: u64| c as f64 / DRAWS as f64;
        combine(f(up), f(down), f(both), self.position)
    }
}

/// Pending follow-up in whole days whose fractions of the window sum to an
/// integer.
fn pending_days(rng: &mut ChaCha8Rng) -> Vec<u32> {
    match rng.random_range(0..4) {
        0 => vec![],
        1 => vec![0],
        2 => {
            let a = rng.random_range(1..64);
            vec![a, 64 - a]
        }
        _ => {
            let a = rng.random_range(33..64);
            let b = rng.random_range(33..64);
            vec![a, b, 128 - a - b]
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> Option<State> {
    let n_max = [18u32, 24, 30, 36][rng.random_range(0..4)];
    let kind = DesignKind::ALL[rng.random_range(0..3)];
    let target = [0.25, 0.3][rng.random_range(0..2)];
    let pending = pending_days(rng);
    let p = pending.len() as u32;
    let seen = rng.random_range(p.max(1)..=n_max - 1) - p;
    let n_dlt = if rng.random_bool(0.25) { 0 } else { rng.random_range(0..=seen) };
    let mut records = Vec::new();
    for i in 0..seen {
        let outcome = if i < n_dlt { Outcome::Dlt { at_day: 10.0 } } else { Outcome::CompletedNoDlt };
        records.push(PatientRecord {
            id: i as u64,
            dose_level: 1,
            enroll_time: 0.0,
            outcome,
        });
    }
    for (j, &days) in pending.iter().enumerate() {
        records.push(PatientRecord::pending((seen as usize + j) as u64, 1, NOW - days as f64));
    }
    let snap = dose_snapshot(&records, 1, NOW, WINDOW).unwrap();
    if snap.n_dlt > 0 && snap.n_e == 0.0 {
        return None;
    }
    let r = rng.random_range(0..=n_max - snap.n);
    let budget = RemainingBudget::new(n_max, n_max - r, &snap).unwrap();
    let observed: u32 = pending.iter().sum();
    let trials = (r + p - observed / 64) as u64;
    let position = [DosePosition::Min, DosePosition::Interior, DosePosition::Max, DosePosition::Only][rng.random_range(0..4)];
    let table = Design::standard(kind, target).unwrap().boundary_table(n_max).unwrap();
    Some(State {
        snap,
        budget,
        trials,
        table,
        position,
    })
}

pub fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mc_rng = ChaCha8Rng::seed_from_u64(40);
    let (mut tested, mut zero_dlt, mut with_pending) = (0, 0, 0);
    let (mut worst_enum, mut worst_z) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    while tested < STATES {
        let Some(s) = random_state(&mut rng) else { continue };
        tested += 1;
        zero_dlt += usize::from(s.snap.n_dlt == 0);
        with_pending += usize::from(s.snap.pending_count > 0);
        if s.budget.r_pend != s.trials as f64 {
            failures.push(format!("r_pend {} != {} future outcomes", s.budget.r_pend, s.trials));
            continue;
        }
        let got = retainment_terms(&s.snap, &s.budget, &s.table, s.position).unwrap().retainment.value();
        let exact = s.enumerate();
        let diff = (got - exact).abs();
        worst_enum = worst_enum.max(diff);
        if diff > 1e-9 {
            failures.push(format!("{:?} r={} {:?}: {got} vs enumeration {exact}", s.snap, s.budget.r, s.position));
        }
        let mc = s.monte_carlo(&mut mc_rng);
        let se = (got * (1.0 - got) / DRAWS as f64).sqrt().max(1.0 / DRAWS as f64);
        let z = (mc - got).abs() / se;
        worst_z = worst_z.max(z);
        if z > 4.0 {
            failures.push(format!("{:?} r={} {:?}: {got} vs Monte Carlo {mc} ({z:.2} SE)", s.snap, s.budget.r, s.position));
        }
    }
    let mut details = vec![
        format!("{tested} states ({zero_dlt} with no DLT, {with_pending} with pending follow-up)"),
        format!("max |closed form - enumeration| = {worst_enum:.2e}; max Monte Carlo deviation = {worst_z:.2} SE"),
    ];
    details.extend(failures.iter().take(10).cloned());
    Verdict::new(failures.is_empty(), details)
}

fn completed_records(path: &[bool]) -> Vec<PatientRecord> {
    path.iter()
        .enumerate()
        .map(|(i, &dlt)| PatientRecord {
            id: i as u64,
            dose_level: 1,
            enroll_time: i as f64,
            outcome: if dlt { Outcome::Dlt { at_day: WINDOW / 2.0 } } else { Outcome::CompletedNoDlt },
        })
        .collect()
}

fn immediate(design: DesignKind, mode: Mode) -> TrialConfig {
    TrialConfig {
        design,
        mode,
        window_days: 0.0,
        ..TrialConfig::default()
    }
}

pub fn criterion_5() -> Verdict {
    let designs: Vec<Design> = DesignKind::ALL.iter().map(|&k| Design::standard(k, 0.3).unwrap()).collect();
    let policies = [SuspensionPolicy::default(), SuspensionPolicy::COMPLETE_DATA];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut decisions = 0u64;
    for _ in 0..1000 {
        let len = rng.random_range(1..=36);
        let p: f64 = rng.random();
        let path: Vec<bool> = (0..len).map(|_| rng.random::<f64>() < p).collect();
        let records = completed_records(&path);
        for prefix in 1..=len {
            let now = records[prefix - 1].enroll_time + WINDOW;
            let snap = dose_snapshot(&records[..prefix], 1, now, WINDOW).unwrap();
            let n_dlt = path[..prefix].iter().filter(|&&d| d).count() as u32;
            for design in &designs {
                let plain = design.decide(n_dlt, prefix as u32).unwrap();
                for policy in &policies {
                    decisions += 1;
                    let tite = tite_decide(design, &snap, policy).unwrap();
                    if tite != TiteDecision::Dose(plain) {
                        failures.push(format!("{} n_dlt={n_dlt} n={prefix}: {tite:?} vs {plain:?}", design.kind()));
                    }
                }
            }
        }
    }

    let mut trials = 0;
    for i in 0..1000u64 {
        let mut p: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..0.7)).collect();
        p.sort_by(f64::total_cmp);
        let s = Scenario::new("r", p);
        let design = DesignKind::ALL[(i % 3) as usize];
        let plain = simulate_trial(&immediate(design, Mode::Plain), &s, i).unwrap();
        let tite = simulate_trial(&immediate(design, Mode::Tite), &s, i).unwrap();
        trials += 1;
        if plain.assignments != tite.assignments || plain.selected_mtd != tite.selected_mtd {
            failures.push(format!("seed {i} {design}: trajectories differ"));
        }
        if plain.n_enrolled != 36 || tite.n_enrolled != 36 {
            failures.push(format!("seed {i} {design}: enrolled {} / {}", plain.n_enrolled, tite.n_enrolled));
        }
    }
    let mut details = vec![
        format!("1000 completed paths: {decisions} TITE decisions compared with plain decisions"),
        format!("{trials} simulated trials with immediate outcomes: plain and TITE assignments compared, N = 36"),
    ];
    details.extend(failures.iter().take(10).cloned());
    Verdict::new(failures.is_empty(), details)
}
