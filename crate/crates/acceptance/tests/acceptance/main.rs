//! Primary acceptance criteria, one verdict line each. Exits nonzero if any
//! criterion fails.

mod campaign;
mod examples;
mod oracle;
mod service;
mod tables;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// Result of one criterion: the verdict plus indented detail lines.
pub struct Verdict {
    pub pass: bool,
    pub details: Vec<String>,
}

impl Verdict {
    pub fn new(pass: bool, details: Vec<String>) -> Self {
        Verdict { pass, details }
    }
}

type Criterion = (u8, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 8] = [
    (1, "boundary tables at target 0.3 match the reference rows exactly", tables::criterion_1),
    (2, "worked BOIN example: 0.500 - 0.096 = 0.404, identified", examples::criterion_2),
    (3, "TBCRC replay: 0.93 / 0.55 / 0.98 within 0.03, 395 and 215 days", examples::criterion_3),
    (4, "retainment equals enumeration (1e-9) and Monte Carlo (4 SE)", oracle::criterion_4),
    (5, "complete data: TITE paths equal plain paths, N enrolled", oracle::criterion_5),
    (6, "campaign trends, 1000 reps x 8 scenarios", campaign::criterion_6),
    (7, "campaign CSV is bitwise identical across parallelism", campaign::criterion_7),
    (8, "service decisions equal direct library computation on 100 logs", service::criterion_8),
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, vec![format!("panicked: {msg}")])
        });
        let secs = start.elapsed().as_secs_f64();
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {tag} {name} ({secs:.1}s)");
        for d in &verdict.details {
            println!("    {d}");
        }
        if !verdict.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
