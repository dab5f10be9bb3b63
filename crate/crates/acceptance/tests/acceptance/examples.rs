use mtdfind_cli::examples::{reproduce, Example, ExampleReport};
use mtdfind_service::{fixtures, TrialState};

use crate::Verdict;

fn summarize(report: &ExampleReport, details: &mut Vec<String>) -> bool {
    for c in &report.checks {
        let tag = if c.passed() { "ok" } else { "MISMATCH" };
        details.push(format!("{tag} {}: {:.4} (expected {} ± {})", c.name, c.value, c.expected, c.tolerance));
    }
    report.passed()
}

pub fn criterion_2() -> Verdict {
    let report = reproduce(Example::Figure1).unwrap();
    let mut details = Vec::new();
    let mut pass = summarize(&report, &mut details);

    // the same state reached through the service's event log
    let f = fixtures::figure1();
    let view = TrialState::replay(&f.events).unwrap().decision(Some(f.as_of), &[]).unwrap();
    let direct = report.evaluations[0].outcome.retainment.value();
    let logged = view.retainment.map_or(f64::NAN, |p| p.value());
    let agree = (direct - logged).abs() <= 1e-12 && view.early_stop.identified;
    details.push(format!("service log replay: retainment {logged:.4}, identified {}", view.early_stop.identified));
    pass &= agree;
    Verdict::new(pass, details)
}

pub fn criterion_3() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for ex in [Example::TbcrcNoDlt, Example::TbcrcOneDlt] {
        let report = reproduce(ex).unwrap();
        pass &= summarize(&report, &mut details);
    }
    Verdict::new(pass, details)
}
