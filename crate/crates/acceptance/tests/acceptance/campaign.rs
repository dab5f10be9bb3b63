use std::sync::OnceLock;

use mtdfind_cli::campaign::{self, CampaignFile};
use mtdfind_core::designs::DesignKind;
use mtdfind_core::simulator::{percent_change, write_changes, write_summaries, CampaignSummary, Mode};

use crate::Verdict;

const EI_DESIGNS: [DesignKind; 2] = [DesignKind::Keyboard, DesignKind::Boin];

fn standard() -> &'static [CampaignSummary] {
    static ROWS: OnceLock<Vec<CampaignSummary>> = OnceLock::new();
    ROWS.get_or_init(|| campaign::run(&CampaignFile::default(), 1).unwrap())
}

fn find<'a>(rows: &'a [CampaignSummary], scenario: &str, design: DesignKind, mode: Mode) -> &'a CampaignSummary {
    rows.iter()
        .find(|r| r.scenario == scenario && r.design == design && r.mode == mode)
        .unwrap_or_else(|| panic!("no row for {scenario} {design} {mode}"))
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn criterion_6() -> Verdict {
    let rows = standard();
    let mut scenarios: Vec<&str> = Vec::new();
    for r in rows {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let reps = rows.iter().map(|r| r.replications).min().unwrap_or(0);
    let mut details = vec![format!("{} scenarios x {} designs x {} modes, {reps} reps each", scenarios.len(), 3, 3)];
    let mut pass = scenarios.len() == 8 && reps == 1000;

    let change = |s: &str, d: DesignKind, base: Mode| percent_change(find(rows, s, d, base), find(rows, s, d, Mode::EiTite)).unwrap();

    // (a)
    let mut ok_a = true;
    for d in EI_DESIGNS {
        let deltas: Vec<String> = scenarios
            .iter()
            .map(|s| {
                let delta = change(s, d, Mode::Tite).pcms_delta;
                ok_a &= delta.abs() <= 5.0;
                format!("{s} {delta:+.1}")
            })
            .collect();
        details.push(format!("(a) {d} PCMS EI-TITE minus TITE, pp: {}", deltas.join(", ")));
    }
    details.push(format!("(a) every delta within 5 pp: {}", verdict(ok_a)));

    // (b)
    let ei_rate = |d: DesignKind| mean(scenarios.iter().map(|s| find(rows, s, d, Mode::EiTite).ei_rate));
    let (mtpi, kb, boin) = (ei_rate(DesignKind::Mtpi), ei_rate(DesignKind::Keyboard), ei_rate(DesignKind::Boin));
    let ok_b = [kb, boin].iter().all(|r| (0.5..=0.95).contains(r)) && mtpi > kb && mtpi > boin;
    details.push(format!(
        "(b) mean EI rate mTPI {mtpi:.3}, Keyboard {kb:.3}, BOIN {boin:.3}; Keyboard/BOIN in [0.50, 0.95] and mTPI highest: {}",
        verdict(ok_b)
    ));

    // (c), (d), (e)
    let mut ok_c = true;
    let mut ok_d = true;
    let mut ok_e = true;
    for d in EI_DESIGNS {
        let dur_plain = -mean(scenarios.iter().map(|s| change(s, d, Mode::Plain).duration_pct));
        let dur_tite = -mean(scenarios.iter().map(|s| change(s, d, Mode::Tite).duration_pct));
        let n_plain = -mean(scenarios.iter().map(|s| change(s, d, Mode::Plain).n_pct));
        let n_tite = -mean(scenarios.iter().map(|s| change(s, d, Mode::Tite).n_pct));
        ok_c &= dur_plain >= 35.0;
        ok_d &= dur_tite >= 10.0;
        ok_e &= n_plain >= 10.0 && n_tite >= 10.0;
        details.push(format!(
            "{d}: duration reduction vs plain {dur_plain:.1}%, vs TITE {dur_tite:.1}%; sample-size reduction vs plain {n_plain:.1}%, vs TITE {n_tite:.1}%"
        ));
    }
    details.push(format!("(c) duration reduction vs plain >= 35%: {}", verdict(ok_c)));
    details.push(format!("(d) duration reduction vs TITE >= 10%: {}", verdict(ok_d)));
    details.push(format!("(e) sample-size reduction vs non-EI >= 10%: {}", verdict(ok_e)));

    pass &= ok_a && ok_b && ok_c && ok_d && ok_e;
    Verdict::new(pass, details)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn csv_bytes(rows: &[CampaignSummary]) -> (Vec<u8>, Vec<u8>) {
    let mut summary = Vec::new();
    write_summaries(&mut summary, rows).unwrap();
    let mut changes = Vec::new();
    write_changes(&mut changes, rows).unwrap();
    (summary, changes)
}

pub fn criterion_7() -> Verdict {
    let sequential = csv_bytes(standard());
    let mut details = Vec::new();
    let mut pass = true;
    for threads in [4, 0] {
        let rows = campaign::run(&CampaignFile::default(), threads).unwrap();
        let other = csv_bytes(&rows);
        let same = other == sequential;
        pass &= same;
        details.push(format!(
            "parallelism 1 vs {threads}: summary {} bytes, changes {} bytes, identical: {same}",
            other.0.len(),
            other.1.len()
        ));
    }
    Verdict::new(pass, details)
}
