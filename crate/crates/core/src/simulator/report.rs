use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::campaign::{CampaignSummary, PercentChange};
use super::Mode;
use crate::designs::DesignKind;
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: [&str; 9] = [
    "scenario",
    "design",
    "mode",
    "pcms",
    "ei_rate",
    "mean_duration_days",
    "mean_n",
    "replications",
    "seed",
];

#[derive(Serialize, Deserialize)]
struct SummaryRow {
    scenario: String,
    design: DesignKind,
    mode: Mode,
    pcms: f64,
    ei_rate: f64,
    mean_duration_days: f64,
    mean_n: f64,
    replications: u64,
    seed: u64,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("csv: {e}"))
}

pub fn write_summaries<W: Write>(out: W, rows: &[CampaignSummary]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(io_err)?;
    for s in rows {
        w.serialize(SummaryRow {
            scenario: s.scenario.clone(),
            design: s.design,
            mode: s.mode,
            pcms: s.pcms,
            ei_rate: s.ei_rate,
            mean_duration_days: s.mean_duration_days,
            mean_n: s.mean_n,
            replications: s.replications,
            seed: s.seed,
        })
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Read rows written by [`write_summaries`]. The header must match exactly.
pub fn read_summaries<R: Read>(input: R) -> Result<Vec<CampaignSummary>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(io_err)?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(Error::InvalidConfig(format!("unexpected summary header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    r.deserialize::<SummaryRow>()
        .map(|row| {
            let row = row.map_err(io_err)?;
            Ok(CampaignSummary {
                scenario: row.scenario,
                design: row.design,
                mode: row.mode,
                pcms: row.pcms,
                ei_rate: row.ei_rate,
                mean_duration_days: row.mean_duration_days,
                mean_n: row.mean_n,
                replications: row.replications,
                seed: row.seed,
                config_digest: String::new(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ChangeRow<'a> {
    scenario: &'a str,
    design: DesignKind,
    mode: Mode,
    baseline_mode: Mode,
    duration_pct: f64,
    n_pct: f64,
    pcms_delta: f64,
}

/// Percent-change rows for every `(design, scenario)` that has an early
/// identification run, against each available baseline mode (plain, tite).
pub fn write_changes<W: Write>(out: W, rows: &[CampaignSummary]) -> Result<usize> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["scenario", "design", "mode", "baseline_mode", "duration_pct", "n_pct", "pcms_delta"])
        .map_err(io_err)?;
    let mut written = 0;
    for variant in rows.iter().filter(|s| s.mode == Mode::EiTite) {
        for baseline_mode in [Mode::Plain, Mode::Tite] {
            let Some(baseline) = rows
                .iter()
                .find(|b| b.mode == baseline_mode && b.design == variant.design && b.scenario == variant.scenario)
            else {
                continue;
            };
            let c: PercentChange = super::percent_change(baseline, variant)?;
            w.serialize(ChangeRow {
                scenario: &variant.scenario,
                design: variant.design,
                mode: variant.mode,
                baseline_mode,
                duration_pct: c.duration_pct,
                n_pct: c.n_pct,
                pcms_delta: c.pcms_delta,
            })
            .map_err(io_err)?;
            written += 1;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(written)
}
