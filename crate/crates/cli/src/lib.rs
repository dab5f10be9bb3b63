//! `mtdfind`: boundary tables, simulation campaigns, the worked examples
//! and CSV reports.

pub mod campaign;
mod error;
pub mod examples;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtdfind_core::designs::{Design, DesignKind, DesignParams, OverdoseWidth};
use mtdfind_core::simulator::{percent_change, read_summaries, write_summaries, CampaignSummary, Mode};

pub use error::{CliError, Result};

use crate::campaign::CampaignFile;
use crate::examples::Example;

/// Table columns printed by default.
const TABLE_COLUMNS: [u32; 6] = [3, 6, 9, 12, 15, 18];

#[derive(Debug, Parser)]
#[command(name = "mtdfind", version, about = "Model-assisted dose finding with early MTD identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a design's escalation / de-escalation / elimination boundaries.
    Boundaries(BoundariesArgs),
    /// Run a simulation campaign and write CSV summaries.
    Simulate(SimulateArgs),
    /// Print the standard scenario set as a scenario file.
    Scenarios(ScenariosArgs),
    /// Recompute a worked example; exits 0 only if every value matches.
    ReproduceExample {
        #[arg(value_enum)]
        which: Example,
        #[arg(long)]
        json: bool,
    },
    /// Re-read a summary CSV written by `simulate` and tabulate it.
    Report {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MtpiWidth {
    UpperBound,
    Complement,
}

#[derive(Debug, Args)]
pub struct BoundariesArgs {
    #[arg(long, value_parser = parse_design)]
    pub design: DesignKind,
    #[arg(long, default_value_t = 0.3)]
    pub target: f64,
    /// Proper dosing interval as `lo,hi`; the design's standard one if absent.
    #[arg(long, value_parser = parse_interval)]
    pub interval: Option<(f64, f64)>,
    #[arg(long, default_value_t = 18)]
    pub n_max: u32,
    /// Print every sample size up to n-max instead of multiples of three.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value = "upper-bound")]
    pub mtpi_width: MtpiWidth,
    /// Also write the table as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Campaign file (TOML). Without one, the standard campaign runs.
    pub config: Option<PathBuf>,
    /// Scenario file (TOML) appended to the config's scenarios.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Add this many random-scenario generators.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "MTDFIND_PARALLELISM")]
    pub parallel: Option<usize>,
    /// Summary CSV path; percent changes go to `<stem>.changes.csv`.
    /// Without it the summary is printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    #[arg(long, default_value_t = 6)]
    pub n_doses: usize,
    #[arg(long, default_value_t = 0.3)]
    pub target: f64,
}

fn parse_design(s: &str) -> std::result::Result<DesignKind, String> {
    s.parse().map_err(|e: mtdfind_core::Error| e.to_string())
}

fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Run one command, writing its report to `out`. Returns the exit status
/// for commands that finish normally.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Boundaries(args) => boundaries(&args, out),
        Command::Simulate(args) => simulate(&args, out),
        Command::Scenarios(args) => {
            let set = campaign::standard_scenarios(args.n_doses, args.target);
            let text = toml::to_string(&set).map_err(|e| CliError::Internal(e.to_string()))?;
            out.write_all(text.as_bytes())?;
            Ok(0)
        }
        Command::ReproduceExample { which, json } => {
            let report = examples::reproduce(which)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?)?;
            } else {
                out.write_all(report.to_text().as_bytes())?;
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Report { path, json } => report(&path, json, out),
    }
}

pub fn boundaries(args: &BoundariesArgs, out: &mut dyn Write) -> Result<u8> {
    let mut params = DesignParams::standard(args.design, args.target);
    if let Some((lo, hi)) = args.interval {
        params = params.with_interval(lo, hi);
    }
    params.mtpi_overdose_width = match args.mtpi_width {
        MtpiWidth::UpperBound => OverdoseWidth::UpperBound,
        MtpiWidth::Complement => OverdoseWidth::Complement,
    };
    params.validate()?;
    if args.n_max == 0 {
        return Err(CliError::Usage("n-max must be at least 1".into()));
    }
    let table = Design::new(args.design, params)?.boundary_table(args.n_max)?;
    let columns: Vec<u32> = if args.all {
        (1..=args.n_max).collect()
    } else {
        TABLE_COLUMNS.iter().copied().filter(|&n| n <= args.n_max).collect()
    };
    out.write_all(table.to_text(Some(&columns)).as_bytes())?;
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&table).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(path, json + "\n").map_err(|e| CliError::write(path, e))?;
    }
    Ok(0)
}

/// Build the campaign from the file and flags; flags win.
pub fn campaign_from_args(args: &SimulateArgs) -> Result<CampaignFile> {
    let mut file = match &args.config {
        Some(path) => CampaignFile::load(path)?,
        None => CampaignFile::default(),
    };
    if let Some(path) = &args.scenarios {
        file.add_scenarios(path)?;
    }
    if let Some(n) = args.random {
        let first = file.random.len();
        for (k, mut spec) in campaign::random_specs(n, file.trial.n_doses, file.trial.target).into_iter().enumerate() {
            spec.label = format!("RS{}", first + k + 1);
            file.random.push(spec);
        }
    }
    if let Some(reps) = args.reps {
        file.replications = reps;
    }
    if let Some(seed) = args.seed {
        file.trial.seed = seed;
    }
    if let Some(p) = args.parallel {
        file.parallelism = Some(p);
    }
    Ok(file)
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<u8> {
    let file = campaign_from_args(args)?;
    let rows = campaign::run(&file, file.parallelism.unwrap_or(0))?;
    match &args.out {
        Some(path) => {
            let changes = campaign::write_outputs(&rows, path)?;
            writeln!(out, "wrote {} summary rows to {}", rows.len(), path.display())?;
            if changes > 0 {
                writeln!(out, "wrote {changes} percent-change rows to {}", campaign::changes_path(path).display())?;
            }
        }
        None => write_summaries(&mut *out, &rows)?,
    }
    Ok(0)
}

pub fn report(path: &Path, json: bool, out: &mut dyn Write) -> Result<u8> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    let rows = read_summaries(bytes.as_slice()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if json {
        let doc = serde_json::to_string_pretty(&rows).map_err(|e| CliError::Internal(e.to_string()))?;
        writeln!(out, "{doc}")?;
        return Ok(0);
    }
    writeln!(
        out,
        "{:<10} {:<9} {:<8} {:>7} {:>7} {:>10} {:>7} {:>6}",
        "scenario", "design", "mode", "pcms", "ei", "duration", "n", "reps"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:<10} {:<9} {:<8} {:>7.3} {:>7.3} {:>10.1} {:>7.2} {:>6}",
            r.scenario, r.design, r.mode, r.pcms, r.ei_rate, r.mean_duration_days, r.mean_n, r.replications
        )?;
    }
    let changes = change_lines(&rows)?;
    if !changes.is_empty() {
        writeln!(out)?;
        writeln!(out, "{:<10} {:<9} {:<14} {:>11} {:>8} {:>10}", "scenario", "design", "vs", "duration %", "n %", "pcms pp")?;
        for line in changes {
            writeln!(out, "{line}")?;
        }
    }
    Ok(0)
}

fn change_lines(rows: &[CampaignSummary]) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for v in rows.iter().filter(|r| r.mode == Mode::EiTite) {
        for base_mode in [Mode::Plain, Mode::Tite] {
            if let Some(b) = rows.iter().find(|b| b.mode == base_mode && b.design == v.design && b.scenario == v.scenario) {
                let c = percent_change(b, v)?;
                lines.push(format!(
                    "{:<10} {:<9} {:<14} {:>11.1} {:>8.1} {:>10.1}",
                    v.scenario,
                    v.design,
                    format!("ei_tite/{base_mode}"),
                    c.duration_pct,
                    c.n_pct,
                    c.pcms_delta
                ));
            }
        }
    }
    Ok(lines)
}
