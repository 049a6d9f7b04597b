//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check or replay failed, 2 usage or
//! configuration error.

use crate::bus_model::regmap::dump;
use crate::bus_model::Bus;
use crate::driver_stack::{DriverConfig, Registry};
use crate::flight_sim::{run_trials, SimConfig, Summary, TrialResult, Variant};
use crate::harness::mutants::run_mutants;
use crate::harness::replay::{load_counterexamples, replay, ReplayStatus};
use crate::harness::{run_all, Report, RunOptions, Status};
use crate::par::ExecMode;
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "certibus", version, about = "Bus models, driver-stack refinement checks and fault-injection flights")]
pub struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every layer of the shipped driver stack.
    Check {
        /// Run the seeded mutants instead; succeed only if all are rejected.
        #[arg(long)]
        mutants: bool,
        /// Print the layer table and exit.
        #[arg(long)]
        layers: bool,
        /// Cap on states per check.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value = "certibus-out")]
        out: PathBuf,
    },
    /// Fly seeded trials of both driver variants and write traces and metrics.
    Run {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Flight length in seconds (overrides the config file).
        #[arg(long)]
        duration: Option<f64>,
        /// First trial seed; trial i uses seed + i.
        #[arg(long, env = "CERTIBUS_SEED")]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = VariantArg::Both)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Random)]
        schedule: ScheduleArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "certibus-out")]
        out: PathBuf,
    },
    /// Re-execute the counterexamples in a report or counterexample file.
    Replay { path: PathBuf },
    /// Print a bus register map as NAME, INDEX, RESET.
    DumpRegmap { bus: Bus },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Both,
    Verified,
    Unverified,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Both => Variant::BOTH.to_vec(),
            VariantArg::Verified => vec![Variant::Verified],
            VariantArg::Unverified => vec![Variant::Unverified],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    /// Faults every 5-10 s, drawn from the trial seed.
    Random,
    /// No faults.
    None,
}

/// Parse `args` (including the program name) and run. Usage errors are
/// reported on `err` with exit code 2; `--help` and `--version` go to `out`.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let result = match &cli.command {
        Command::Check { mutants, layers, budget, out: dir } => {
            if *layers {
                cmd_layers(out)
            } else if *mutants {
                cmd_mutants(*budget, dir, mode, out)
            } else {
                cmd_check(*budget, dir, mode, out)
            }
        }
        Command::Run { trials, duration, seed, variant, schedule, config, out: dir } => {
            cmd_run(*trials, *duration, *seed, *variant, *schedule, config.as_deref(), dir, mode, out)
        }
        Command::Replay { path } => cmd_replay(path, out),
        Command::DumpRegmap { bus } => {
            let _ = write!(out, "{}", dump(*bus));
            Ok(EXIT_OK)
        }
    };
    result.unwrap_or_else(|msg| {
        let _ = writeln!(err, "error: {msg}");
        EXIT_USAGE
    })
}

type CmdResult = Result<i32, String>;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn make_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn shipped() -> Result<Registry, String> {
    let reg = Registry::shipped(DriverConfig::default());
    reg.validate().map_err(|e| format!("malformed registry: {e}"))?;
    Ok(reg)
}

fn cmd_layers(out: &mut dyn Write) -> CmdResult {
    let _ = write!(out, "{}", shipped()?.to_text());
    Ok(EXIT_OK)
}

fn options(budget: Option<u64>, mode: ExecMode) -> RunOptions {
    RunOptions { budget, mode, ..RunOptions::default() }
}

/// Text report, JSON report (the replay file) and per-record summary.
fn write_report(dir: &Path, stem: &str, report: &Report) -> Result<PathBuf, String> {
    write_file(dir, &format!("{stem}.tsv"), &report.to_text())?;
    let json = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    write_file(dir, &format!("{stem}.json"), &(json + "\n"))
}

fn cmd_check(budget: Option<u64>, dir: &Path, mode: ExecMode, out: &mut dyn Write) -> CmdResult {
    let reg = shipped()?;
    make_dir(dir)?;
    let report = run_all(&reg, &options(budget, mode)).map_err(|e| e.to_string())?;
    let _ = write!(out, "{}", report.to_text());
    let path = write_report(dir, "report", &report)?;
    if report.all_pass() {
        let _ = writeln!(out, "all {} checks pass", report.records.len());
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "checks failed; report: {}", path.display());
        Ok(EXIT_FAIL)
    }
}

fn cmd_mutants(budget: Option<u64>, dir: &Path, mode: ExecMode, out: &mut dyn Write) -> CmdResult {
    let reg = shipped()?;
    let mdir = dir.join("mutants");
    make_dir(&mdir)?;
    let opts = options(budget, mode);
    let baseline = run_all(&reg, &opts).map_err(|e| e.to_string())?;
    write_report(dir, "report", &baseline)?;
    if !baseline.all_pass() {
        let _ = writeln!(out, "shipped stack does not pass; mutant results would be meaningless");
        return Ok(EXIT_FAIL);
    }
    let results = run_mutants(reg.config, &RunOptions { fail_fast: true, ..opts }, &baseline)
        .map_err(|e| e.to_string())?;
    let mut table = String::new();
    for r in &results {
        let failing: Vec<String> = r
            .report
            .records
            .iter()
            .filter(|c| c.verdict.status == Status::Fail)
            .map(|c| format!("{}/{}", c.layer, c.check))
            .collect();
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}",
            r.name,
            if r.killed { "KILLED" } else { "SURVIVED" },
            if r.replayed { "REPLAYED" } else { "NOT_REPLAYED" },
            if failing.is_empty() { "-".to_string() } else { failing.join(",") }
        );
        write_report(&mdir, r.name, &r.report)?;
    }
    let _ = write!(out, "{table}");
    let path = write_file(dir, "mutants.tsv", &table)?;
    let rejected = results.iter().filter(|r| r.killed && r.replayed).count();
    let _ = writeln!(out, "{rejected}/{} mutants rejected", results.len());
    if rejected == results.len() {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "report: {}", path.display());
        Ok(EXIT_FAIL)
    }
}

fn cmd_replay(path: &Path, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cexs = load_counterexamples(&text).map_err(|e| e.to_string())?;
    let mut confirmed = 0;
    for c in &cexs {
        match replay(c).map_err(|e| e.to_string())? {
            ReplayStatus::Confirmed { clause, detail } => {
                confirmed += 1;
                let _ = writeln!(out, "CONFIRMED\t{}\t{}\t{}\t{clause:?}\t{detail}", c.registry, c.layer, c.check);
            }
            ReplayStatus::NotReproduced { got } => {
                let _ = writeln!(out, "NOT_REPRODUCED\t{}\t{}\t{}\t{got}", c.registry, c.layer, c.check);
            }
        }
    }
    Ok(if confirmed == cexs.len() { EXIT_OK } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    trials: usize,
    duration: Option<f64>,
    seed: Option<u64>,
    variant: VariantArg,
    schedule: ScheduleArg,
    config: Option<&Path>,
    dir: &Path,
    mode: ExecMode,
    out: &mut dyn Write,
) -> CmdResult {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            SimConfig::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SimConfig::default(),
    };
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if trials == 0 {
        return Err("--trials must be at least 1".into());
    }
    make_dir(dir)?;
    let results = run_trials(&cfg, &variant.variants(), trials, schedule == ScheduleArg::Random, mode)
        .map_err(|e| e.to_string())?;

    for r in &results {
        write_file(dir, &format!("trial_{:02}_{}.csv", r.trial, r.variant), &r.trace.to_csv())?;
    }
    write_file(dir, "config.txt", &cfg.to_text())?;
    write_file(dir, "metrics.txt", &metrics_kv(&results))?;
    write_file(dir, "metrics.csv", &metrics_csv(&results))?;
    let _ = write!(out, "{}", overview(&results));
    let _ = writeln!(out, "wrote {} traces to {}", results.len(), dir.display());
    Ok(EXIT_OK)
}

fn label(r: &TrialResult) -> String {
    format!("trial_{:02}_{}", r.trial, r.variant)
}

fn metrics_kv(results: &[TrialResult]) -> String {
    let mut s = String::new();
    for r in results {
        let p = format!("{}_", label(r));
        let times: Vec<String> = r.schedule.times_s().iter().map(|t| format!("{t:.3}")).collect();
        let _ = writeln!(s, "{p}seed={}", r.seed);
        let _ = writeln!(s, "{p}fault_times={}", times.join(";"));
        s.push_str(&r.summary.to_kv(&p));
    }
    s
}

fn metrics_csv(results: &[TrialResult]) -> String {
    let mut s = format!("trial,seed,variant,{}\n", Summary::csv_header());
    for r in results {
        let _ = writeln!(s, "{},{},{},{}", r.trial, r.seed, r.variant, r.summary.csv_row());
    }
    s
}

/// One line per trial and variant: window ratios and the longest freeze.
fn overview(results: &[TrialResult]) -> String {
    let ratio = |x: Option<f64>| x.map_or_else(|| "na".to_string(), |v| format!("{v:.2}"));
    let mut s = String::from("trial\tvariant\tfaults\troll_ratio\tpitch_ratio\tyaw_ratio\tlongest_stale_run\n");
    for r in results {
        let [a, b, c] = r.summary.axes.map(|m| ratio(m.ratio));
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{a}\t{b}\t{c}\t{}",
            r.trial, r.variant, r.summary.faults, r.summary.longest_stale_run
        );
    }
    s
}
