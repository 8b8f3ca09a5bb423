//! `tdsched`: run, validate, and compare scheduling experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tdsched::config::{ExperimentConfig, SchedulerKind};
use tdsched_cli::{
    comparison_rows, load_outcomes, print_checks, run_experiment, validate_config,
    write_comparison_csv,
};

#[derive(Parser)]
#[command(
    name = "tdsched",
    version,
    about = "Time-domain downlink scheduling simulator for an LTE-like cell"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (scheduler x seed) replication and write
    /// report files plus a cross-policy comparison table.
    Run(RunArgs),
    /// Run the built-in self-check suite against a configuration.
    Validate(ValidateArgs),
    /// Rebuild the comparison table from previously written reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Override the configured scheduler list (repeatable):
    /// greedy-knapsack, rank-only-knapsack, or priority-only.
    #[arg(long = "scheduler")]
    schedulers: Vec<String>,
    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Output directory. Falls back to the config's `out_dir`, then the
    /// TDSCHED_OUT_DIR environment variable, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-epoch trace.csv for each replication.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory previously populated by `tdsched run`.
    #[arg(long)]
    out: PathBuf,
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    match path {
        Some(p) => {
            ExperimentConfig::parse(p).with_context(|| format!("loading {}", p.display()))
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(args.config.as_ref())?;
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    }
    if !args.schedulers.is_empty() {
        cfg.schedulers = args
            .schedulers
            .iter()
            .map(|s| s.parse::<SchedulerKind>())
            .collect::<tdsched::Result<Vec<_>>>()?;
    }
    if let Some(duration) = args.duration {
        cfg.sim_duration_s = duration;
    }
    let out_root = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os("TDSCHED_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    let outcomes = run_experiment(&cfg, &out_root, args.trace)?;
    println!(
        "{} replication(s), {} simulated seconds each, reports under {}",
        outcomes.len(),
        cfg.sim_duration_s,
        out_root.display()
    );
    for outcome in &outcomes {
        let report = &outcome.report;
        let served_mbps: f64 = report.per_qci.iter().map(|r| r.throughput_mbps).sum();
        let lost_mbps: f64 = report.per_qci.iter().map(|r| r.loss_mbps).sum();
        println!(
            "  {} seed {}: {} bearers, served {:.3} Mbps, lost {:.3} Mbps -> {}",
            outcome.scheduler.name(),
            outcome.seed,
            report.per_bearer.len(),
            served_mbps,
            lost_mbps,
            outcome.dir.display()
        );
    }
    if cfg.schedulers.len() > 1 {
        println!("comparison table: {}", out_root.join("comparison.csv").display());
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> anyhow::Result<bool> {
    let cfg = load_config(args.config.as_ref())?;
    let results = validate_config(&cfg)?;
    print_checks(&results, std::io::stdout().lock())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let outcomes = load_outcomes(&args.out)?;
    let rows = comparison_rows(&outcomes);
    let path = args.out.join("comparison.csv");
    write_comparison_csv(&rows, &path)?;
    println!("{} comparison row(s) -> {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Validate(args) => cmd_validate(args),
        Command::Compare(args) => cmd_compare(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
