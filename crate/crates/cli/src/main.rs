//! Command-line front end for the deception simulator.
//!
//! Five verbs cover the experiment workflow:
//!
//! * `run` — execute a scenario for one or more trials, emitting an event
//!   log (JSON lines) and a run report (JSON) per trial.
//! * `sweep` — run a factorial grid of attacker x defender x environment
//!   cells and emit per-trial plus aggregate rows as CSV and JSON.
//! * `replay` — rescore a previously written event log without re-running
//!   the simulation.
//! * `validate` — check a scenario file and its environment without
//!   executing anything.
//! * `dump-env` — print the fully built environment as JSON for
//!   inspection.
//!
//! All randomness is derived from `--seed`, so any invocation repeated
//! with the same inputs produces byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use decoysim::eventlog::EventLog;
use decoysim::runner::RunReport;
use decoysim::scenario::Scenario;
use decoysim::sweep::{parse_sweep_document, run_sweep};
use decoysim::telemetry::TelemetryMode;

#[derive(Parser)]
#[command(name = "decoysim", version, about = "Deterministic cyber-deception simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its event log and report.
    Run(RunArgs),
    /// Run a factorial sweep described by a sweep document.
    Sweep(SweepArgs),
    /// Recompute the report for a previously written event log.
    Replay(ReplayArgs),
    /// Parse a scenario and validate its environment without running.
    Validate(ScenarioOnly),
    /// Build the scenario's environment and print it as JSON.
    DumpEnv(DumpEnvArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario description (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Base seed; overrides the scenario's `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials; trial `i` runs with seed `base + i`.
    #[arg(long)]
    trials: Option<u32>,
    /// Tick budget; overrides the scenario's horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Telemetry mode: `network-trace` or `fine-grained`.
    #[arg(long)]
    telemetry_mode: Option<TelemetryMode>,
    /// Directory for event logs and reports; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep document: a scenario plus a `[sweep]` table of axes.
    #[arg(long)]
    scenario: PathBuf,
    /// Base seed; overrides the document's `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per cell; overrides the document's `run.trials`.
    #[arg(long)]
    trials: Option<u32>,
    /// Directory for `sweep.csv` and `sweep.json`; CSV to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Event log to rescore (JSON lines).
    log: PathBuf,
    /// File for the recomputed report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioOnly {
    /// Scenario description (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Seed used to materialize the environment.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DumpEnvArgs {
    /// Scenario description (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Seed used to materialize the environment.
    #[arg(long)]
    seed: Option<u64>,
    /// File for the environment JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Validate(args) => cmd_validate(args),
        Command::DumpEnv(args) => cmd_dump_env(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    Scenario::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Fold command-line overrides into the scenario's run section.
fn apply_overrides(
    scenario: &mut Scenario,
    seed: Option<u64>,
    trials: Option<u32>,
    horizon: Option<u64>,
    telemetry_mode: Option<TelemetryMode>,
) {
    if let Some(seed) = seed {
        scenario.run.seed = seed;
    }
    if let Some(trials) = trials {
        scenario.run.trials = trials;
    }
    if let Some(horizon) = horizon {
        scenario.run.horizon = Some(horizon);
    }
    if let Some(mode) = telemetry_mode {
        scenario.run.telemetry_mode = mode;
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn report_json(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_overrides(
        &mut scenario,
        args.seed,
        args.trials,
        args.horizon,
        args.telemetry_mode,
    );
    if scenario.run.trials == 0 {
        bail!("--trials must be at least 1");
    }

    let base = scenario.run.seed;
    let stem = scenario.environment.name.clone();
    let mut reports = Vec::new();
    for trial in 0..scenario.run.trials {
        let seed = base.wrapping_add(u64::from(trial));
        let (log, report) = scenario.run_seeded(seed)?;
        if let Some(dir) = &args.out {
            ensure_dir(dir)?;
            write_text(&dir.join(format!("{stem}-seed{seed}.jsonl")), &log.to_jsonl())?;
            write_text(&dir.join(format!("{stem}-seed{seed}.json")), &report_json(&report))?;
        }
        reports.push(report);
    }

    let summary = if reports.len() == 1 {
        report_json(&reports[0])
    } else {
        let mut text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        text.push('\n');
        text
    };
    if let Some(dir) = &args.out {
        write_text(&dir.join(format!("{stem}-reports.json")), &summary)?;
        println!(
            "wrote {} trial(s) for {stem} to {}",
            reports.len(),
            dir.display()
        );
    } else {
        print!("{summary}");
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading sweep document {}", args.scenario.display()))?;
    let (mut base, axes) = parse_sweep_document(&text)
        .with_context(|| format!("parsing {}", args.scenario.display()))?;
    apply_overrides(&mut base, args.seed, args.trials, None, None);
    if base.run.trials == 0 {
        bail!("--trials must be at least 1");
    }

    let outcome = run_sweep(&base, &axes);
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_text(&dir.join("sweep.csv"), &outcome.to_csv())?;
        write_text(&dir.join("sweep.json"), &outcome.to_json())?;
        println!("wrote {} rows to {}", outcome.rows.len(), dir.display());
    } else {
        print!("{}", outcome.to_csv());
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let text = fs::read_to_string(&args.log)
        .with_context(|| format!("reading event log {}", args.log.display()))?;
    let log = EventLog::parse(&text)
        .with_context(|| format!("parsing {}", args.log.display()))?;
    let report = RunReport::from_log(&log);
    let rendered = report_json(&report);
    match &args.out {
        Some(path) => write_text(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn cmd_validate(args: ScenarioOnly) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.run.seed);
    let env = scenario.environment(seed)?;
    let violations = env.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        bail!("environment failed validation with {} violation(s)", violations.len());
    }
    // Constructing the simulation exercises strategy names, budgets, the
    // telemetry subscriptions, and the initial deployment in one shot.
    scenario.simulation(seed)?;
    println!(
        "ok: {} / {} vs {} on {} ({} hosts)",
        args.scenario.display(),
        scenario.attacker.strategy,
        scenario.defender.strategy,
        scenario.environment.name,
        env.hosts.len(),
    );
    Ok(())
}

fn cmd_dump_env(args: DumpEnvArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.run.seed);
    let env = scenario.environment(seed)?;
    let mut rendered = serde_json::to_string_pretty(&env).expect("environment serializes");
    rendered.push('\n');
    match &args.out {
        Some(path) => write_text(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}
