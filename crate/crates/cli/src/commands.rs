use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, Scenario, BUNDLED};
use crate::error::{CliError, Failure, Stage};
use crate::output::{write_outcome, write_summary};
use crate::pipeline::{run_pipeline, Depth, Summary};
use crate::sweep::run_sweep;

#[derive(Debug, Parser)]
#[command(name = "patternlq", version, about = "Leader-driven sign-pattern formation: synthesis, certificates and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assumptions and feasibility only.
    Check(CommonArgs),
    /// Designs and their certificates.
    Synth(CommonArgs),
    /// The full pipeline with simulation and artifacts.
    Run(CommonArgs),
    /// Runs the bundled scenarios of the 3×3 stripe experiment.
    ReproducePaper(CommonArgs),
    /// Samples the basin and checks every simulated limit.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    pub config: Option<String>,
    /// Output directory (overrides the scenario's `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw without its own seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Centralized controller or distributed observers.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

/// Runs a command and returns its exit code. Every path writes a summary.
pub fn execute(cli: &Cli) -> u8 {
    match &cli.command {
        Command::Check(args) => single(args, "check", Depth::Check),
        Command::Synth(args) => single(args, "synth", Depth::Synth),
        Command::Run(args) => single(args, "run", Depth::Run),
        Command::Sweep(args) => sweep(args),
        Command::ReproducePaper(args) => reproduce(args),
    }
}

fn default_out(args: &CommonArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn load(args: &CommonArgs, command: &str) -> Result<Scenario, u8> {
    let loaded = match &args.config {
        Some(source) => Scenario::load(source),
        None => Err(CliError::config("--config", "a scenario file or bundled name is required")),
    };
    loaded.map_err(|e| {
        let mut summary = Summary::new(
            args.config.as_deref().unwrap_or(""),
            command,
            args.mode.unwrap_or_default(),
            args.seed.unwrap_or_default(),
        );
        summary.record_failure(&Failure::new(Stage::Config, e));
        emit(&summary, &default_out(args))
    })
}

/// Prints the summary and writes it to `dir` when nothing else did.
fn emit(summary: &Summary, dir: &Path) -> u8 {
    let written = std::fs::create_dir_all(dir)
        .map_err(CliError::from)
        .and_then(|()| write_summary(&dir.join("summary.json"), summary));
    report(summary);
    match written {
        Ok(()) => summary.exit_code,
        Err(e) => {
            eprintln!("error: {e}");
            summary.exit_code.max(e.exit_code())
        }
    }
}

fn report(summary: &Summary) {
    match serde_json::to_string_pretty(summary) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("error: {e}"),
    }
    if let Some(err) = &summary.error {
        eprintln!("{}: {err}", summary.scenario);
    }
}

fn run_one(scenario: &Scenario, args: &CommonArgs, command: &str, depth: Depth, dir: &Path) -> u8 {
    let mode = args.mode.unwrap_or(scenario.mode);
    let seed = args.seed.unwrap_or(scenario.seed);
    let mut outcome = run_pipeline(scenario, command, mode, seed, depth);
    if let Err(e) = write_outcome(&mut outcome, scenario, dir) {
        eprintln!("error: {e}");
        report(&outcome.summary);
        return e.exit_code();
    }
    report(&outcome.summary);
    outcome.summary.exit_code
}

fn single(args: &CommonArgs, command: &str, depth: Depth) -> u8 {
    match load(args, command) {
        Ok(scenario) => {
            let dir = args.out.clone().unwrap_or_else(|| scenario.output.dir.clone());
            run_one(&scenario, args, command, depth, &dir)
        }
        Err(code) => code,
    }
}

fn reproduce(args: &CommonArgs) -> u8 {
    let root = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut code = 0;
    for (name, text) in BUNDLED {
        let scenario = match Scenario::parse(text) {
            Ok(s) => s,
            Err(e) => {
                let mut summary = Summary::new(name, "reproduce-paper", Mode::default(), 0);
                summary.record_failure(&Failure::new(Stage::Config, e));
                code = code.max(emit(&summary, &root.join(name)));
                continue;
            }
        };
        if args.mode.is_some_and(|m| m != scenario.mode) {
            continue;
        }
        let scenario_args = CommonArgs {
            mode: None,
            ..args.clone()
        };
        let status = run_one(&scenario, &scenario_args, "reproduce-paper", Depth::Run, &root.join(name));
        if code == 0 {
            code = status;
        }
    }
    code
}

fn sweep(args: &CommonArgs) -> u8 {
    let scenario = match load(args, "sweep") {
        Ok(s) => s,
        Err(code) => return code,
    };
    let dir = args.out.clone().unwrap_or_else(|| scenario.output.dir.clone());
    let mode = args.mode.unwrap_or(scenario.mode);
    let seed = args.seed.unwrap_or(scenario.seed);
    let (summary, _) = run_sweep(&scenario, mode, seed);
    let written = std::fs::create_dir_all(&dir).map_err(CliError::from).and_then(|()| {
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), text + "\n").map_err(CliError::from)
    });
    match serde_json::to_string_pretty(&summary) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("error: {e}"),
    }
    match written {
        Ok(()) => summary.run.exit_code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
