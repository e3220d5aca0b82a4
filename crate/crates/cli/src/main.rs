use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowdsim::harness::{parse_config, render_report, run_experiment, write_report, ExperimentConfig, Mode};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "crowdsim",
    version,
    about = "Seeded crowd evacuation and stage-switching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evacuation runs
    Evac {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Stage-switching runs
    Stage {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Run any config, whatever its mode
    Sweep(RunArgs),
    /// Check a config and print its canonical form
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum RunAction {
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for per-run JSONL traces
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report path; defaults to the config's `output`, else stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("crowdsim: {msg}");
    ExitCode::from(code)
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    parse_config(path).map_err(|e| fail(EXIT_CONFIG, e))
}

fn run(args: RunArgs, want: Option<Mode>) -> ExitCode {
    let mut config = match load(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(mode) = want {
        if config.mode != mode {
            return fail(
                EXIT_CONFIG,
                format!("config at `mode`: expected {mode}, found {}", config.mode),
            );
        }
    }
    if args.trace.is_some() {
        config.trace = args.trace;
    }
    if args.output.is_some() {
        config.output = args.output;
    }

    let rows = run_experiment(&config);
    let written = match &config.output {
        Some(path) => write_report(&rows, path),
        None => render_report(&rows).and_then(|text| {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| crowdsim::Error::Report(e.to_string()))
        }),
    };
    if let Err(e) = written {
        return fail(EXIT_RUNTIME, e);
    }
    let failed: Vec<_> = rows.iter().filter(|r| !r.aggregate && r.error.is_some()).collect();
    if let Some(first) = failed.first() {
        return fail(
            EXIT_RUNTIME,
            format!(
                "{} of {} runs failed; first: {} seed {}: {}",
                failed.len(),
                rows.iter().filter(|r| !r.aggregate).count(),
                first.point,
                first.base_seed.unwrap_or_default(),
                first.error.as_deref().unwrap_or_default()
            ),
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Evac {
            action: RunAction::Run(args),
        } => run(args, Some(Mode::Evac)),
        Command::Stage {
            action: RunAction::Run(args),
        } => run(args, Some(Mode::Stage)),
        Command::Sweep(args) => run(args, None),
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}", c.to_json());
                eprintln!(
                    "{} points x {} seeds = {} runs",
                    c.points().len(),
                    c.seeds.len(),
                    c.points().len() * c.seeds.len()
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
