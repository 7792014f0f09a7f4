use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conic_scatter::error::Error;
use conic_scatter::geometry::list_metrics;
use conic_scatter::harness::{run_scenario, Outcome, RunOptions, Scenario, EXPERIMENT_KINDS};

const EXIT_NUMERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "conic-scatter", version, about = "Scattering experiments on asymptotically conic ends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
    /// Print the builtin metrics and experiment kinds.
    ListMetrics,
}

fn load(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListMetrics => {
            for (name, desc) in list_metrics() {
                println!("{name:<10} {desc}");
            }
            println!();
            println!("experiment kinds: {}", EXPERIMENT_KINDS.join(", "));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config).and_then(|s| s.validate().map(|_| s)) {
            Ok(s) => {
                println!("{}: valid {} scenario", s.name, s.experiment.kind());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { config, out, seed, threads } => {
            if threads == 0 {
                return fail(Error::Config("--threads must be at least 1".into()));
            }
            let scenario = match load(&config) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match run_scenario(&scenario, &RunOptions { out, seed, threads }) {
                Ok(summary) => {
                    println!("{} [{}]: {}", scenario.name, summary.kind, summary.line);
                    for a in &summary.artifacts {
                        println!("  wrote {}", a.display());
                    }
                    match summary.outcome {
                        Outcome::Ok => ExitCode::SUCCESS,
                        Outcome::Inconclusive => ExitCode::from(EXIT_INCONCLUSIVE),
                        Outcome::Failed => ExitCode::from(EXIT_NUMERIC),
                    }
                }
                Err(e) => fail(e),
            }
        }
    }
}
