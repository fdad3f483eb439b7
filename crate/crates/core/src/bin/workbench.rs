use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cstar_workbench::error::Error;
use cstar_workbench::scenario::{bundled_scenarios, emit_report, run_scenario, Format, RunReport, Scenario};

/// Runs executable checks on finite-dimensional C*-algebras.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Override the seed of every scenario run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format: json or markdown.
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the decision tolerance (`params.tol`) of every scenario run.
    #[arg(long, global = true)]
    tol_override: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { file: PathBuf },
    /// Run every bundled scenario.
    Suite,
    /// List the bundled scenarios.
    List,
}

fn apply_overrides(mut s: Scenario, cli: &Cli) -> Scenario {
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(tol) = cli.tol_override {
        s.params.tol = Some(tol);
    }
    s
}

fn config_error(e: Error) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenarios = match &cli.command {
        Command::List => {
            return match bundled_scenarios() {
                Ok(all) => {
                    let mut out = std::io::stdout().lock();
                    for s in all {
                        // a closed pipe (e.g. `| head`) is not an error worth reporting
                        if writeln!(out, "{:36} {:28} {}", s.name, s.checker, s.claim).is_err() {
                            break;
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => config_error(e),
            };
        }
        Command::Run { file } => match Scenario::from_file(file) {
            Ok(s) => vec![s],
            Err(Error::Io(e)) => return config_error(Error::Config(format!("{}: {e}", file.display()))),
            Err(e) => return config_error(e),
        },
        Command::Suite => match bundled_scenarios() {
            Ok(all) => all,
            Err(e) => return config_error(e),
        },
    };
    let reports: Vec<RunReport> = scenarios
        .into_iter()
        .map(|s| run_scenario(&apply_overrides(s, &cli)))
        .collect();
    for r in &reports {
        if let Some(e) = &r.error {
            eprintln!("{}: {}", r.scenario.name, e.message);
        }
    }
    if let Err(e) = emit_report(&reports, cli.format, cli.out.as_deref()) {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(2);
    }
    let code = reports.iter().map(RunReport::exit_code).max().unwrap_or(0);
    ExitCode::from(code as u8)
}
