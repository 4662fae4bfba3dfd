//! `qbm`: run scenario files and summarize their results.
//!
//! Exit status: 0 success, 1 a tolerance check failed, 2 configuration
//! error, 3 numerical abort, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbm::scenario::{exit_code, run_scenario, Report, ScenarioConfig};
use qbm::Error;

#[derive(Parser, Debug)]
#[command(name = "qbm", version, about = "Damped quantum oscillator phase-space simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute every [[run]] of a scenario file.
    Run {
        config: PathBuf,
        /// Override a configuration value, e.g. `thermal.kt=5` or `run.0.t_final=2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Random seed for Monte Carlo comparisons (overrides the file).
        #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "qbm-out")]
        out: PathBuf,
    },
    /// Summarize the manifests in a directory and its subdirectories.
    Report { dir: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides, seed, out } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                // an unreadable config is a configuration problem
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let mut overrides = overrides;
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            let cfg = match ScenarioConfig::parse_with_overrides(&text, &overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match run_scenario(&cfg, &out, env!("CARGO_PKG_VERSION")) {
                Ok(outcome) => {
                    for r in &outcome.manifest.runs {
                        match &r.error {
                            Some(e) => eprintln!("{} {}: error: {e}", r.status(), r.name),
                            None => eprintln!("{} {}: {}", r.status(), r.name, r.summary),
                        }
                    }
                    ExitCode::from(outcome.exit_status() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Report { dir } => match Report::collect(&dir) {
            Ok(report) => {
                print!("{}", report.render());
                if report.any_failed() {
                    ExitCode::from(1)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => fail(&e),
        },
    }
}
