//! Batch experiment CLI. Exit codes: 0 success, 1 check failure,
//! 2 configuration error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graphflow::error::Error;
use graphflow::{experiment, run_config};

#[derive(Parser)]
#[command(
    name = "graphflow",
    about = "Mean curvature flow of graphs with transport terms: batch experiment driver"
)]
struct Cli {
    /// Output root directory (default: $GRAPHFLOW_OUTPUT_ROOT or '.')
    #[arg(long, global = true)]
    out_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run configuration.
    Run { config: PathBuf },
    /// Execute every *.toml in a directory and aggregate pass/fail.
    Verify { dir: PathBuf },
    /// Re-run one configuration with a parameter swept over several values.
    Sweep {
        config: PathBuf,
        /// Override as dotted.key=value1,value2,...
        #[arg(long)]
        param: String,
    },
}

fn out_root(cli: &Cli) -> PathBuf {
    cli.out_root
        .clone()
        .or_else(|| std::env::var_os("GRAPHFLOW_OUTPUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::ConfigInvalid(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn print_outcome(outcome: &experiment::RunOutcome) {
    println!("== {} -> {}", outcome.name, outcome.out_dir.display());
    for line in &outcome.lines {
        let status = match line.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        println!("{status} {} {}", line.id, line.detail);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = out_root(&cli);
    match &cli.command {
        Command::Run { config } => {
            let cfg = match run_config::load(config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            match experiment::run_experiment(&cfg, &root) {
                Ok(outcome) => {
                    print_outcome(&outcome);
                    if outcome.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Verify { dir } => match experiment::verify_suite(dir, &root) {
            Ok(suite) => {
                for outcome in &suite.outcomes {
                    print_outcome(outcome);
                }
                for (path, e) in &suite.config_errors {
                    println!("FAIL config {} {e}", path.display());
                }
                if suite.checks_total == 0 && suite.config_errors.is_empty() {
                    println!("WARN 0 criteria checked");
                }
                println!(
                    "== suite: {} checks, {} failed, {} config errors",
                    suite.checks_total,
                    suite.checks_failed,
                    suite.config_errors.len()
                );
                if suite.config_errors.is_empty() && suite.checks_failed == 0 {
                    ExitCode::SUCCESS
                } else if !suite.config_errors.is_empty() {
                    ExitCode::from(2)
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
        Command::Sweep { config, param } => {
            let Some((key, values)) = param.split_once('=') else {
                eprintln!("config error: --param expects key=v1,v2,...");
                return ExitCode::from(2);
            };
            let values: Vec<String> = values.split(',').map(str::to_string).collect();
            let text = match std::fs::read_to_string(config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            match experiment::sweep(&text, key, &values, &root) {
                Ok(outcomes) => {
                    let mut all = true;
                    for outcome in &outcomes {
                        print_outcome(outcome);
                        all &= outcome.all_passed();
                    }
                    if all {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
    }
}
