use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doalab::{emit_csv, run_sweep, CliError, RunOptions, SweepSpec};
use doalab_core::{Evaluator, ScenarioConfig};

#[derive(Parser)]
#[command(name = "doalab", version, about = "Direction-of-arrival estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write one CSV row per (value, method).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Run trials on one thread (cleaner timings).
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        evaluator: Option<Evaluator>,
        /// Emulate an eigendecomposition per G-iMUSIC iteration.
        #[arg(long)]
        evd_per_iter: bool,
    },
    /// Run every method on one random scenario and print the result.
    Demo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            trials,
            serial,
            evaluator,
            evd_per_iter,
        } => {
            let spec = SweepSpec::load(&config)?;
            let options = RunOptions {
                seed,
                trials,
                evaluator,
                serial,
                evd_per_iter,
                threads: None,
            };
            let result = run_sweep(&spec, &options)?;
            for row in result.rows.iter().filter(|r| r.warning) {
                eprintln!(
                    "warning: {} at {}={} failed {} of {} trials",
                    row.method, row.sweep_param, row.sweep_value, row.failures, row.trials
                );
            }
            emit_csv(&result.rows, &out)?;
            eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
            Ok(())
        }
        Command::Demo { seed } => {
            print!("{}", doalab::demo::demo_report(ScenarioConfig::default(), seed)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("doalab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
