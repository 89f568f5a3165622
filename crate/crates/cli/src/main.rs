use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modehb_cli::{cmd_report, cmd_run, oracle, CliError};

#[derive(Parser)]
#[command(name = "modehb", version, about = "Multi-objective multi-fidelity HPO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (optimizer, seed) pair of an experiment config.
    Run { config: PathBuf },
    /// Write HV, LogHVDiff, attainment and rank CSVs for a finished experiment.
    Report {
        dir: PathBuf,
        /// Attainment orders, e.g. 1,5,9 (default: first, median, ninth decile).
        #[arg(long, value_delimiter = ',')]
        attainment: Option<Vec<usize>>,
    },
    /// Print the true front and its hypervolume; parameters as key=value.
    BenchOracle { name: String, params: Vec<String> },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let outcome = cmd_run(&config)?;
            for o in &outcome.summary.optimizers {
                println!(
                    "{}: log_hv_diff {:.4} ± {:.4} over {} runs",
                    o.name, o.log_hv_diff_mean, o.log_hv_diff_std, o.runs
                );
            }
            println!("results in {}", outcome.output_dir.display());
        }
        Command::Report { dir, attainment } => {
            for path in cmd_report(&dir, attainment.as_deref())? {
                println!("{}", path.display());
            }
        }
        Command::BenchOracle { name, params } => {
            let report = oracle(&name, &params)?;
            modehb_cli::oracle::print_report(&report, &mut io::stdout().lock(), 101)
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
