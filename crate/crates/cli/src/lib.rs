//! Experiment harness for MO-DEHB: run seeded repetitions from a JSON config,
//! persist archives and metrics, and turn finished runs into plot-ready CSVs.

pub mod archive;
pub mod config;
pub mod error;
pub mod oracle;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig, OptimizerName};
pub use error::CliError;
pub use oracle::{oracle, OracleReport};
pub use report::cmd_report;
pub use run::{cmd_run, run_experiment, RunOutcome};
