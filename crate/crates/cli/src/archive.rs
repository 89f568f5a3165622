//! Run files: the archive CSV and the per-run metrics JSON.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use modehb::{EvaluationRecord, ObjectiveBounds, ObjectiveVector, RunMetadata, RunTrajectory, UnitVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const RUNS_DIR: &str = "runs";
pub const SUMMARY_FILE: &str = "summary.json";
const METRICS_SUFFIX: &str = ".metrics.json";

/// File stem shared by a run's archive and metrics files.
pub fn run_stem(optimizer: &str, seed: u64) -> String {
    format!("{optimizer}_seed{seed}")
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes the archive CSV: `seq, fidelity, cost_seconds, cumulative_cost,
/// objective_1..n, genotype_1..d`.
pub fn write_archive(path: &Path, records: &[EvaluationRecord]) -> Result<(), CliError> {
    let n_obj = records.first().map_or(2, |r| r.objectives.len());
    let dim = records.first().map_or(0, |r| r.genotype.dim());
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    let mut header = vec!["seq".to_string(), "fidelity".into(), "cost_seconds".into(), "cumulative_cost".into()];
    header.extend((1..=n_obj).map(|i| format!("objective_{i}")));
    header.extend((1..=dim).map(|i| format!("genotype_{i}")));
    w.write_record(&header).map_err(|e| CliError::format(path, e))?;
    let mut cumulative = 0.0;
    for r in records {
        cumulative += r.cost;
        let mut row = vec![r.seq.to_string(), fmt_f64(r.fidelity), fmt_f64(r.cost), fmt_f64(cumulative)];
        row.extend(r.objectives.values().iter().map(|v| fmt_f64(*v)));
        row.extend(r.genotype.coords().iter().map(|v| fmt_f64(*v)));
        w.write_record(&row).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_archive(path: &Path) -> Result<Vec<EvaluationRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e))?;
    let header = r.headers().map_err(|e| CliError::format(path, e))?.clone();
    let n_obj = header.iter().filter(|h| h.starts_with("objective_")).count();
    let dim = header.iter().filter(|h| h.starts_with("genotype_")).count();
    if header.len() != 4 + n_obj + dim || &header[0] != "seq" {
        return Err(CliError::format(path, "unexpected archive header"));
    }
    let mut records = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| CliError::format(path, e))?;
        let bad = |what: &str| CliError::format(path, format!("row {}: invalid {what}", line + 2));
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| bad(&header[i]));
        let floats = |range: std::ops::Range<usize>| range.map(num).collect::<Result<Vec<f64>, _>>();
        records.push(EvaluationRecord {
            seq: row[0].parse().map_err(|_| bad("seq"))?,
            fidelity: num(1)?,
            cost: num(2)?,
            objectives: ObjectiveVector::new(floats(4..4 + n_obj)?).map_err(|_| bad("objectives"))?,
            genotype: UnitVector::new(floats(4 + n_obj..4 + n_obj + dim)?).map_err(|_| bad("genotype"))?,
        });
    }
    Ok(records)
}

/// Per-run metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub metadata: RunMetadata,
    pub archive: String,
    pub tae: u64,
    pub total_cost: f64,
    pub final_hv: f64,
    /// Against the experiment-wide empirical best.
    pub log_hv_diff: f64,
}

/// Experiment-level summary in mean ± std form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub benchmark: String,
    pub objective_bounds: ObjectiveBounds,
    pub empirical_best_hv: f64,
    pub true_front_hv: f64,
    pub optimizers: Vec<OptimizerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub name: String,
    pub runs: usize,
    pub final_hv_mean: f64,
    pub final_hv_std: f64,
    pub log_hv_diff_mean: f64,
    pub log_hv_diff_std: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}

/// A run loaded back from disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub metrics: RunMetrics,
    pub trajectory: RunTrajectory,
}

/// Loads every run under `dir/runs`, ordered by file name.
pub fn load_runs(dir: &Path) -> Result<Vec<StoredRun>, CliError> {
    let runs_dir = dir.join(RUNS_DIR);
    let mut paths: Vec<PathBuf> = match fs::read_dir(&runs_dir) {
        Ok(entries) => entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.to_string_lossy().ends_with(METRICS_SUFFIX))
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let metrics: RunMetrics = read_json(&p)?;
            let records = read_archive(&runs_dir.join(&metrics.archive))?;
            if records.len() as u64 != metrics.tae {
                return Err(CliError::format(&p, "archive length disagrees with tae"));
            }
            let trajectory = RunTrajectory {
                records,
                metadata: metrics.metadata.clone(),
            };
            Ok(StoredRun { metrics, trajectory })
        })
        .collect()
}

pub fn metrics_path(runs_dir: &Path, stem: &str) -> PathBuf {
    runs_dir.join(format!("{stem}{METRICS_SUFFIX}"))
}

pub fn archive_path(runs_dir: &Path, stem: &str) -> PathBuf {
    runs_dir.join(format!("{stem}.csv"))
}
