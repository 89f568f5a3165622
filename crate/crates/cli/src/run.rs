//! `run`: execute every (optimizer, seed) pair of an experiment.

use std::fs;
use std::path::{Path, PathBuf};

use modehb::metrics::{empirical_best_hv, log_hv_diff, mean_std};
use modehb::modehb::{run, run_random_search};
use modehb::{MetricsError, ModehbSettings, Problem, RunTrajectory};
use rayon::prelude::*;

use crate::archive::{
    archive_path, metrics_path, run_stem, write_archive, write_json, OptimizerSummary, RunMetrics, Summary,
    RUNS_DIR, SUMMARY_FILE,
};
use crate::config::{Experiment, ExperimentConfig, Optimizer};
use crate::error::CliError;

const STAGING_DIR: &str = ".partial";

/// What a successful `run` produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: Summary,
    pub trajectories: Vec<RunTrajectory>,
}

/// Loads, validates and runs the config at `path`.
pub fn cmd_run(path: &Path) -> Result<RunOutcome, CliError> {
    let config = ExperimentConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let exp = config.validate(base).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    run_experiment(&exp)
}

/// Runs one (optimizer, seed) pair.
pub fn run_single(exp: &Experiment, opt: &Optimizer, seed: u64) -> Result<RunTrajectory, CliError> {
    let result = match opt.name.variant() {
        Some(variant) => run(
            &exp.benchmark,
            &exp.ladder,
            ModehbSettings { variant, de: opt.de },
            exp.stop,
            seed,
        ),
        None => run_random_search(&exp.benchmark, exp.ladder.b_max(), exp.stop, seed),
    };
    result.map_err(|source| CliError::Run {
        run: run_stem(opt.name.as_str(), seed),
        source,
    })
}

/// Runs the experiment and writes its files. Nothing is left behind in
/// `output_dir` if any run fails.
pub fn run_experiment(exp: &Experiment) -> Result<RunOutcome, CliError> {
    let created = !exp.output_dir.exists();
    fs::create_dir_all(&exp.output_dir).map_err(CliError::io(&exp.output_dir))?;
    let staging = exp.output_dir.join(STAGING_DIR);
    let result = stage(exp, &staging).and_then(|outcome| {
        commit(&staging, &exp.output_dir)?;
        Ok(outcome)
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
        if created {
            let _ = fs::remove_dir(&exp.output_dir);
        }
    }
    result
}

fn stage(exp: &Experiment, staging: &Path) -> Result<RunOutcome, CliError> {
    if staging.exists() {
        fs::remove_dir_all(staging).map_err(CliError::io(staging))?;
    }
    let runs_dir = staging.join(RUNS_DIR);
    fs::create_dir_all(&runs_dir).map_err(CliError::io(&runs_dir))?;

    let jobs: Vec<(&Optimizer, u64)> = exp
        .optimizers
        .iter()
        .flat_map(|o| exp.config.seeds.iter().map(move |s| (o, *s)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = exp.config.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    log::info!(
        "running {} jobs (workers: {}) into {}",
        jobs.len(),
        pool.current_num_threads(),
        exp.output_dir.display()
    );
    let results: Vec<Result<RunTrajectory, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(opt, seed)| {
                let trajectory = run_single(exp, opt, *seed)?;
                let stem = run_stem(opt.name.as_str(), *seed);
                write_archive(&archive_path(&runs_dir, &stem), &trajectory.records)?;
                log::info!("{stem}: {} evaluations", trajectory.records.len());
                Ok(trajectory)
            })
            .collect()
    });
    let trajectories = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let bounds = exp.benchmark.objective_bounds();
    let hv_best = match empirical_best_hv(&trajectories, bounds) {
        Ok(hv) => hv,
        Err(MetricsError::EmptyPopulation) => {
            log::warn!("no full-fidelity evaluations in any run; empirical best set to 0");
            0.0
        }
        Err(e) => return Err(e.into()),
    };
    let mut summaries = Vec::new();
    for opt in &exp.optimizers {
        let mut hvs = Vec::new();
        let mut diffs = Vec::new();
        for t in trajectories.iter().filter(|t| t.metadata.optimizer == opt.name.as_str()) {
            let final_hv = t.final_hv(bounds)?;
            let stem = run_stem(&t.metadata.optimizer, t.metadata.seed);
            let metrics = RunMetrics {
                metadata: t.metadata.clone(),
                archive: format!("{stem}.csv"),
                tae: t.records.len() as u64,
                total_cost: t.total_cost(),
                final_hv,
                log_hv_diff: log_hv_diff(final_hv, hv_best),
            };
            write_json(&metrics_path(&runs_dir, &stem), &metrics)?;
            hvs.push(final_hv);
            diffs.push(metrics.log_hv_diff);
        }
        let (final_hv_mean, final_hv_std) = mean_std(&hvs);
        let (log_hv_diff_mean, log_hv_diff_std) = mean_std(&diffs);
        summaries.push(OptimizerSummary {
            name: opt.name.to_string(),
            runs: hvs.len(),
            final_hv_mean,
            final_hv_std,
            log_hv_diff_mean,
            log_hv_diff_std,
        });
    }
    let summary = Summary {
        benchmark: exp.benchmark.name().to_string(),
        objective_bounds: bounds.clone(),
        empirical_best_hv: hv_best,
        true_front_hv: exp.benchmark.true_front_hv(),
        optimizers: summaries,
    };
    write_json(&staging.join(SUMMARY_FILE), &summary)?;
    Ok(RunOutcome {
        output_dir: exp.output_dir.clone(),
        summary,
        trajectories,
    })
}

/// Replaces any previous results in `output_dir` with the staged ones; a
/// report of the previous results is dropped as stale.
fn commit(staging: &Path, output_dir: &Path) -> Result<(), CliError> {
    let stale = output_dir.join(crate::report::REPORT_DIR);
    if stale.is_dir() {
        fs::remove_dir_all(&stale).map_err(CliError::io(&stale))?;
    }
    for name in [RUNS_DIR, SUMMARY_FILE] {
        let target = output_dir.join(name);
        if target.is_dir() {
            fs::remove_dir_all(&target).map_err(CliError::io(&target))?;
        } else if target.exists() {
            fs::remove_file(&target).map_err(CliError::io(&target))?;
        }
        fs::rename(staging.join(name), &target).map_err(CliError::io(&target))?;
    }
    fs::remove_dir(staging).map_err(CliError::io(staging))
}
