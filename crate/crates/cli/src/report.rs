//! `report`: plot-ready series from a finished experiment directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use modehb::metrics::{
    attainment_surface, average_ranks, empirical_best_hv, hv_trajectory, log_hv_diff, log_time_grid, mean_std,
};
use modehb::{HvSeries, MetricsError, ObjectiveBounds, RunTrajectory};

use crate::archive::{fmt_f64, load_runs, read_json, Summary, SUMMARY_FILE};
use crate::error::CliError;

pub const REPORT_DIR: &str = "report";
pub const GRID_POINTS: usize = 100;

/// Default attainment orders for `n` runs: first, median and ninth decile.
pub fn default_orders(n: usize) -> Vec<usize> {
    let mut ks = vec![1, n.div_ceil(2), (9 * n).div_ceil(10)];
    ks.dedup();
    ks
}

struct OptimizerRuns {
    seeds: Vec<u64>,
    runs: Vec<RunTrajectory>,
    series: Vec<HvSeries>,
}

/// Writes the report files into `dir/report` and returns their paths.
pub fn cmd_report(dir: &Path, attainment: Option<&[usize]>) -> Result<Vec<PathBuf>, CliError> {
    let summary_path = dir.join(SUMMARY_FILE);
    if !summary_path.exists() {
        return Err(CliError::NoRuns(dir.to_path_buf()));
    }
    let summary: Summary = read_json(&summary_path)?;
    let bounds = ObjectiveBounds::new(
        summary.objective_bounds.lower().to_vec(),
        summary.objective_bounds.upper().to_vec(),
    )?;
    let stored = load_runs(dir)?;
    if stored.is_empty() {
        return Err(CliError::NoRuns(dir.to_path_buf()));
    }

    let mut by_optimizer: BTreeMap<String, OptimizerRuns> = BTreeMap::new();
    for run in stored {
        let t = run.trajectory;
        let entry = by_optimizer.entry(t.metadata.optimizer.clone()).or_insert(OptimizerRuns {
            seeds: Vec::new(),
            runs: Vec::new(),
            series: Vec::new(),
        });
        entry.series.push(hv_trajectory(&t, &bounds)?);
        entry.seeds.push(t.metadata.seed);
        entry.runs.push(t);
    }
    for (name, o) in &by_optimizer {
        for &k in attainment.unwrap_or(&[]) {
            if k == 0 || k > o.runs.len() {
                return Err(CliError::Config(format!(
                    "--attainment {k}: {name} has {} runs",
                    o.runs.len()
                )));
            }
        }
    }

    let all_runs: Vec<RunTrajectory> = by_optimizer.values().flat_map(|o| o.runs.iter().cloned()).collect();
    let hv_best = match empirical_best_hv(&all_runs, &bounds) {
        Ok(hv) => hv,
        Err(MetricsError::EmptyPopulation) => 0.0,
        Err(e) => return Err(e.into()),
    };
    let series: Vec<&HvSeries> = by_optimizer.values().flat_map(|o| o.series.iter()).collect();
    let first = series
        .iter()
        .filter_map(|s| s.points.iter().map(|p| p.cumulative_cost).find(|c| *c > 0.0))
        .fold(f64::INFINITY, f64::min);
    let last = series
        .iter()
        .filter_map(|s| s.points.last().map(|p| p.cumulative_cost))
        .fold(0.0, f64::max);
    if !first.is_finite() {
        return Err(CliError::format(dir, "runs report no positive cost"));
    }
    let grid = log_time_grid(first, last, GRID_POINTS);

    let out = dir.join(REPORT_DIR);
    fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    let mut written = Vec::new();
    for (name, o) in &by_optimizer {
        let hv: Vec<Vec<f64>> = o.series.iter().map(|s| grid.iter().map(|t| s.hv_at(*t)).collect()).collect();
        let diff: Vec<Vec<f64>> = hv
            .iter()
            .map(|col| col.iter().map(|h| log_hv_diff(*h, hv_best)).collect())
            .collect();
        for (kind, columns) in [("hv", &hv), ("log_hv_diff", &diff)] {
            let path = out.join(format!("{kind}_{name}.csv"));
            write_series(&path, &grid, &o.seeds, columns)?;
            written.push(path);
        }
        let ks = attainment.map_or_else(|| default_orders(o.runs.len()), <[usize]>::to_vec);
        for k in ks {
            let surface = attainment_surface(&o.runs, k, &bounds)?;
            let path = out.join(format!("attainment_{name}_k{k}.csv"));
            let rows = surface.staircase().into_iter().map(|v| vec![fmt_f64(v[0]), fmt_f64(v[1])]);
            write_csv(&path, &["f1", "f2"], rows)?;
            written.push(path);
        }
    }

    let path = out.join("ranks.csv");
    let names: Vec<&String> = by_optimizer.keys().collect();
    let ranks = rank_over_time(&by_optimizer, &grid);
    let mut header = vec!["time"];
    header.extend(names.iter().map(|n| n.as_str()));
    let rows = grid.iter().enumerate().map(|(g, t)| {
        let mut row = vec![fmt_f64(*t)];
        row.extend(ranks[g].iter().map(|r| fmt_f64(*r)));
        row
    });
    write_csv(&path, &header, rows)?;
    written.push(path);
    Ok(written)
}

/// Mean rank of each optimizer per grid point. Ranks are computed per seed
/// among the optimizers that ran it; seeds shared by fewer than all
/// optimizers are skipped.
fn rank_over_time(by_optimizer: &BTreeMap<String, OptimizerRuns>, grid: &[f64]) -> Vec<Vec<f64>> {
    let opts: Vec<&OptimizerRuns> = by_optimizer.values().collect();
    let shared: Vec<u64> = opts[0]
        .seeds
        .iter()
        .copied()
        .filter(|s| opts.iter().all(|o| o.seeds.contains(s)))
        .collect();
    grid.iter()
        .map(|t| {
            let mut totals = vec![0.0; opts.len()];
            for seed in &shared {
                let values: Vec<f64> = opts
                    .iter()
                    .map(|o| {
                        let i = o.seeds.iter().position(|s| s == seed).expect("shared seed");
                        o.series[i].hv_at(*t)
                    })
                    .collect();
                for (total, r) in totals.iter_mut().zip(average_ranks(&values)) {
                    *total += r;
                }
            }
            let n = shared.len().max(1) as f64;
            totals.into_iter().map(|r| if shared.is_empty() { f64::NAN } else { r / n }).collect()
        })
        .collect()
}

fn write_series(path: &Path, grid: &[f64], seeds: &[u64], columns: &[Vec<f64>]) -> Result<(), CliError> {
    let mut header = vec!["time".to_string()];
    header.extend(seeds.iter().map(|s| format!("seed_{s}")));
    header.extend(["mean".to_string(), "std".to_string()]);
    let rows = grid.iter().enumerate().map(|(g, t)| {
        let values: Vec<f64> = columns.iter().map(|c| c[g]).collect();
        let (mean, std) = mean_std(&values);
        let mut row = vec![fmt_f64(*t)];
        row.extend(values.iter().map(|v| fmt_f64(*v)));
        row.extend([fmt_f64(mean), fmt_f64(std)]);
        row
    });
    write_csv(path, &header, rows)
}

fn write_csv<H, I>(path: &Path, header: &[H], rows: I) -> Result<(), CliError>
where
    H: AsRef<[u8]>,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    w.write_record(header).map_err(|e| CliError::format(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}
