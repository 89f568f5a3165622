//! `bench-oracle`: brute-force ground truth for the synthetic benchmarks.

use std::collections::BTreeMap;
use std::io::Write;

use modehb::benchmarks::{toy_grid, zdt1_mf, zdt2_mf};
use modehb::pareto::hypervolume;
use modehb::scheduler::build_ladder;
use modehb::{Benchmark, Problem};

use crate::archive::fmt_f64;
use crate::error::CliError;

pub const DEFAULT_SAMPLES: usize = 100_000;

/// Ground truth for one benchmark, in normalized objective space.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub benchmark: String,
    /// Toy grid only: every cell `(i, j, f1, f2)`.
    pub cells: Vec<(usize, usize, [f64; 2])>,
    /// The true front, raw objectives.
    pub front: Vec<[f64; 2]>,
    /// HV of `front` computed by the sweep.
    pub hv: f64,
    /// Closed-form or exact value.
    pub true_front_hv: f64,
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    params
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| CliError::Config(format!("parameter {p:?} is not key=value")))
        })
        .collect()
}

fn take_usize(params: &mut BTreeMap<String, String>, key: &str, default: usize) -> Result<usize, CliError> {
    match params.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("{key}={v}: expected a non-negative integer"))),
    }
}

/// Builds the oracle report for `name` with `key=value` parameters:
/// `k` for toy_grid, `dimension` and `samples` for the ZDT problems.
pub fn oracle(name: &str, params: &[String]) -> Result<OracleReport, CliError> {
    let mut params = parse_params(params)?;
    // Only the b_max evaluation matters here.
    let ladder = build_ladder(1.0, 1.0, 2).expect("valid ladder");
    let bad = |e: modehb::BenchmarkError| CliError::Config(e.to_string());
    let report = match name {
        "toy_grid" => {
            let k = take_usize(&mut params, "k", 4)?;
            let b = toy_grid(k, &ladder).map_err(bad)?;
            let front = b.true_front(0);
            OracleReport {
                benchmark: name.to_string(),
                cells: b.enumerate_grid().expect("toy grid"),
                hv: normalized_hv(&b, &front),
                front,
                true_front_hv: b.true_front_hv(),
            }
        }
        "zdt1_mf" | "zdt2_mf" => {
            let d = take_usize(&mut params, "dimension", 6)?;
            let samples = take_usize(&mut params, "samples", DEFAULT_SAMPLES)?;
            let b = if name == "zdt1_mf" { zdt1_mf(d, &ladder) } else { zdt2_mf(d, &ladder) }.map_err(bad)?;
            let front = b.true_front(samples);
            OracleReport {
                benchmark: name.to_string(),
                cells: Vec::new(),
                hv: normalized_hv(&b, &front),
                front,
                true_front_hv: b.true_front_hv(),
            }
        }
        other => return Err(CliError::Unsupported(other.to_string())),
    };
    if let Some(key) = params.keys().next() {
        return Err(CliError::Config(format!("unknown parameter {key:?} for {name}")));
    }
    Ok(report)
}

fn normalized_hv(b: &Benchmark, front: &[[f64; 2]]) -> f64 {
    let scaled: Vec<Vec<f64>> = front.iter().map(|p| b.objective_bounds().scale(p)).collect();
    hypervolume(&scaled, &[1.0, 1.0]).expect("bi-objective")
}

/// Prints the report. Dense ZDT fronts are thinned to `max_rows` rows.
pub fn print_report(report: &OracleReport, out: &mut dyn Write, max_rows: usize) -> std::io::Result<()> {
    writeln!(out, "# {}", report.benchmark)?;
    if !report.cells.is_empty() {
        writeln!(out, "# cells")?;
        writeln!(out, "i,j,f1,f2")?;
        for (i, j, f) in &report.cells {
            writeln!(out, "{i},{j},{},{}", fmt_f64(f[0]), fmt_f64(f[1]))?;
        }
    }
    writeln!(out, "# front ({} points)", report.front.len())?;
    writeln!(out, "f1,f2")?;
    let step = report.front.len().div_ceil(max_rows.max(1)).max(1);
    for (idx, p) in report.front.iter().enumerate() {
        if idx % step == 0 || idx + 1 == report.front.len() {
            writeln!(out, "{},{}", fmt_f64(p[0]), fmt_f64(p[1]))?;
        }
    }
    writeln!(out, "hv {}", fmt_f64(report.hv))?;
    writeln!(out, "true_front_hv {}", fmt_f64(report.true_front_hv))
}
