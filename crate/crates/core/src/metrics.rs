//! Post-hoc evaluation of optimizer runs.
//!
//! Only evaluations at the maximum fidelity enter a run's Pareto front
//! approximation; lower-fidelity observations are biased by construction.
//! Hypervolumes are computed on objectives normalized by the benchmark's
//! declared bounds with reference point `(1, 1)`. Points outside that box
//! contribute no volume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modehb::{EvaluationRecord, StopCause};
use crate::pareto::{hypervolume, ParetoError};
use crate::scheduler::LadderSpec;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("degenerate normalization bounds: {0}")]
    Normalization(String),
    #[error("no maximum-fidelity observations to build a front from")]
    EmptyPopulation,
    #[error("{0}")]
    OutOfRange(String),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

/// Per-objective `(min, max)` used to map objectives onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ObjectiveBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MetricsError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(MetricsError::Normalization(format!(
                "{} lower vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(MetricsError::Normalization(format!(
                    "objective {i}: min {lo} must be below max {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Unit bounds for `n` objectives.
    pub fn unit(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// The affine map `(v - min) / (max - min)` without clamping.
    pub fn scale(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect()
    }

    /// Normalizes into `[0, 1]^n`, clamping out-of-bounds values with a warning.
    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>, MetricsError> {
        if v.len() != self.len() {
            return Err(ParetoError::Dimension {
                expected: self.len(),
                actual: v.len(),
            }
            .into());
        }
        Ok(self
            .scale(v)
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                if !(0.0..=1.0).contains(&x) {
                    log::warn!("objective {i} value {} outside bounds, clamped", v[i]);
                }
                x.clamp(0.0, 1.0)
            })
            .collect())
    }
}

/// Identifying information of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub optimizer: String,
    pub benchmark: String,
    /// `None` for optimizers that evaluate only at `b_max`.
    pub ladder: Option<LadderSpec>,
    pub b_max: f64,
    pub stop_cause: StopCause,
}

/// A run's evaluations in sequence order plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrajectory {
    pub records: Vec<EvaluationRecord>,
    pub metadata: RunMetadata,
}

impl RunTrajectory {
    fn at_max_fidelity(&self) -> impl Iterator<Item = &EvaluationRecord> {
        let b_max = self.metadata.b_max;
        self.records
            .iter()
            .filter(move |r| (r.fidelity - b_max).abs() <= 1e-9 * b_max.abs().max(1.0))
    }

    /// Normalized objectives of every maximum-fidelity evaluation.
    pub fn front_points(&self, bounds: &ObjectiveBounds) -> Vec<Vec<f64>> {
        self.at_max_fidelity()
            .map(|r| bounds.scale(r.objectives.values()))
            .collect()
    }

    /// Hypervolume of the whole run.
    pub fn final_hv(&self, bounds: &ObjectiveBounds) -> Result<f64, MetricsError> {
        Ok(hypervolume(&self.front_points(bounds), &[1.0, 1.0])?)
    }

    pub fn total_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvPoint {
    pub cumulative_cost: f64,
    pub tae: u64,
    pub hv: f64,
}

/// Hypervolume after every evaluation of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HvSeries {
    pub points: Vec<HvPoint>,
}

impl HvSeries {
    /// Hypervolume reached by cumulative cost `t` (0 before the first point).
    pub fn hv_at(&self, t: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.cumulative_cost <= t);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].hv
        }
    }

    pub fn final_hv(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.hv)
    }
}

/// Hypervolume of the maximum-fidelity archive prefix after each record.
pub fn hv_trajectory(run: &RunTrajectory, bounds: &ObjectiveBounds) -> Result<HvSeries, MetricsError> {
    if bounds.len() != 2 {
        return Err(ParetoError::UnsupportedDimension(bounds.len()).into());
    }
    let b_max = run.metadata.b_max;
    let mut front: Vec<[f64; 2]> = Vec::new();
    let mut hv = 0.0;
    let mut cumulative_cost = 0.0;
    let mut points = Vec::with_capacity(run.records.len());
    for (i, record) in run.records.iter().enumerate() {
        cumulative_cost += record.cost;
        if (record.fidelity - b_max).abs() <= 1e-9 * b_max.abs().max(1.0) {
            let s = bounds.scale(record.objectives.values());
            let p = [s[0], s[1]];
            let inside = p[0] < 1.0 && p[1] < 1.0;
            let covered = front.iter().any(|q| q[0] <= p[0] && q[1] <= p[1]);
            if inside && !covered {
                front.retain(|q| !(p[0] <= q[0] && p[1] <= q[1]));
                front.push(p);
                hv = hypervolume(&front, &[1.0, 1.0])?;
            }
        }
        points.push(HvPoint {
            cumulative_cost,
            tae: i as u64 + 1,
            hv,
        });
    }
    Ok(HvSeries { points })
}

const LOG_FLOOR: f64 = 1e-12;

/// `log10(hv_best - hv)`, floored at `log10(1e-12) = -12`.
pub fn log_hv_diff(hv: f64, hv_best: f64) -> f64 {
    (hv_best - hv).max(LOG_FLOOR).log10()
}

/// Hypervolume of the union of all maximum-fidelity observations.
pub fn empirical_best_hv(runs: &[RunTrajectory], bounds: &ObjectiveBounds) -> Result<f64, MetricsError> {
    let union: Vec<Vec<f64>> = runs.iter().flat_map(|r| r.front_points(bounds)).collect();
    if union.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    Ok(hypervolume(&union, &[1.0, 1.0])?)
}

/// The k-th summary attainment surface of a set of 2-D fronts, stored as the
/// minimal points of the region attained by at least `k` runs, by ascending
/// first objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AttainmentSurface {
    pub vertices: Vec<[f64; 2]>,
}

impl AttainmentSurface {
    /// True iff `z` is weakly dominated by a vertex, i.e. lies in the
    /// attained region.
    pub fn attains(&self, z: [f64; 2]) -> bool {
        self.vertices.iter().any(|v| v[0] <= z[0] && v[1] <= z[1])
    }

    /// The staircase through the vertices, including inner corners.
    pub fn staircase(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.vertices.len() * 2);
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                out.push([v[0], self.vertices[i - 1][1]]);
            }
            out.push(*v);
        }
        out
    }
}

/// k-th summary attainment surface of the normalized maximum-fidelity fronts.
pub fn attainment_surface(
    runs: &[RunTrajectory],
    k: usize,
    bounds: &ObjectiveBounds,
) -> Result<AttainmentSurface, MetricsError> {
    let fronts: Vec<Vec<Vec<f64>>> = runs.iter().map(|r| r.front_points(bounds)).collect();
    attainment_from_fronts(&fronts, k)
}

/// [`attainment_surface`] over explicit 2-D point sets.
pub fn attainment_from_fronts<P: AsRef<[f64]>>(
    fronts: &[Vec<P>],
    k: usize,
) -> Result<AttainmentSurface, MetricsError> {
    if k == 0 || k > fronts.len() {
        return Err(MetricsError::OutOfRange(format!(
            "attainment order {k} outside 1..={}",
            fronts.len()
        )));
    }
    for p in fronts.iter().flatten() {
        if p.as_ref().len() != 2 {
            return Err(ParetoError::UnsupportedDimension(p.as_ref().len()).into());
        }
    }
    let mut xs: Vec<f64> = fronts.iter().flatten().map(|p| p.as_ref()[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut vertices = Vec::new();
    let mut prev = f64::INFINITY;
    let mut best_per_run = vec![f64::INFINITY; fronts.len()];
    for &x in &xs {
        // Lowest second objective each run attains at first objective <= x.
        for (run, front) in fronts.iter().enumerate() {
            for p in front {
                let p = p.as_ref();
                if p[0] == x && p[1] < best_per_run[run] {
                    best_per_run[run] = p[1];
                }
            }
        }
        let mut sorted = best_per_run.clone();
        sorted.sort_by(f64::total_cmp);
        let level = sorted[k - 1];
        if level < prev {
            vertices.push([x, level]);
            prev = level;
        }
    }
    Ok(AttainmentSurface { vertices })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Competition ranks where larger values are better (rank 1); tied values
/// share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// `n` log-spaced points from `first` to `last` inclusive.
pub fn log_time_grid(first: f64, last: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 || first >= last {
        return vec![last; n];
    }
    let (lo, hi) = (first.ln(), last.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                last
            } else {
                (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
