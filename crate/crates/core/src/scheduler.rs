//! Successive-halving and Hyperband bracket geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("invalid fidelity ladder: {0}")]
    Ladder(String),
    #[error("bracket index {s} outside 0..={s_max}")]
    Bracket { s: usize, s_max: usize },
}

/// Geometric fidelity levels `b_min * eta^k` up to `b_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderSpec", into = "LadderSpec")]
pub struct FidelityLadder {
    b_min: f64,
    b_max: f64,
    eta: u32,
    levels: Vec<f64>,
}

/// Serialized form of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub b_min: f64,
    pub b_max: f64,
    pub eta: u32,
}

impl TryFrom<LadderSpec> for FidelityLadder {
    type Error = ScheduleError;

    fn try_from(spec: LadderSpec) -> Result<Self, Self::Error> {
        build_ladder(spec.b_min, spec.b_max, spec.eta)
    }
}

impl From<FidelityLadder> for LadderSpec {
    fn from(l: FidelityLadder) -> Self {
        LadderSpec {
            b_min: l.b_min,
            b_max: l.b_max,
            eta: l.eta,
        }
    }
}

/// Builds the ladder; `b_max / b_min` must be an integer power of `eta`
/// (to within 1e-6 relative).
pub fn build_ladder(b_min: f64, b_max: f64, eta: u32) -> Result<FidelityLadder, ScheduleError> {
    if !(b_min > 0.0 && b_min.is_finite()) {
        return Err(ScheduleError::Ladder(format!("b_min must be positive, got {b_min}")));
    }
    if !(b_max >= b_min && b_max.is_finite()) {
        return Err(ScheduleError::Ladder(format!("b_max {b_max} below b_min {b_min}")));
    }
    if eta < 2 {
        return Err(ScheduleError::Ladder(format!("eta must be at least 2, got {eta}")));
    }
    let ratio = b_max / b_min;
    let eta_f = f64::from(eta);
    let s_max = (ratio.ln() / eta_f.ln()).round() as i32;
    if ((ratio / eta_f.powi(s_max)) - 1.0).abs() > 1e-6 {
        return Err(ScheduleError::Ladder(format!(
            "b_max / b_min = {ratio} is not an integer power of {eta}"
        )));
    }
    let mut levels: Vec<f64> = (0..=s_max).map(|k| b_min * eta_f.powi(k)).collect();
    *levels.last_mut().expect("at least one level") = b_max;
    Ok(FidelityLadder {
        b_min,
        b_max,
        eta,
        levels,
    })
}

impl FidelityLadder {
    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn s_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn spec(&self) -> LadderSpec {
        self.clone().into()
    }

    /// Sub-population capacity per level, frozen from the first (largest)
    /// bracket of an iteration.
    pub fn population_sizes(&self) -> Vec<usize> {
        bracket_plan(self, self.s_max())
            .expect("s_max is always a valid bracket")
            .rungs
            .iter()
            .map(|r| r.n_configs)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rung {
    /// Index into [`FidelityLadder::levels`].
    pub level: usize,
    pub fidelity: f64,
    pub n_configs: usize,
}

/// One successive-halving bracket: rungs from its starting fidelity to `b_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketPlan {
    pub s: usize,
    pub rungs: Vec<Rung>,
}

impl BracketPlan {
    /// `(fidelity, n_configs)` per rung.
    pub fn table(&self) -> Vec<(f64, usize)> {
        self.rungs.iter().map(|r| (r.fidelity, r.n_configs)).collect()
    }

    /// Total fidelity spent if every rung is evaluated once.
    pub fn budget(&self) -> f64 {
        self.rungs.iter().map(|r| r.fidelity * r.n_configs as f64).sum()
    }
}

/// Hyperband bracket `s`: starts at level `s_max - s` with
/// `ceil((s_max + 1) eta^s / (s + 1))` configurations and keeps
/// `max(1, floor(n / eta))` at each following rung.
pub fn bracket_plan(ladder: &FidelityLadder, s: usize) -> Result<BracketPlan, ScheduleError> {
    let s_max = ladder.s_max();
    if s > s_max {
        return Err(ScheduleError::Bracket { s, s_max });
    }
    let eta = ladder.eta as usize;
    let mut n = ((s_max + 1) * eta.pow(s as u32)).div_ceil(s + 1);
    let mut rungs = Vec::with_capacity(s + 1);
    for level in (s_max - s)..=s_max {
        rungs.push(Rung {
            level,
            fidelity: ladder.levels[level],
            n_configs: n,
        });
        n = (n / eta).max(1);
    }
    Ok(BracketPlan { s, rungs })
}

/// One DEHB iteration: brackets `s_max` down to `0`.
pub fn dehb_iteration_plan(ladder: &FidelityLadder) -> Vec<BracketPlan> {
    (0..=ladder.s_max())
        .rev()
        .map(|s| bracket_plan(ladder, s).expect("s within range"))
        .collect()
}
