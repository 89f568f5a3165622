//! Synthetic multi-fidelity bi-objective benchmarks with known Pareto fronts.
//!
//! Low fidelities add a deterministic bias `bias * (1 - b / b_max)` to every
//! objective, so `b_max` evaluations are always the best and cheaper ones are
//! shifted but keep their relative order. The simulated cost of an evaluation
//! is its fidelity, in seconds.
//!
//! Objective bounds are the normalization box used for hypervolume: `[0, 1]^2`
//! for the ZDT problems, which is exactly the box spanned by their true
//! fronts. Dominated ZDT points routinely exceed it and then contribute no
//! hypervolume.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::ObjectiveBounds;
use crate::modehb::{Evaluation, EvaluationError, Problem};
use crate::pareto::{hypervolume, non_dominated_indices};
use crate::rng::substream;
use crate::scheduler::FidelityLadder;
use crate::space::{ParamValue, ParameterSpec, SearchSpace, UnitVector};

/// Seed of the toy grid's second-objective table.
pub const TOY_GRID_SEED: u64 = 0x70F_6121D;

/// Default low-fidelity bias magnitude.
pub const DEFAULT_BIAS: f64 = 0.5;

const TOY_UPPER: f64 = 1.1;

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("toy grid size must lie in 4..=64, got {0}")]
    GridSize(usize),
    #[error("bias must be finite and non-negative, got {0}")]
    Bias(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkKind {
    Zdt1 { dim: usize },
    Zdt2 { dim: usize },
    ToyGrid { k: usize, table: Vec<f64> },
}

/// Benchmark selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Zdt1Mf {
        dimension: usize,
        #[serde(default = "default_bias")]
        bias: f64,
    },
    Zdt2Mf {
        dimension: usize,
        #[serde(default = "default_bias")]
        bias: f64,
    },
    ToyGrid {
        k: usize,
        #[serde(default = "default_bias")]
        bias: f64,
    },
}

fn default_bias() -> f64 {
    DEFAULT_BIAS
}

impl BenchmarkSpec {
    pub fn build(&self, ladder: &FidelityLadder) -> Result<Benchmark, BenchmarkError> {
        match *self {
            BenchmarkSpec::Zdt1Mf { dimension, bias } => zdt1_mf(dimension, ladder)?.with_bias(bias),
            BenchmarkSpec::Zdt2Mf { dimension, bias } => zdt2_mf(dimension, ladder)?.with_bias(bias),
            BenchmarkSpec::ToyGrid { k, bias } => toy_grid(k, ladder)?.with_bias(bias),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    name: &'static str,
    kind: BenchmarkKind,
    space: SearchSpace,
    ladder: FidelityLadder,
    bounds: ObjectiveBounds,
    bias: f64,
}

fn unit_params(d: usize) -> SearchSpace {
    SearchSpace::new(
        (1..=d)
            .map(|i| ParameterSpec::continuous(&format!("x{i}"), 0.0, 1.0, false).expect("valid"))
            .collect(),
    )
    .expect("unique names")
}

/// ZDT1 with a fidelity bias. True front at `b_max`: `f2 = 1 - sqrt(f1)`.
pub fn zdt1_mf(d: usize, ladder: &FidelityLadder) -> Result<Benchmark, BenchmarkError> {
    zdt(d, ladder, "zdt1_mf", BenchmarkKind::Zdt1 { dim: d })
}

/// ZDT2 with a fidelity bias. True front at `b_max`: `f2 = 1 - f1^2`.
pub fn zdt2_mf(d: usize, ladder: &FidelityLadder) -> Result<Benchmark, BenchmarkError> {
    zdt(d, ladder, "zdt2_mf", BenchmarkKind::Zdt2 { dim: d })
}

fn zdt(d: usize, ladder: &FidelityLadder, name: &'static str, kind: BenchmarkKind) -> Result<Benchmark, BenchmarkError> {
    if d < 2 {
        return Err(BenchmarkError::Dimension(d));
    }
    Ok(Benchmark {
        name,
        kind,
        space: unit_params(d),
        ladder: ladder.clone(),
        bounds: ObjectiveBounds::unit(2),
        bias: DEFAULT_BIAS,
    })
}

/// Two categorical parameters of `k` choices each. `f1 = i / (k - 1)` and
/// `f2 = (1 - f1) / 2 + u / 2` with `u` drawn once per cell from the stream
/// seeded by [`TOY_GRID_SEED`].
pub fn toy_grid(k: usize, ladder: &FidelityLadder) -> Result<Benchmark, BenchmarkError> {
    if !(4..=64).contains(&k) {
        return Err(BenchmarkError::GridSize(k));
    }
    let mut rng = substream(TOY_GRID_SEED, "toy_grid");
    let table = (0..k * k)
        .map(|cell| {
            let f1 = (cell / k) as f64 / (k - 1) as f64;
            0.5 * (1.0 - f1) + 0.5 * rng.random::<f64>()
        })
        .collect();
    let labels = || (0..k).map(|i| i.to_string());
    Ok(Benchmark {
        name: "toy_grid",
        kind: BenchmarkKind::ToyGrid { k, table },
        space: SearchSpace::new(vec![
            ParameterSpec::categorical("a", labels()).expect("valid"),
            ParameterSpec::categorical("b", labels()).expect("valid"),
        ])
        .expect("unique names"),
        ladder: ladder.clone(),
        bounds: ObjectiveBounds::new(vec![0.0, 0.0], vec![TOY_UPPER, TOY_UPPER]).expect("valid"),
        bias: DEFAULT_BIAS,
    })
}

impl Benchmark {
    pub fn with_bias(mut self, bias: f64) -> Result<Self, BenchmarkError> {
        if !(bias.is_finite() && bias >= 0.0) {
            return Err(BenchmarkError::Bias(bias));
        }
        self.bias = bias;
        Ok(self)
    }

    pub fn kind(&self) -> &BenchmarkKind {
        &self.kind
    }

    pub fn ladder(&self) -> &FidelityLadder {
        &self.ladder
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn fidelity_bias(&self, fidelity: f64) -> f64 {
        self.bias * (1.0 - (fidelity / self.ladder.b_max()).min(1.0))
    }

    /// Objectives at `b_max`.
    pub fn full_fidelity(&self, x: &UnitVector) -> [f64; 2] {
        let c = x.coords();
        match &self.kind {
            BenchmarkKind::Zdt1 { .. } | BenchmarkKind::Zdt2 { .. } => {
                let f1 = c[0];
                let g = 1.0 + 9.0 * c[1..].iter().sum::<f64>() / (c.len() - 1) as f64;
                let ratio = f1 / g;
                let shape = match self.kind {
                    BenchmarkKind::Zdt1 { .. } => 1.0 - ratio.sqrt(),
                    _ => 1.0 - ratio * ratio,
                };
                [f1, g * shape]
            }
            BenchmarkKind::ToyGrid { k, table } => {
                let config = self.space.decode(x).expect("dimension checked by caller");
                let index = |name| match config.get(name) {
                    Some(ParamValue::Choice { index, .. }) => *index,
                    _ => unreachable!("toy grid parameters are categorical"),
                };
                let (i, j) = (index("a"), index("b"));
                [i as f64 / (*k - 1) as f64, table[i * k + j]]
            }
        }
    }

    /// Every cell of the toy grid as `(i, j, objectives at b_max)`.
    pub fn enumerate_grid(&self) -> Option<Vec<(usize, usize, [f64; 2])>> {
        let BenchmarkKind::ToyGrid { k, table } = &self.kind else {
            return None;
        };
        let k = *k;
        Some(
            (0..k * k)
                .map(|cell| {
                    let (i, j) = (cell / k, cell % k);
                    (i, j, [i as f64 / (k - 1) as f64, table[cell]])
                })
                .collect(),
        )
    }

    /// The true Pareto front at `b_max`: exact for the toy grid, `samples`
    /// evenly spaced points for the ZDT problems. Raw objective values.
    pub fn true_front(&self, samples: usize) -> Vec<[f64; 2]> {
        match &self.kind {
            BenchmarkKind::ToyGrid { .. } => {
                let cells: Vec<[f64; 2]> = self
                    .enumerate_grid()
                    .expect("toy grid")
                    .into_iter()
                    .map(|(_, _, f)| f)
                    .collect();
                non_dominated_indices(&cells).into_iter().map(|i| cells[i]).collect()
            }
            BenchmarkKind::Zdt1 { .. } | BenchmarkKind::Zdt2 { .. } => {
                let n = samples.max(2);
                (0..n)
                    .map(|i| {
                        let f1 = i as f64 / (n - 1) as f64;
                        let f2 = match self.kind {
                            BenchmarkKind::Zdt1 { .. } => 1.0 - f1.sqrt(),
                            _ => 1.0 - f1 * f1,
                        };
                        [f1, f2]
                    })
                    .collect()
            }
        }
    }

    /// Normalized hypervolume of the true front with reference `(1, 1)`:
    /// closed form for the ZDT problems, exact enumeration for the toy grid.
    pub fn true_front_hv(&self) -> f64 {
        match &self.kind {
            BenchmarkKind::Zdt1 { .. } => 2.0 / 3.0,
            BenchmarkKind::Zdt2 { .. } => 1.0 / 3.0,
            BenchmarkKind::ToyGrid { .. } => {
                let front: Vec<Vec<f64>> = self
                    .true_front(0)
                    .iter()
                    .map(|p| self.bounds.scale(p))
                    .collect();
                hypervolume(&front, &[1.0, 1.0]).expect("bi-objective")
            }
        }
    }
}

impl Problem for Benchmark {
    fn name(&self) -> &str {
        self.name
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn objective_bounds(&self) -> &ObjectiveBounds {
        &self.bounds
    }

    fn evaluate(&self, x: &UnitVector, fidelity: f64) -> Result<Evaluation, EvaluationError> {
        if x.dim() != self.space.dim() {
            return Err(EvaluationError::Failed(format!(
                "expected a {}-dimensional configuration, got {}",
                self.space.dim(),
                x.dim()
            )));
        }
        if !(fidelity > 0.0 && fidelity.is_finite()) {
            return Err(EvaluationError::Failed(format!("invalid fidelity {fidelity}")));
        }
        let bias = self.fidelity_bias(fidelity);
        let [f1, f2] = self.full_fidelity(x);
        Ok(Evaluation {
            objectives: vec![f1 + bias, f2 + bias],
            cost: fidelity,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::build_ladder;
    use proptest::prelude::*;

    fn ladder() -> FidelityLadder {
        build_ladder(1.0, 27.0, 3).unwrap()
    }

    fn uv(c: Vec<f64>) -> UnitVector {
        UnitVector::new(c).unwrap()
    }

    #[test]
    fn zdt1_examples() {
        let b = zdt1_mf(6, &ladder()).unwrap();
        assert_eq!(b.evaluate(&uv(vec![0.0; 6]), 27.0).unwrap().objectives, vec![0.0, 1.0]);
        let mut x = vec![0.0; 6];
        x[0] = 1.0;
        assert_eq!(b.evaluate(&uv(x), 27.0).unwrap().objectives, vec![1.0, 0.0]);
        let x = uv(vec![0.3, 0.2, 0.7, 0.1, 0.9, 0.4]);
        let g: f64 = 1.0 + 9.0 * (0.2 + 0.7 + 0.1 + 0.9 + 0.4) / 5.0;
        let f = b.evaluate(&x, 27.0).unwrap().objectives;
        assert_eq!(f[0], 0.3);
        assert!((f[1] - g * (1.0 - (0.3 / g).sqrt())).abs() < 1e-12);
        assert!(zdt1_mf(1, &ladder()).is_err());
    }

    #[test]
    fn zdt2_examples() {
        let b = zdt2_mf(4, &ladder()).unwrap();
        assert_eq!(b.evaluate(&uv(vec![0.0; 4]), 27.0).unwrap().objectives, vec![0.0, 1.0]);
        assert_eq!(
            b.evaluate(&uv(vec![1.0, 0.0, 0.0, 0.0]), 27.0).unwrap().objectives,
            vec![1.0, 0.0]
        );
        let low = b.evaluate(&uv(vec![0.0; 4]), 1.0).unwrap().objectives;
        let bias = 0.5 * (1.0 - 1.0 / 27.0);
        assert_eq!(low, vec![bias, 1.0 + bias]);
    }

    #[test]
    fn toy_grid_enumeration() {
        let b = toy_grid(4, &ladder()).unwrap();
        let cells = b.enumerate_grid().unwrap();
        assert_eq!(cells.len(), 16);
        // Evaluating every cell through the optimizer interface gives the same table.
        for &(i, j, f) in &cells {
            let x = uv(vec![(i as f64 + 0.5) / 4.0, (j as f64 + 0.5) / 4.0]);
            let out = b.evaluate(&x, 27.0).unwrap().objectives;
            assert_eq!(out, f.to_vec());
            assert_eq!(out, b.evaluate(&x, 27.0).unwrap().objectives);
        }
        // Brute-force front: cells no other cell dominates.
        let front = b.true_front(0);
        let brute: Vec<[f64; 2]> = cells
            .iter()
            .map(|c| c.2)
            .filter(|p| !cells.iter().any(|q| q.2[0] <= p[0] && q.2[1] <= p[1] && q.2 != *p))
            .collect();
        assert_eq!(front, brute);
        let hv = b.true_front_hv();
        assert!(hv > 0.0 && hv < 1.0);
        assert_eq!(toy_grid(4, &ladder()).unwrap(), b);
        assert!(toy_grid(3, &ladder()).is_err());
        assert!(toy_grid(65, &ladder()).is_err());
    }

    #[test]
    fn analytic_front_volumes_match_dense_sampling() {
        for (b, expected) in [
            (zdt1_mf(6, &ladder()).unwrap(), 2.0 / 3.0),
            (zdt2_mf(6, &ladder()).unwrap(), 1.0 / 3.0),
        ] {
            assert_eq!(b.true_front_hv(), expected);
            let sampled = hypervolume(&b.true_front(100_000), &[1.0, 1.0]).unwrap();
            assert!((sampled - expected).abs() < 1e-4, "{sampled}");
        }
    }

    #[test]
    fn benchmark_spec_round_trip() {
        let spec: BenchmarkSpec = serde_json::from_str(r#"{"name": "toy_grid", "k": 4}"#).unwrap();
        assert_eq!(spec, BenchmarkSpec::ToyGrid { k: 4, bias: 0.5 });
        assert_eq!(spec.build(&ladder()).unwrap().name(), "toy_grid");
        assert!(serde_json::from_str::<BenchmarkSpec>(r#"{"name": "nope"}"#).is_err());
    }

    proptest! {
        #[test]
        fn bias_is_non_negative_and_vanishes_at_b_max(x in prop::collection::vec(0.0f64..=1.0, 6), level in 0usize..3) {
            let l = ladder();
            for b in [zdt1_mf(6, &l).unwrap(), zdt2_mf(6, &l).unwrap()] {
                let x = uv(x.clone());
                let full = b.evaluate(&x, 27.0).unwrap().objectives;
                prop_assert_eq!(full.clone(), b.full_fidelity(&x).to_vec());
                let low = b.evaluate(&x, l.levels()[level]).unwrap().objectives;
                prop_assert!(full.iter().zip(&low).all(|(f, l)| f <= l));
                prop_assert!(low.iter().all(|v| *v >= 0.0));
            }
            let toy = toy_grid(4, &l).unwrap();
            let y = uv(x[..2].to_vec());
            let full = toy.evaluate(&y, 27.0).unwrap().objectives;
            prop_assert!(full.iter().all(|v| (0.0..TOY_UPPER).contains(v)));
            let low = toy.evaluate(&y, l.levels()[level]).unwrap().objectives;
            prop_assert!(full.iter().zip(&low).all(|(f, l)| f <= l));
        }
    }
}
