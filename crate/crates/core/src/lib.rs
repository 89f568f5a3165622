//! Multi-objective, multi-fidelity hyperparameter optimization with MO-DEHB.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`]: typed search spaces and their unit-hypercube encoding.
//! - [`pareto`]: dominance, non-dominated sorting, crowding distance, EpsNet
//!   ordering and 2-D hypervolume.
//! - [`de`]: rand/1 mutation, binomial crossover and multi-objective selection.
//! - [`scheduler`]: fidelity ladders and Hyperband bracket geometry.
//! - [`modehb`]: the optimizer loop and the random-search baseline.
//! - [`benchmarks`]: synthetic multi-fidelity bi-objective problems.
//! - [`metrics`]: normalization, hypervolume trajectories, LogHVDiff and
//!   summary attainment surfaces.

pub mod benchmarks;
pub mod de;
pub mod metrics;
pub mod modehb;
pub mod pareto;
pub mod rng;
pub mod scheduler;
pub mod space;

pub use benchmarks::{Benchmark, BenchmarkError, BenchmarkKind, BenchmarkSpec};
pub use de::{DeError, DeParams, Individual, Victim};
pub use metrics::{HvSeries, MetricsError, ObjectiveBounds, RunMetadata, RunTrajectory};
pub use modehb::{
    tae_budget, EvaluationError, EvaluationRecord, ModehbSettings, Problem, RunError, StopCause,
    StoppingCriteria, Variant,
};
pub use pareto::{ObjectiveVector, ParetoError, RankedPopulation, RankingStrategy};
pub use scheduler::{BracketPlan, FidelityLadder, LadderSpec, ScheduleError};
pub use space::{ParamValue, ParameterSpec, SearchSpace, SpaceError, UnitVector};
