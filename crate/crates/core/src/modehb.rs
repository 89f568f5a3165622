//! The MO-DEHB optimizer and the random-search baseline.
//!
//! Each fidelity level owns a sub-population whose capacity is fixed by the
//! first bracket of the Hyperband iteration. The very first bracket runs plain
//! successive halving to fill every sub-population. Every later rung evolves
//! its sub-population in place: each member in turn is the target of a rand/1
//! mutation drawn from the rung's parent pool, the offspring is evaluated at
//! the rung's fidelity, and [`mo_selection`] decides which member (if any)
//! the offspring replaces.
//!
//! A rung's parent pool is its own sub-population when the rung starts a
//! bracket, and otherwise the configurations promoted from the rung below by
//! non-dominated sorting plus crowding distance or EpsNet. Pools with fewer
//! than three members are topped up from the global population.

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::de::{crossover_binomial, mo_selection, mutate_rand1, Contender, DeError, DeParams, Individual, Victim};
use crate::metrics::{ObjectiveBounds, RunMetadata, RunTrajectory};
use crate::pareto::{rank_and_truncate, ObjectiveVector, ParetoError, RankingStrategy};
use crate::rng::{substream, Stream};
use crate::scheduler::{dehb_iteration_plan, BracketPlan, FidelityLadder};
use crate::space::{SearchSpace, SpaceError, UnitVector};

/// Target-algorithm-execution budget `ceil(20 + 80 sqrt(num_hps))`.
pub fn tae_budget(num_hps: usize) -> u64 {
    (20.0 + 80.0 * (num_hps as f64).sqrt()).ceil() as u64
}

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("objective function failed: {0}")]
    Failed(String),
    #[error("objective function returned invalid output: {0}")]
    InvalidOutput(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("evaluation {seq} failed: {source}")]
    Evaluation { seq: u64, source: EvaluationError },
    #[error("invalid stopping criteria: {0}")]
    Stopping(String),
    #[error(transparent)]
    De(#[from] DeError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// The output of one objective-function call.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    /// Cost in seconds, simulated or measured.
    pub cost: f64,
}

/// A multi-fidelity multi-objective problem.
pub trait Problem {
    fn name(&self) -> &str;
    fn space(&self) -> &SearchSpace;
    /// Normalization box for in-loop and post-hoc hypervolume.
    fn objective_bounds(&self) -> &ObjectiveBounds;
    fn evaluate(&self, x: &UnitVector, fidelity: f64) -> Result<Evaluation, EvaluationError>;
}

/// One target-algorithm execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// 1-based position in evaluation order.
    pub seq: u64,
    pub genotype: UnitVector,
    pub fidelity: f64,
    pub objectives: ObjectiveVector,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "modehb_nsga2")]
    Nsga2,
    #[serde(rename = "modehb_epsnet")]
    EpsNet,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Nsga2 => "modehb_nsga2",
            Variant::EpsNet => "modehb_epsnet",
        }
    }

    pub fn strategy(&self) -> RankingStrategy {
        match self {
            Variant::Nsga2 => RankingStrategy::Crowding,
            Variant::EpsNet => RankingStrategy::EpsNet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModehbSettings {
    pub variant: Variant,
    #[serde(default)]
    pub de: DeParams,
}

impl ModehbSettings {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            de: DeParams::default(),
        }
    }
}

/// Limits checked before every evaluation. `max_wallclock` bounds the
/// cumulative reported evaluation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingCriteria {
    #[serde(default)]
    pub max_tae: Option<u64>,
    #[serde(default)]
    pub max_wallclock: Option<f64>,
}

impl StoppingCriteria {
    pub fn tae(max_tae: u64) -> Self {
        Self {
            max_tae: Some(max_tae),
            max_wallclock: None,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.max_tae.is_none() && self.max_wallclock.is_none_or(|w| !w.is_finite()) {
            return Err(RunError::Stopping("at least one finite limit is required".into()));
        }
        if self.max_wallclock.is_some_and(|w| w.is_nan() || w < 0.0) {
            return Err(RunError::Stopping("max_wallclock must be non-negative".into()));
        }
        Ok(())
    }

    fn check(&self, tae: u64, cost: f64) -> Option<StopCause> {
        if self.max_tae.is_some_and(|m| tae >= m) {
            return Some(StopCause::MaxTae);
        }
        if self.max_wallclock.is_some_and(|w| cost >= w) {
            return Some(StopCause::MaxWallclock);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    MaxTae,
    MaxWallclock,
}

enum Halt {
    Stopped(StopCause),
    Failed(RunError),
}

impl<E: Into<RunError>> From<E> for Halt {
    fn from(e: E) -> Self {
        Halt::Failed(e.into())
    }
}

/// Evaluation bookkeeping shared by MO-DEHB and random search.
struct Evaluator<'a, P: Problem + ?Sized> {
    problem: &'a P,
    stop: StoppingCriteria,
    archive: Vec<EvaluationRecord>,
    cumulative_cost: f64,
}

impl<'a, P: Problem + ?Sized> Evaluator<'a, P> {
    fn new(problem: &'a P, stop: StoppingCriteria) -> Self {
        Self {
            problem,
            stop,
            archive: Vec::new(),
            cumulative_cost: 0.0,
        }
    }

    fn evaluate(&mut self, genotype: &UnitVector, fidelity: f64) -> Result<EvaluationRecord, Halt> {
        if let Some(cause) = self.stop.check(self.archive.len() as u64, self.cumulative_cost) {
            return Err(Halt::Stopped(cause));
        }
        let seq = self.archive.len() as u64 + 1;
        let failed = |source| Halt::Failed(RunError::Evaluation { seq, source });
        let out = self.problem.evaluate(genotype, fidelity).map_err(failed)?;
        let objectives = ObjectiveVector::new(out.objectives)
            .map_err(|e| failed(EvaluationError::InvalidOutput(e.to_string())))?;
        if !(out.cost.is_finite() && out.cost >= 0.0) {
            return Err(failed(EvaluationError::InvalidOutput(format!(
                "cost {} is not a non-negative number",
                out.cost
            ))));
        }
        let record = EvaluationRecord {
            seq,
            genotype: genotype.clone(),
            fidelity,
            objectives,
            cost: out.cost,
        };
        self.cumulative_cost += out.cost;
        self.archive.push(record.clone());
        Ok(record)
    }
}

/// Mutable state of one MO-DEHB run.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    settings: ModehbSettings,
    ladder: FidelityLadder,
    capacities: Vec<usize>,
    sub_populations: Vec<Vec<Individual>>,
    parent_pools: Vec<Vec<Individual>>,
    rng: Stream,
    iteration: usize,
    bounds: ObjectiveBounds,
}

impl OptimizerState {
    /// Seeds the lowest-fidelity sub-population with uniform random
    /// genotypes; higher levels are filled by the first bracket.
    pub fn initialize(
        space: &SearchSpace,
        ladder: &FidelityLadder,
        settings: ModehbSettings,
        bounds: ObjectiveBounds,
        seed: u64,
    ) -> Self {
        let mut rng = substream(seed, settings.variant.name());
        let capacities = ladder.population_sizes();
        let levels = capacities.len();
        let mut sub_populations = vec![Vec::new(); levels];
        sub_populations[0] = (0..capacities[0])
            .map(|_| Individual::new(space.sample(&mut rng)))
            .collect();
        Self {
            settings,
            ladder: ladder.clone(),
            capacities,
            sub_populations,
            parent_pools: vec![Vec::new(); levels],
            rng,
            iteration: 0,
            bounds,
        }
    }

    pub fn settings(&self) -> &ModehbSettings {
        &self.settings
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn sub_populations(&self) -> &[Vec<Individual>] {
        &self.sub_populations
    }

    pub fn parent_pools(&self) -> &[Vec<Individual>] {
        &self.parent_pools
    }

    /// Completed DEHB iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Every sub-population member tagged with its level, in level order.
    pub fn global_population(&self) -> Vec<(usize, &Individual)> {
        self.sub_populations
            .iter()
            .enumerate()
            .flat_map(|(level, pop)| pop.iter().map(move |ind| (level, ind)))
            .collect()
    }

    fn contenders(&self) -> (Vec<Contender>, Vec<(usize, usize)>) {
        let mut contenders = Vec::new();
        let mut slots = Vec::new();
        for (level, pop) in self.sub_populations.iter().enumerate() {
            for (idx, ind) in pop.iter().enumerate() {
                if let Some(record) = &ind.record {
                    contenders.push(Contender {
                        objectives: self.bounds.scale(record.objectives.values()),
                        owner: level,
                        seq: record.seq,
                    });
                    slots.push((level, idx));
                }
            }
        }
        (contenders, slots)
    }

    /// Parents for one mutation: the pool, topped up from the global
    /// population and, failing that, with fresh random genotypes.
    fn mutation_parents(&mut self, pool: &[Individual], space: &SearchSpace) -> Vec<UnitVector> {
        let mut parents: Vec<UnitVector> = pool.iter().map(|i| i.genotype.clone()).collect();
        if parents.len() >= 3 {
            return parents;
        }
        let candidates: Vec<UnitVector> = self
            .global_population()
            .into_iter()
            .map(|(_, ind)| ind.genotype.clone())
            .filter(|g| !parents.contains(g))
            .collect();
        let need = (3 - parents.len()).min(candidates.len());
        for i in index::sample(&mut self.rng, candidates.len(), need) {
            parents.push(candidates[i].clone());
        }
        while parents.len() < 3 {
            parents.push(space.sample(&mut self.rng));
        }
        parents
    }

    fn promote(&self, level: usize, k: usize) -> Result<Vec<Individual>, ParetoError> {
        let mut evaluated: Vec<&Individual> = self.sub_populations[level]
            .iter()
            .filter(|i| i.record.is_some())
            .collect();
        evaluated.sort_by_key(|i| i.record.as_ref().map(|r| r.seq));
        let k = k.min(evaluated.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let records: Vec<EvaluationRecord> = evaluated
            .iter()
            .filter_map(|i| i.record.clone())
            .collect();
        Ok(promote(&records, k, self.settings.variant)?
            .into_iter()
            .map(Individual::new)
            .collect())
    }
}

/// Promotes `k` records for the next rung: whole fronts first, the
/// overflowing front ordered by the variant's ranking.
pub fn promote(records: &[EvaluationRecord], k: usize, variant: Variant) -> Result<Vec<UnitVector>, ParetoError> {
    let objectives: Vec<&ObjectiveVector> = records.iter().map(|r| &r.objectives).collect();
    let picked = rank_and_truncate(&objectives, k, variant.strategy())?;
    Ok(picked.into_iter().map(|i| records[i].genotype.clone()).collect())
}

/// Evolves the sub-population at `level` for one pass: one offspring per
/// member, each followed by multi-objective selection.
fn evolve_rung<P: Problem + ?Sized>(
    state: &mut OptimizerState,
    level: usize,
    evaluator: &mut Evaluator<'_, P>,
) -> Result<(), Halt> {
    let space = evaluator.problem.space();
    let fidelity = state.ladder.levels()[level];
    let pool = state.parent_pools[level].clone();
    for idx in 0..state.sub_populations[level].len() {
        let parents = state.mutation_parents(&pool, space);
        let de = state.settings.de;
        let mutant = mutate_rand1(&parents, &de, &mut state.rng)?;
        let target = state.sub_populations[level][idx].genotype.clone();
        let child = crossover_binomial(&target, &mutant, &de, &mut state.rng)?;
        let record = evaluator.evaluate(&child, fidelity)?;

        let (global, slots) = state.contenders();
        let Some(parent) = slots.iter().position(|&s| s == (level, idx)) else {
            // An unevaluated target is simply filled by its offspring.
            state.sub_populations[level][idx] = Individual::evaluated(record);
            continue;
        };
        let offspring = Contender {
            objectives: state.bounds.scale(record.objectives.values()),
            owner: level,
            seq: record.seq,
        };
        match mo_selection(&global, parent, &offspring, &[1.0, 1.0])? {
            Victim::Parent => state.sub_populations[level][idx] = Individual::evaluated(record),
            Victim::Offspring => {}
            Victim::Member(g) => {
                let (owner, slot) = slots[g];
                debug_assert_eq!(owner, level);
                state.sub_populations[owner][slot] = Individual::evaluated(record);
            }
        }
    }
    Ok(())
}

/// Plain successive halving that fills every sub-population.
fn initial_bracket<P: Problem + ?Sized>(
    state: &mut OptimizerState,
    bracket: &BracketPlan,
    evaluator: &mut Evaluator<'_, P>,
) -> Result<(), Halt> {
    for (r, rung) in bracket.rungs.iter().enumerate() {
        if r == 0 {
            for idx in 0..state.sub_populations[rung.level].len() {
                let g = state.sub_populations[rung.level][idx].genotype.clone();
                let record = evaluator.evaluate(&g, rung.fidelity)?;
                state.sub_populations[rung.level][idx] = Individual::evaluated(record);
            }
        } else {
            let promoted = state.promote(rung.level - 1, rung.n_configs)?;
            state.parent_pools[rung.level] = promoted.clone();
            for ind in promoted {
                let record = evaluator.evaluate(&ind.genotype, rung.fidelity)?;
                state.sub_populations[rung.level].push(Individual::evaluated(record));
            }
        }
    }
    Ok(())
}

fn de_bracket<P: Problem + ?Sized>(
    state: &mut OptimizerState,
    bracket: &BracketPlan,
    evaluator: &mut Evaluator<'_, P>,
    observer: &mut dyn FnMut(&OptimizerState),
) -> Result<(), Halt> {
    for (r, rung) in bracket.rungs.iter().enumerate() {
        state.parent_pools[rung.level] = if r == 0 {
            state.sub_populations[rung.level].clone()
        } else {
            state.promote(rung.level - 1, rung.n_configs)?
        };
        evolve_rung(state, rung.level, evaluator)?;
        observer(state);
    }
    Ok(())
}

fn finish<P: Problem + ?Sized>(
    evaluator: Evaluator<'_, P>,
    halt: Halt,
    seed: u64,
    optimizer: &str,
    ladder: Option<&FidelityLadder>,
    b_max: f64,
) -> Result<RunTrajectory, RunError> {
    match halt {
        Halt::Failed(e) => Err(e),
        Halt::Stopped(stop_cause) => Ok(RunTrajectory {
            metadata: RunMetadata {
                seed,
                optimizer: optimizer.to_string(),
                benchmark: evaluator.problem.name().to_string(),
                ladder: ladder.map(FidelityLadder::spec),
                b_max,
                stop_cause,
            },
            records: evaluator.archive,
        }),
    }
}

/// Runs MO-DEHB until a stopping criterion trips.
pub fn run<P: Problem + ?Sized>(
    problem: &P,
    ladder: &FidelityLadder,
    settings: ModehbSettings,
    stop: StoppingCriteria,
    seed: u64,
) -> Result<RunTrajectory, RunError> {
    run_observed(problem, ladder, settings, stop, seed, &mut |_| {})
}

/// [`run`] with a hook called after the first bracket and after every
/// evolved rung.
pub fn run_observed<P: Problem + ?Sized>(
    problem: &P,
    ladder: &FidelityLadder,
    settings: ModehbSettings,
    stop: StoppingCriteria,
    seed: u64,
    observer: &mut dyn FnMut(&OptimizerState),
) -> Result<RunTrajectory, RunError> {
    stop.validate()?;
    let mut state = OptimizerState::initialize(
        problem.space(),
        ladder,
        settings,
        problem.objective_bounds().clone(),
        seed,
    );
    let mut evaluator = Evaluator::new(problem, stop);
    let plan = dehb_iteration_plan(ladder);
    let halt = loop {
        let result = (|| {
            for (b, bracket) in plan.iter().enumerate() {
                if state.iteration == 0 && b == 0 {
                    initial_bracket(&mut state, bracket, &mut evaluator)?;
                    observer(&state);
                } else {
                    de_bracket(&mut state, bracket, &mut evaluator, observer)?;
                }
            }
            Ok::<(), Halt>(())
        })();
        if let Err(halt) = result {
            break halt;
        }
        state.iteration += 1;
        for pool in &mut state.parent_pools {
            pool.clear();
        }
    };
    finish(evaluator, halt, seed, settings.variant.name(), Some(ladder), ladder.b_max())
}

/// Name of the random-search baseline.
pub const RANDOM_SEARCH: &str = "random_search";

/// Uniform random sampling, every configuration evaluated at `b_max`.
pub fn run_random_search<P: Problem + ?Sized>(
    problem: &P,
    b_max: f64,
    stop: StoppingCriteria,
    seed: u64,
) -> Result<RunTrajectory, RunError> {
    stop.validate()?;
    let mut rng = substream(seed, RANDOM_SEARCH);
    let mut evaluator = Evaluator::new(problem, stop);
    let halt = loop {
        let g = problem.space().sample(&mut rng);
        if let Err(halt) = evaluator.evaluate(&g, b_max) {
            break halt;
        }
    };
    finish(evaluator, halt, seed, RANDOM_SEARCH, None, b_max)
}
