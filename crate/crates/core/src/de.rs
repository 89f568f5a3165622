//! Differential-evolution operators for the multi-objective setting.
//!
//! Mutation and crossover are the classic rand/1/bin pair acting on unit
//! vectors. Selection replaces the scalar "offspring better than parent" test
//! with front ranks from non-dominated sorting, falling back to the least
//! hypervolume contributor of the last front when both land on the same front.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modehb::EvaluationRecord;
use crate::pareto::{hv_contributions, non_dominated_sort, ParetoError};
use crate::space::UnitVector;

#[derive(Debug, Error, PartialEq)]
pub enum DeError {
    #[error("rand/1 mutation needs at least 3 parents, pool has {0}")]
    InsufficientParents(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid DE parameter: {0}")]
    InvalidParams(String),
    #[error("selection error: {0}")]
    Selection(String),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

/// Scaling factor `F` in `(0, 2]` and crossover probability `CR` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDeParams")]
pub struct DeParams {
    scaling_factor: f64,
    crossover_prob: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeParams {
    scaling_factor: f64,
    crossover_prob: f64,
}

impl TryFrom<RawDeParams> for DeParams {
    type Error = DeError;

    fn try_from(raw: RawDeParams) -> Result<Self, Self::Error> {
        Self::new(raw.scaling_factor, raw.crossover_prob)
    }
}

impl DeParams {
    pub fn new(scaling_factor: f64, crossover_prob: f64) -> Result<Self, DeError> {
        if !(scaling_factor > 0.0 && scaling_factor <= 2.0) {
            return Err(DeError::InvalidParams(format!(
                "scaling factor {scaling_factor} outside (0, 2]"
            )));
        }
        if !(crossover_prob > 0.0 && crossover_prob <= 1.0) {
            return Err(DeError::InvalidParams(format!(
                "crossover probability {crossover_prob} outside (0, 1]"
            )));
        }
        Ok(Self {
            scaling_factor,
            crossover_prob,
        })
    }

    pub fn scaling_factor(&self) -> f64 {
        self.scaling_factor
    }

    pub fn crossover_prob(&self) -> f64 {
        self.crossover_prob
    }
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            scaling_factor: 0.5,
            crossover_prob: 0.5,
        }
    }
}

/// A population member: its genotype and, once evaluated, its record.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: UnitVector,
    pub record: Option<EvaluationRecord>,
}

impl Individual {
    pub fn new(genotype: UnitVector) -> Self {
        Self {
            genotype,
            record: None,
        }
    }

    pub fn evaluated(record: EvaluationRecord) -> Self {
        Self {
            genotype: record.genotype.clone(),
            record: Some(record),
        }
    }
}

impl AsRef<[f64]> for Individual {
    fn as_ref(&self) -> &[f64] {
        self.genotype.coords()
    }
}

/// rand/1 mutation: `r1 + F (r2 - r3)` for three distinct pool members,
/// clipped into the unit cube.
pub fn mutate_rand1<G, R>(pool: &[G], params: &DeParams, rng: &mut R) -> Result<UnitVector, DeError>
where
    G: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    if pool.len() < 3 {
        return Err(DeError::InsufficientParents(pool.len()));
    }
    let picks = index::sample(rng, pool.len(), 3);
    let (r1, r2, r3) = (
        pool[picks.index(0)].as_ref(),
        pool[picks.index(1)].as_ref(),
        pool[picks.index(2)].as_ref(),
    );
    for r in [r2, r3] {
        if r.len() != r1.len() {
            return Err(DeError::Dimension {
                expected: r1.len(),
                actual: r.len(),
            });
        }
    }
    Ok(mutant_from(r1, r2, r3, params.scaling_factor))
}

pub(crate) fn mutant_from(r1: &[f64], r2: &[f64], r3: &[f64], f: f64) -> UnitVector {
    UnitVector::clipped(
        r1.iter()
            .zip(r2)
            .zip(r3)
            .map(|((a, b), c)| a + f * (b - c))
            .collect(),
    )
}

/// Binomial crossover. Each coordinate comes from the mutant with probability
/// `CR`; one uniformly drawn coordinate always does.
pub fn crossover_binomial<R: Rng + ?Sized>(
    target: &UnitVector,
    mutant: &UnitVector,
    params: &DeParams,
    rng: &mut R,
) -> Result<UnitVector, DeError> {
    if target.dim() != mutant.dim() {
        return Err(DeError::Dimension {
            expected: target.dim(),
            actual: mutant.dim(),
        });
    }
    let d = target.dim();
    let forced = rng.random_range(0..d);
    let coords = (0..d)
        .map(|i| {
            let take = rng.random::<f64>() < params.crossover_prob;
            if take || i == forced {
                mutant.coords()[i]
            } else {
                target.coords()[i]
            }
        })
        .collect();
    Ok(UnitVector::clipped(coords))
}

/// An evaluated population member as seen by [`mo_selection`].
#[derive(Debug, Clone, PartialEq)]
pub struct Contender {
    /// Objective values; in-loop callers pass normalized values so the
    /// reference point is `(1, 1)`.
    pub objectives: Vec<f64>,
    /// Sub-population that owns the member.
    pub owner: usize,
    /// Evaluation sequence number, used to break contribution ties.
    pub seq: u64,
}

impl Contender {
    pub fn from_individual(ind: &Individual, owner: usize) -> Result<Self, DeError> {
        let record = ind
            .record
            .as_ref()
            .ok_or_else(|| DeError::Selection("individual has not been evaluated".into()))?;
        Ok(Self {
            objectives: record.objectives.values().to_vec(),
            owner,
            seq: record.seq,
        })
    }
}

/// The member removed from the parent's sub-population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Victim {
    /// Offspring takes the parent's slot.
    Parent,
    /// Offspring is discarded.
    Offspring,
    /// Offspring takes the slot of this global-population member.
    Member(usize),
}

/// Multi-objective selection between `global_pop[parent]` and `offspring`.
///
/// The offspring joins the global population provisionally and the union is
/// sorted into fronts. A better front rank wins outright. On equal ranks the
/// victim is the smallest hypervolume contributor of the last front among the
/// members owned by the parent's sub-population (the offspring included),
/// earliest sequence number first; with no such member the parent goes.
pub fn mo_selection(
    global_pop: &[Contender],
    parent: usize,
    offspring: &Contender,
    reference: &[f64],
) -> Result<Victim, DeError> {
    if parent >= global_pop.len() {
        return Err(DeError::Selection(format!(
            "parent index {parent} outside a population of {}",
            global_pop.len()
        )));
    }
    let owner = global_pop[parent].owner;
    let offspring_idx = global_pop.len();
    let all: Vec<&Contender> = global_pop.iter().chain(std::iter::once(offspring)).collect();
    let objectives: Vec<&[f64]> = all.iter().map(|c| c.objectives.as_slice()).collect();

    let ranked = non_dominated_sort(&objectives)?;
    let ranks = ranked.ranks();
    let (rank_parent, rank_offspring) = (ranks[parent], ranks[offspring_idx]);
    if rank_parent > rank_offspring {
        return Ok(Victim::Parent);
    }
    if rank_parent < rank_offspring {
        return Ok(Victim::Offspring);
    }

    let last = ranked.fronts().last().expect("non-empty sort");
    let last_points: Vec<&[f64]> = last.iter().map(|&i| objectives[i]).collect();
    let contributions = hv_contributions(&last_points, reference)?;
    let victim = last
        .iter()
        .zip(&contributions)
        .filter(|(&i, _)| all[i].owner == owner)
        .min_by(|(&a, ca), (&b, cb)| ca.total_cmp(cb).then(all[a].seq.cmp(&all[b].seq)))
        .map(|(&i, _)| i);
    Ok(match victim {
        None => Victim::Parent,
        Some(i) if i == parent => Victim::Parent,
        Some(i) if i == offspring_idx => Victim::Offspring,
        Some(i) => Victim::Member(i),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn uv(c: &[f64]) -> UnitVector {
        UnitVector::new(c.to_vec()).unwrap()
    }

    fn contender(objectives: &[f64], owner: usize, seq: u64) -> Contender {
        Contender {
            objectives: objectives.to_vec(),
            owner,
            seq,
        }
    }

    #[test]
    fn params_validate() {
        assert!(DeParams::new(0.0, 0.5).is_err());
        assert!(DeParams::new(2.5, 0.5).is_err());
        assert!(DeParams::new(0.5, 0.0).is_err());
        assert!(DeParams::new(f64::NAN, 0.5).is_err());
        assert_eq!(DeParams::default(), DeParams::new(0.5, 0.5).unwrap());
    }

    #[test]
    fn mutant_arithmetic_and_clipping() {
        assert_eq!(mutant_from(&[0.5], &[1.0], &[0.0], 0.5), uv(&[1.0]));
        assert_eq!(mutant_from(&[0.9], &[1.0], &[0.0], 0.5), uv(&[1.0]));
        assert_eq!(mutant_from(&[0.1], &[0.0], &[1.0], 0.5), uv(&[0.0]));
    }

    #[test]
    fn mutation_needs_three_parents() {
        let pool = vec![uv(&[0.1]), uv(&[0.2])];
        let err = mutate_rand1(&pool, &DeParams::default(), &mut substream(0, "m"));
        assert_eq!(err, Err(DeError::InsufficientParents(2)));
    }

    #[test]
    fn tiny_scaling_returns_first_parent() {
        // F = 0 is outside the validated range, so check the limit directly.
        let p = DeParams::new(f64::MIN_POSITIVE, 0.5).unwrap();
        let pool = vec![uv(&[0.3, 0.3]); 3];
        let m = mutate_rand1(&pool, &p, &mut substream(1, "m")).unwrap();
        assert_eq!(m, uv(&[0.3, 0.3]));
        assert_eq!(mutant_from(&[0.25], &[0.9], &[0.1], 0.0), uv(&[0.25]));
    }

    #[test]
    fn crossover_full_probability_copies_mutant() {
        let p = DeParams::new(0.5, 1.0).unwrap();
        let t = uv(&[0.0; 5]);
        let m = uv(&[1.0; 5]);
        assert_eq!(crossover_binomial(&t, &m, &p, &mut substream(2, "x")).unwrap(), m);
    }

    #[test]
    fn crossover_tiny_probability_changes_only_forced_coordinate() {
        let p = DeParams::new(0.5, 1e-300).unwrap();
        let t = uv(&[0.0; 6]);
        let m = uv(&[1.0; 6]);
        for seed in 0..20 {
            let o = crossover_binomial(&t, &m, &p, &mut substream(seed, "x")).unwrap();
            assert_eq!(o.coords().iter().filter(|&&c| c == 1.0).count(), 1);
        }
    }

    #[test]
    fn crossover_replays_seeded_coin_flips() {
        let p = DeParams::default();
        let t = uv(&[0.0; 4]);
        let m = uv(&[1.0; 4]);
        let offspring = crossover_binomial(&t, &m, &p, &mut substream(5, "x")).unwrap();
        // Replay the same stream by hand: forced index first, then one coin per coordinate.
        let mut rng = substream(5, "x");
        let forced = rng.random_range(0..4);
        let expected: Vec<f64> = (0..4)
            .map(|i| {
                let coin = rng.random::<f64>() < 0.5;
                if coin || i == forced {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(offspring.coords(), expected.as_slice());
        assert!(crossover_binomial(&t, &uv(&[1.0; 3]), &p, &mut substream(5, "x")).is_err());
    }

    #[test]
    fn selection_offspring_better() {
        let pop = vec![contender(&[0.5, 0.5], 0, 1), contender(&[0.4, 0.7], 0, 2)];
        let off = contender(&[0.1, 0.1], 0, 3);
        assert_eq!(mo_selection(&pop, 0, &off, &[1.0, 1.0]), Ok(Victim::Parent));
    }

    #[test]
    fn selection_parent_better() {
        let pop = vec![contender(&[0.2, 0.2], 0, 1), contender(&[0.4, 0.7], 0, 2)];
        let off = contender(&[0.3, 0.3], 0, 3);
        assert_eq!(mo_selection(&pop, 0, &off, &[1.0, 1.0]), Ok(Victim::Offspring));
    }

    #[test]
    fn selection_same_front_evicts_least_contributor() {
        // F1 holds parent and offspring; the last front holds three members of
        // the same sub-population. Exclusive areas with reference (2, 2):
        // (0.5, 1.5) -> 0.45, (1.4, 0.6) -> 0.09, (1.5, 0.5) -> 0.05.
        let pop = vec![
            contender(&[0.2, 0.3], 0, 1),
            contender(&[0.5, 1.5], 0, 2),
            contender(&[1.5, 0.5], 0, 3),
            contender(&[1.4, 0.6], 0, 4),
        ];
        let off = contender(&[0.3, 0.2], 0, 5);
        assert_eq!(mo_selection(&pop, 0, &off, &[2.0, 2.0]), Ok(Victim::Member(2)));
    }

    #[test]
    fn selection_ignores_members_of_other_subpopulations() {
        let pop = vec![
            contender(&[0.2, 0.3], 0, 1),
            contender(&[0.5, 1.5], 1, 2),
            contender(&[1.5, 0.5], 1, 3),
        ];
        let off = contender(&[0.3, 0.2], 0, 5);
        assert_eq!(mo_selection(&pop, 0, &off, &[2.0, 2.0]), Ok(Victim::Parent));
    }

    #[test]
    fn selection_single_front_breaks_ties_by_sequence() {
        // Both points lie beyond the reference point: contributions tie at 0.
        let pop = vec![contender(&[3.0, 1.0], 0, 7)];
        let off = contender(&[1.0, 3.0], 0, 8);
        assert_eq!(mo_selection(&pop, 0, &off, &[2.0, 2.0]), Ok(Victim::Parent));
        // Inside the box, the larger exclusive area survives.
        let pop = vec![contender(&[0.1, 0.9], 0, 7)];
        let off = contender(&[0.5, 0.2], 0, 8);
        assert_eq!(mo_selection(&pop, 0, &off, &[1.0, 1.0]), Ok(Victim::Parent));
    }

    #[test]
    fn unevaluated_individual_is_rejected() {
        let ind = Individual::new(uv(&[0.5]));
        assert!(matches!(
            Contender::from_individual(&ind, 0),
            Err(DeError::Selection(_))
        ));
    }

    proptest! {
        #[test]
        fn mutation_stays_in_unit_cube(seed in any::<u64>(), f in 0.01f64..2.0,
                                       pool in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 3..8)) {
            let pool: Vec<UnitVector> = pool.into_iter().map(|c| UnitVector::new(c).unwrap()).collect();
            let m = mutate_rand1(&pool, &DeParams::new(f, 0.5).unwrap(), &mut substream(seed, "p")).unwrap();
            prop_assert!(m.coords().iter().all(|c| (0.0..=1.0).contains(c)));
        }

        #[test]
        fn dominating_offspring_is_never_discarded(
            others in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0usize..3), 0..10),
            parent in (0.05f64..1.0, 0.05f64..1.0),
            shrink in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let mut pop = vec![contender(&[parent.0, parent.1], 0, 0)];
            pop.extend(others.iter().enumerate().map(|(i, &(a, b, o))| contender(&[a, b], o, i as u64 + 1)));
            let off = contender(&[parent.0 * shrink.0, parent.1 * shrink.1 * 0.999], 0, 100);
            let victim = mo_selection(&pop, 0, &off, &[1.0, 1.0]).unwrap();
            prop_assert_ne!(victim, Victim::Offspring);
            if let Victim::Member(i) = victim {
                prop_assert_eq!(pop[i].owner, 0);
            }
            // Deterministic for identical inputs.
            prop_assert_eq!(mo_selection(&pop, 0, &off, &[1.0, 1.0]).unwrap(), victim);
        }
    }
}
