//! Pareto dominance and the ranking machinery shared by MO-Hyperband
//! promotion and MO-DE selection.
//!
//! All objectives are minimized. Functions accept any slice of points that
//! expose their values through `AsRef<[f64]>`, so callers can pass
//! [`ObjectiveVector`]s, plain `Vec<f64>`s or borrowed slices alike.
//!
//! Hypervolume is exact for two objectives only; more objectives are rejected
//! with [`ParetoError::UnsupportedDimension`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParetoError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("exact hypervolume supports 2 objectives, got {0}")]
    UnsupportedDimension(usize),
    #[error("cannot select {k} of {available} points")]
    Selection { k: usize, available: usize },
    #[error("objective vectors need at least 2 finite values, got {0:?}")]
    InvalidObjectives(Vec<f64>),
}

/// A finite objective vector with at least two components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ParetoError> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(ParetoError::InvalidObjectives(values));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = ParetoError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// How members of the front that overflows a selection are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingStrategy {
    /// NSGA-II crowding distance, largest first.
    Crowding,
    /// Greedy max-min Euclidean distance.
    EpsNet,
}

/// Fronts `F1 < F2 < ... < Fm` as lists of input indices, each in ascending
/// input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPopulation {
    fronts: Vec<Vec<usize>>,
}

impl RankedPopulation {
    pub fn fronts(&self) -> &[Vec<usize>] {
        &self.fronts
    }

    pub fn into_fronts(self) -> Vec<Vec<usize>> {
        self.fronts
    }

    pub fn len(&self) -> usize {
        self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }

    /// 1-based front rank of every input index.
    pub fn ranks(&self) -> Vec<usize> {
        let n = self.fronts.iter().map(Vec::len).sum();
        let mut ranks = vec![0; n];
        for (r, front) in self.fronts.iter().enumerate() {
            for &i in front {
                ranks[i] = r + 1;
            }
        }
        ranks
    }
}

fn check_dims<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, ParetoError> {
    let Some(first) = points.first() else {
        return Ok(0);
    };
    let expected = first.as_ref().len();
    for p in points {
        let actual = p.as_ref().len();
        if actual != expected {
            return Err(ParetoError::Dimension { expected, actual });
        }
    }
    Ok(expected)
}

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sorting (Deb et al.), `O(m n^2)`.
pub fn non_dominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Result<RankedPopulation, ParetoError> {
    if points.is_empty() {
        return Err(ParetoError::EmptyPopulation);
    }
    check_dims(points)?;
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(RankedPopulation { fronts })
}

/// NSGA-II crowding distance of every member of `front`.
///
/// Per objective the members are sorted, the two extremes get `+inf`, and
/// interior members accumulate the normalized gap between their neighbours.
/// An objective that is constant across the front contributes 0.
pub fn crowding_distance<P: AsRef<[f64]>>(front: &[P]) -> Result<Vec<f64>, ParetoError> {
    if front.is_empty() {
        return Err(ParetoError::EmptyPopulation);
    }
    let m = check_dims(front)?;
    let n = front.len();
    if n <= 2 {
        return Ok(vec![f64::INFINITY; n]);
    }
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        let value = |i: usize| front[i].as_ref()[obj];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let lo = value(order[0]);
        let hi = value(order[n - 1]);
        let range = hi - lo;
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            distance[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    Ok(distance)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// EpsNet ordering: seeded with index 0, then repeatedly the member whose
/// nearest already-ranked member is farthest away (ties to the lowest index).
pub fn epsnet_order<P: AsRef<[f64]>>(front: &[P]) -> Result<Vec<usize>, ParetoError> {
    if front.is_empty() {
        return Err(ParetoError::EmptyPopulation);
    }
    check_dims(front)?;
    let n = front.len();
    let mut order = Vec::with_capacity(n);
    let mut ranked = vec![false; n];
    // Distance from every member to its nearest ranked member.
    let mut nearest = vec![f64::INFINITY; n];
    let mut last = 0;
    ranked[0] = true;
    order.push(0);
    while order.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !ranked[i]) {
            nearest[i] = nearest[i].min(euclidean(front[i].as_ref(), front[last].as_ref()));
            if best.is_none_or(|(_, d)| nearest[i] > d) {
                best = Some((i, nearest[i]));
            }
        }
        let (pick, _) = best.expect("unranked member exists");
        ranked[pick] = true;
        order.push(pick);
        last = pick;
    }
    Ok(order)
}

/// Orders `front` for truncation under `strategy`.
pub fn order_front<P: AsRef<[f64]>>(
    front: &[P],
    strategy: RankingStrategy,
) -> Result<Vec<usize>, ParetoError> {
    match strategy {
        RankingStrategy::EpsNet => epsnet_order(front),
        RankingStrategy::Crowding => {
            let dist = crowding_distance(front)?;
            let mut order: Vec<usize> = (0..front.len()).collect();
            // Descending distance; infinities compare equal and fall back to index.
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            Ok(order)
        }
    }
}

/// Selects `k` indices: whole fronts in order, then the best-ordered members
/// of the first front that does not fit.
pub fn rank_and_truncate<P: AsRef<[f64]>>(
    points: &[P],
    k: usize,
    strategy: RankingStrategy,
) -> Result<Vec<usize>, ParetoError> {
    if k == 0 || k > points.len() {
        return Err(ParetoError::Selection {
            k,
            available: points.len(),
        });
    }
    let ranked = non_dominated_sort(points)?;
    let mut selected = Vec::with_capacity(k);
    for front in ranked.fronts() {
        let room = k - selected.len();
        if front.len() <= room {
            selected.extend_from_slice(front);
        } else {
            let members: Vec<&[f64]> = front.iter().map(|&i| points[i].as_ref()).collect();
            let order = order_front(&members, strategy)?;
            selected.extend(order.into_iter().take(room).map(|j| front[j]));
        }
        if selected.len() == k {
            break;
        }
    }
    Ok(selected)
}

fn check_bi_objective<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<(), ParetoError> {
    if reference.len() != 2 {
        return Err(ParetoError::UnsupportedDimension(reference.len()));
    }
    for p in points {
        let actual = p.as_ref().len();
        if actual != 2 {
            return Err(ParetoError::UnsupportedDimension(actual));
        }
    }
    Ok(())
}

/// Exact 2-D hypervolume of the region weakly dominated by `points` and
/// bounded by `reference`. Points beyond the reference contribute nothing.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<f64, ParetoError> {
    check_bi_objective(points, reference)?;
    let mut inside: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [p.as_ref()[0], p.as_ref()[1]])
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    Ok(sweep(&mut inside, reference))
}

fn sweep(points: &mut [[f64; 2]], reference: &[f64]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut volume = 0.0;
    let mut prev_f2 = reference[1];
    for p in points.iter() {
        if p[1] < prev_f2 {
            volume += (reference[0] - p[0]) * (prev_f2 - p[1]);
            prev_f2 = p[1];
        }
    }
    volume
}

/// Exclusive hypervolume `HV(S) - HV(S \ {p})` of each point. Dominated and
/// duplicated points get 0.
pub fn hv_contributions<P: AsRef<[f64]>>(
    points: &[P],
    reference: &[f64],
) -> Result<Vec<f64>, ParetoError> {
    check_bi_objective(points, reference)?;
    let n = points.len();
    let inside = |i: usize| {
        let p = points[i].as_ref();
        p[0] < reference[0] && p[1] < reference[1]
    };
    // Only a strictly non-dominated, unduplicated point owns a region of its own.
    let owns_region = |i: usize| {
        let p = points[i].as_ref();
        inside(i)
            && (0..n).all(|j| {
                let q = points[j].as_ref();
                j == i || !(q[0] <= p[0] && q[1] <= p[1])
            })
    };
    let total = hypervolume(points, reference)?;
    let mut buf = Vec::with_capacity(n);
    Ok((0..n)
        .map(|i| {
            if !owns_region(i) {
                return 0.0;
            }
            buf.clear();
            buf.extend(
                (0..n)
                    .filter(|&j| j != i && inside(j))
                    .map(|j| [points[j].as_ref()[0], points[j].as_ref()[1]]),
            );
            (total - sweep(&mut buf, reference)).max(0.0)
        })
        .collect())
}

/// Indices of the non-dominated members of `points`, in input order.
pub fn non_dominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .any(|q| dominates_unchecked(q.as_ref(), points[i].as_ref()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec<f64>> {
        v.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 3.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[2.0, 2.0], &[1.0, 3.0]).unwrap());
        assert!(dominates(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn sorting_examples() {
        let ranked = non_dominated_sort(&pts(&[(1.0, 2.0), (2.0, 1.0), (3.0, 3.0)])).unwrap();
        assert_eq!(ranked.fronts(), &[vec![0, 1], vec![2]]);
        let ranked = non_dominated_sort(&pts(&[(5.0, 5.0)])).unwrap();
        assert_eq!(ranked.fronts(), &[vec![0]]);
        let ranked = non_dominated_sort(&pts(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])).unwrap();
        assert_eq!(ranked.fronts(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(ranked.ranks(), vec![1, 2, 3]);
        assert_eq!(
            non_dominated_sort::<Vec<f64>>(&[]),
            Err(ParetoError::EmptyPopulation)
        );
    }

    #[test]
    fn crowding_examples() {
        let d = crowding_distance(&pts(&[(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])).unwrap();
        assert_eq!(d, vec![f64::INFINITY, 2.0, f64::INFINITY]);
        let d = crowding_distance(&pts(&[(0.0, 1.0), (1.0, 0.0)])).unwrap();
        assert_eq!(d, vec![f64::INFINITY; 2]);
        let d = crowding_distance(&pts(&[(0.0, 3.0), (1.0, 2.0), (2.0, 1.0), (3.0, 0.0)])).unwrap();
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 4.0 / 3.0).abs() < 1e-12 && (d[2] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn crowding_constant_objective_is_finite_inside() {
        let d = crowding_distance(&pts(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0)])).unwrap();
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn epsnet_examples() {
        let order = epsnet_order(&pts(&[(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])).unwrap();
        assert_eq!(order, vec![0, 2, 1]);
        assert_eq!(epsnet_order(&pts(&[(0.3, 0.3)])).unwrap(), vec![0]);
        assert_eq!(epsnet_order(&pts(&[(0.3, 0.3), (0.3, 0.3)])).unwrap(), vec![0, 1]);
    }

    #[test]
    fn hypervolume_examples() {
        let r = [2.0, 2.0];
        assert_eq!(hypervolume(&pts(&[(1.0, 1.0)]), &r).unwrap(), 1.0);
        assert_eq!(hypervolume(&pts(&[(0.5, 1.5), (1.5, 0.5)]), &r).unwrap(), 1.25);
        assert_eq!(hypervolume::<Vec<f64>>(&[], &r).unwrap(), 0.0);
        assert_eq!(hypervolume(&pts(&[(3.0, 0.0), (0.0, 2.5)]), &r).unwrap(), 0.0);
        assert_eq!(
            hypervolume(&[vec![0.0, 0.0, 0.0]], &[1.0, 1.0, 1.0]),
            Err(ParetoError::UnsupportedDimension(3))
        );
    }

    #[test]
    fn contribution_examples() {
        let r = [2.0, 2.0];
        assert_eq!(hv_contributions(&pts(&[(1.0, 1.0)]), &r).unwrap(), vec![1.0]);
        assert_eq!(
            hv_contributions(&pts(&[(0.5, 1.5), (1.5, 0.5)]), &r).unwrap(),
            vec![0.5, 0.5]
        );
        assert_eq!(
            hv_contributions(&pts(&[(1.0, 1.0), (1.0, 1.0)]), &r).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn contribution_accounts_for_dominated_points() {
        // Removing (0, 0) leaves the square of (0.5, 0.5) behind.
        let c = hv_contributions(&pts(&[(0.0, 0.0), (0.5, 0.5)]), &[1.0, 1.0]).unwrap();
        assert_eq!(c, vec![0.75, 0.0]);
    }

    #[test]
    fn truncation_examples() {
        let all = pts(&[(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]);
        for s in [RankingStrategy::Crowding, RankingStrategy::EpsNet] {
            let mut sel = rank_and_truncate(&all, 3, s).unwrap();
            sel.sort();
            assert_eq!(sel, vec![0, 1, 2]);
        }
        // F1 = {0, 1}; F2 = {2, 3, 4} with 3 interior.
        let mixed = pts(&[(0.0, 0.5), (0.5, 0.0), (0.2, 1.0), (0.6, 0.6), (1.0, 0.2)]);
        let sel = rank_and_truncate(&mixed, 4, RankingStrategy::Crowding).unwrap();
        assert_eq!(sel, vec![0, 1, 2, 4]);
        assert!(rank_and_truncate(&mixed, 0, RankingStrategy::Crowding).is_err());
        assert!(rank_and_truncate(&mixed, 6, RankingStrategy::EpsNet).is_err());
    }

    fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining
                        .iter()
                        .any(|&j| dominates_unchecked(&points[j], &points[i]))
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    fn point_set(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        // Coarse values produce plenty of ties and duplicates.
        prop::collection::vec(prop::collection::vec((0u8..8).prop_map(f64::from), m), 1..40)
    }

    proptest! {
        #[test]
        fn sort_matches_brute_force(points in prop_oneof![point_set(2), point_set(3)]) {
            let ranked = non_dominated_sort(&points).unwrap();
            prop_assert_eq!(ranked.fronts().to_vec(), brute_force_fronts(&points));
        }

        #[test]
        fn orderings_are_permutations(points in point_set(2)) {
            for s in [RankingStrategy::Crowding, RankingStrategy::EpsNet] {
                let mut order = order_front(&points, s).unwrap();
                order.sort_unstable();
                prop_assert_eq!(order, (0..points.len()).collect::<Vec<_>>());
            }
            let mut all = rank_and_truncate(&points, points.len(), RankingStrategy::EpsNet).unwrap();
            all.sort_unstable();
            prop_assert_eq!(all, (0..points.len()).collect::<Vec<_>>());
        }

        #[test]
        fn hypervolume_is_monotone(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..20),
                                   extra in (0.0f64..1.0, 0.0f64..1.0)) {
            let r = [1.0, 1.0];
            let base = pts(&points);
            let hv = hypervolume(&base, &r).unwrap();
            let mut more = base.clone();
            more.push(vec![extra.0, extra.1]);
            prop_assert!(hypervolume(&more, &r).unwrap() >= hv);
            if let Some(p) = base.first() {
                let mut with_dominated = base.clone();
                with_dominated.push(vec![(p[0] + 1.0) / 2.0, (p[1] + 1.0) / 2.0]);
                prop_assert!((hypervolume(&with_dominated, &r).unwrap() - hv).abs() < 1e-12);
            }
        }

        #[test]
        fn contributions_match_definition(points in prop::collection::vec((0u8..6, 0u8..6), 1..12)) {
            let r = [6.0, 6.0];
            let p: Vec<Vec<f64>> = points.iter().map(|&(a, b)| vec![a.into(), b.into()]).collect();
            let total = hypervolume(&p, &r).unwrap();
            let contrib = hv_contributions(&p, &r).unwrap();
            for (i, c) in contrib.iter().enumerate() {
                let rest: Vec<Vec<f64>> = p.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| q.clone()).collect();
                let expected = total - hypervolume(&rest, &r).unwrap();
                prop_assert!((c - expected).abs() < 1e-9);
            }
            prop_assert!(contrib.iter().sum::<f64>() <= total + 1e-9);
        }
    }
}
