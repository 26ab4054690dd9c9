//! Local score functions in non-zero representation.
//!
//! A score function lists, per variable, the parent sets that carry a
//! non-default value; every unlisted pair scores 0. The empty set is always
//! an allowed parent set, listed or not. The network score of a dag is the
//! sum over nodes of the score of their parent set, and the structure-search
//! problem is to maximize that sum over all dags.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::{Dag, Digraph, NodeId, UGraph};

/// Scores are finite non-negative floats. Generators emit small integers so
/// sums and comparisons stay exact.
pub type Score = f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("entry count {entries} does not match name count {names}")]
    EntryCountMismatch { entries: usize, names: usize },
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("empty variable name at index {0}")]
    EmptyName(usize),
    #[error("variable {v} lists itself as a parent")]
    SelfParent { v: NodeId },
    #[error("variable {v} lists parent id {parent} out of range (n = {n})")]
    ParentOutOfRange { v: NodeId, parent: NodeId, n: usize },
    #[error("variable {v} lists the same parent set twice")]
    DuplicateSet { v: NodeId },
    #[error("variable {v} lists a parent set with repeated member {parent}")]
    RepeatedParent { v: NodeId, parent: NodeId },
    #[error("variable {v} has score {score} for a listed set; negative scores are not representable here, normalize them first (see the shift adapter)")]
    NegativeScore { v: NodeId, score: f64 },
    #[error("variable {v} has a non-finite score for a listed set")]
    NonFiniteScore { v: NodeId },
}

/// Orders parent sets by cardinality, then lexicographically by sorted ids.
/// This is the canonical order used everywhere a set list is materialized.
pub fn set_cmp(a: &[NodeId], b: &[NodeId]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Raw per-variable listings with no sign restriction. This is the input to
/// [`RawScoreFunction::shift_normalize`]; everything else in the crate works
/// on validated [`ScoreFunction`] values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScoreFunction {
    pub names: Vec<String>,
    pub entries: Vec<Vec<(Vec<NodeId>, f64)>>,
}

/// Admissibility of a dag relative to a score function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// Some skeleton edge leaves the super-structure.
    Inadmissible,
    /// Skeleton within the super-structure, but some parent set is unlisted.
    Admissible,
    /// Every parent set is listed or empty.
    StrictlyAdmissible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFunction {
    names: Vec<String>,
    /// Per variable, listed sets in canonical order. Members sorted.
    listed: Vec<Vec<(Vec<NodeId>, Score)>>,
}

impl ScoreFunction {
    /// Validates and canonicalizes a listing. Listed values must be finite
    /// and >= 0; zero-valued sets are allowed and act as explicitly
    /// permitted parent sets with no reward.
    pub fn new(
        names: Vec<String>,
        entries: Vec<Vec<(Vec<NodeId>, f64)>>,
    ) -> Result<Self, ScoreError> {
        let n = names.len();
        if entries.len() != n {
            return Err(ScoreError::EntryCountMismatch {
                entries: entries.len(),
                names: n,
            });
        }
        let first_empty = names.iter().position(String::is_empty);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| names[a].cmp(&names[b]).then(a.cmp(&b)));
        // earliest index that repeats an earlier name
        let first_dup = order
            .windows(2)
            .filter(|w| names[w[0]] == names[w[1]])
            .map(|w| w[1])
            .min();
        match (first_empty, first_dup) {
            (Some(e), Some(d)) if e < d => return Err(ScoreError::EmptyName(e)),
            (_, Some(d)) => return Err(ScoreError::DuplicateName(names[d].clone())),
            (Some(e), None) => return Err(ScoreError::EmptyName(e)),
            (None, None) => {}
        }
        let mut listed = Vec::with_capacity(n);
        for (v, sets) in entries.into_iter().enumerate() {
            let v = v as NodeId;
            let mut canon: Vec<(Vec<NodeId>, Score)> = Vec::with_capacity(sets.len());
            for (mut set, score) in sets {
                if !score.is_finite() {
                    return Err(ScoreError::NonFiniteScore { v });
                }
                if score < 0.0 {
                    return Err(ScoreError::NegativeScore { v, score });
                }
                set.sort_unstable();
                if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                    return Err(ScoreError::RepeatedParent { v, parent: w[0] });
                }
                for &p in &set {
                    if p == v {
                        return Err(ScoreError::SelfParent { v });
                    }
                    if p as usize >= n {
                        return Err(ScoreError::ParentOutOfRange { v, parent: p, n });
                    }
                }
                canon.push((set, score));
            }
            canon.sort_by(|a, b| set_cmp(&a.0, &b.0));
            if canon.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(ScoreError::DuplicateSet { v });
            }
            listed.push(canon);
        }
        Ok(ScoreFunction { names, listed })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v as usize]
    }

    /// Listed sets of `v` in canonical order.
    pub fn listed(&self, v: NodeId) -> &[(Vec<NodeId>, Score)] {
        &self.listed[v as usize]
    }

    pub fn total_listed(&self) -> usize {
        self.listed.iter().map(Vec::len).sum()
    }

    fn empty_is_listed(&self, v: NodeId) -> bool {
        self.listed[v as usize]
            .first()
            .is_some_and(|(set, _)| set.is_empty())
    }

    /// Number of allowed parent sets of `v`: the listed ones plus the empty
    /// set, which counts exactly once whether or not it is listed.
    pub fn potential_count(&self, v: NodeId) -> usize {
        self.listed[v as usize].len() + usize::from(!self.empty_is_listed(v))
    }

    /// Allowed parent set by canonical index; index 0 is always the empty set.
    pub fn potential(&self, v: NodeId, idx: usize) -> (&[NodeId], Score) {
        static EMPTY: &[NodeId] = &[];
        if self.empty_is_listed(v) {
            let (set, score) = &self.listed[v as usize][idx];
            (set, *score)
        } else if idx == 0 {
            (EMPTY, 0.0)
        } else {
            let (set, score) = &self.listed[v as usize][idx - 1];
            (set, *score)
        }
    }

    /// Canonical index of `set` among the allowed sets of `v`, if allowed.
    pub fn potential_index_of(&self, v: NodeId, set: &[NodeId]) -> Option<usize> {
        let count = self.potential_count(v);
        (0..count).find(|&i| self.potential(v, i).0 == set)
    }

    /// Largest per-variable count of allowed parent sets.
    pub fn delta(&self) -> usize {
        (0..self.n() as NodeId)
            .map(|v| self.potential_count(v))
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// Score of choosing `set` (sorted) as the parents of `v`.
    pub fn lookup(&self, v: NodeId, set: &[NodeId]) -> Score {
        self.listed[v as usize]
            .binary_search_by(|(s, _)| set_cmp(s, set))
            .map(|i| self.listed[v as usize][i].1)
            .unwrap_or(0.0)
    }

    /// Arc (u, v) for every u in a listed set of v.
    pub fn directed_superstructure(&self) -> Digraph {
        let mut arcs = Vec::new();
        for (v, sets) in self.listed.iter().enumerate() {
            for (set, _) in sets {
                for &u in set {
                    arcs.push((u, v as NodeId));
                }
            }
        }
        Digraph::new(self.n(), arcs).expect("validated listings produce valid arcs")
    }

    pub fn superstructure(&self) -> UGraph {
        self.directed_superstructure().skeleton()
    }

    pub fn score_of(&self, dag: &Dag) -> Score {
        assert_eq!(dag.node_count(), self.n(), "dag is over a different node set");
        dag.parent_sets()
            .iter()
            .enumerate()
            .map(|(v, ps)| self.lookup(v as NodeId, ps))
            .sum()
    }

    pub fn classify(&self, dag: &Dag) -> Admissibility {
        assert_eq!(dag.node_count(), self.n(), "dag is over a different node set");
        let strict = dag
            .parent_sets()
            .iter()
            .enumerate()
            .all(|(v, ps)| self.potential_index_of(v as NodeId, ps).is_some());
        if strict {
            return Admissibility::StrictlyAdmissible;
        }
        let ss = self.superstructure();
        if dag.skeleton().is_subgraph_of(&ss) {
            Admissibility::Admissible
        } else {
            Admissibility::Inadmissible
        }
    }

    /// Drops every in-arc of each node whose parent set is not allowed.
    /// The result is strictly admissible and never scores lower.
    pub fn repair_to_strict(&self, dag: &Dag) -> Dag {
        let mut parents = dag.parent_sets();
        for (v, ps) in parents.iter_mut().enumerate() {
            if self.potential_index_of(v as NodeId, ps).is_none() {
                ps.clear();
            }
        }
        Dag::from_parent_sets(&parents).expect("arc deletion preserves acyclicity")
    }

    /// Removes listed sets that have a proper subset (listed or empty) with
    /// at least the same score. Ties prune toward the smaller set.
    pub fn prune_dominated(&self) -> ScoreFunction {
        let mut entries = Vec::with_capacity(self.n());
        for (v, sets) in self.listed.iter().enumerate() {
            let empty_score = self.lookup(v as NodeId, &[]);
            let kept: Vec<(Vec<NodeId>, Score)> = sets
                .iter()
                .filter(|(set, score)| {
                    if set.is_empty() {
                        return true;
                    }
                    if empty_score >= *score {
                        return false;
                    }
                    !sets.iter().any(|(other, other_score)| {
                        !other.is_empty()
                            && other.len() < set.len()
                            && *other_score >= *score
                            && is_subset(other, set)
                    })
                })
                .cloned()
                .collect();
            entries.push(kept);
        }
        ScoreFunction {
            names: self.names.clone(),
            listed: entries,
        }
    }

    /// Drops every listed set with more than `c` members.
    pub fn restrict_indegree(&self, c: usize) -> ScoreFunction {
        let listed = self
            .listed
            .iter()
            .map(|sets| sets.iter().filter(|(s, _)| s.len() <= c).cloned().collect())
            .collect();
        ScoreFunction {
            names: self.names.clone(),
            listed,
        }
    }
}

/// True if sorted slice `a` is a subset of sorted slice `b`.
pub(crate) fn is_subset(a: &[NodeId], b: &[NodeId]) -> bool {
    let mut it = b.iter();
    'outer: for x in a {
        for y in it.by_ref() {
            match y.cmp(x) {
                Ordering::Less => continue,
                Ordering::Equal => continue 'outer,
                Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

impl RawScoreFunction {
    /// Per-variable shift into the non-negative model. Each variable's
    /// listed values (and the implicit value of the empty set) move up by
    /// `max(0, -min)`, and the empty set becomes explicitly listed. Dags
    /// that only use previously-listed-or-empty parent sets keep their
    /// relative order; never-listed sets become score-0 competitors.
    pub fn shift_normalize(&self) -> Result<ScoreFunction, ScoreError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for sets in &self.entries {
            let empty_listed = sets.iter().find(|(s, _)| s.is_empty());
            let empty_value = empty_listed.map(|(_, w)| *w).unwrap_or(0.0);
            let min = sets
                .iter()
                .map(|(_, w)| *w)
                .fold(empty_value, f64::min);
            let shift = (-min).max(0.0);
            let mut shifted: Vec<(Vec<NodeId>, f64)> = sets
                .iter()
                .map(|(s, w)| (s.clone(), w + shift))
                .collect();
            if empty_listed.is_none() {
                shifted.push((Vec::new(), shift));
            }
            entries.push(shifted);
        }
        ScoreFunction::new(self.names.clone(), entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three variables; optimum 5 via A -> B, A -> C, B -> C.
    fn f1() -> ScoreFunction {
        ScoreFunction::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                vec![],
                vec![(vec![0], 2.0)],
                vec![(vec![0, 1], 3.0), (vec![1], 1.0)],
            ],
        )
        .unwrap()
    }

    /// Two variables in a tie: either arc scores 1.
    fn f2() -> ScoreFunction {
        ScoreFunction::new(
            vec!["X".into(), "Y".into()],
            vec![(vec![(vec![1], 1.0)]), (vec![(vec![0], 1.0)])],
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_listings() {
        let names = vec!["A".into(), "B".into()];
        assert!(matches!(
            ScoreFunction::new(names.clone(), vec![vec![(vec![0], 1.0)], vec![]]),
            Err(ScoreError::SelfParent { v: 0 })
        ));
        assert!(matches!(
            ScoreFunction::new(names.clone(), vec![vec![(vec![1], -2.0)], vec![]]),
            Err(ScoreError::NegativeScore { v: 0, .. })
        ));
        assert!(matches!(
            ScoreFunction::new(
                names.clone(),
                vec![vec![(vec![1], 1.0), (vec![1], 2.0)], vec![]]
            ),
            Err(ScoreError::DuplicateSet { v: 0 })
        ));
        assert!(matches!(
            ScoreFunction::new(names.clone(), vec![vec![(vec![1, 1], 1.0)], vec![]]),
            Err(ScoreError::RepeatedParent { v: 0, parent: 1 })
        ));
        assert!(matches!(
            ScoreFunction::new(names, vec![vec![(vec![7], 1.0)], vec![]]),
            Err(ScoreError::ParentOutOfRange { v: 0, parent: 7, n: 2 })
        ));
    }

    #[test]
    fn zero_valued_listed_set_is_accepted() {
        let f = ScoreFunction::new(
            vec!["A".into(), "B".into()],
            vec![vec![(vec![1], 0.0)], vec![]],
        )
        .unwrap();
        assert_eq!(f.potential_count(0), 2);
    }

    #[test]
    fn delta_counts_empty_once() {
        assert_eq!(f1().delta(), 3);
        assert_eq!(f2().delta(), 2);
        let empty = ScoreFunction::new(vec!["A".into(), "B".into()], vec![vec![], vec![]]).unwrap();
        assert_eq!(empty.delta(), 1);
        // Listing the empty set does not double-count it.
        let f = ScoreFunction::new(
            vec!["A".into(), "B".into()],
            vec![vec![(vec![], 4.0), (vec![1], 5.0)], vec![]],
        )
        .unwrap();
        assert_eq!(f.potential_count(0), 2);
        assert_eq!(f.potential(0, 0), (&[][..], 4.0));
    }

    #[test]
    fn delta_bounded_by_listing_size() {
        for f in [f1(), f2()] {
            assert!(f.delta() <= f.total_listed() + 1);
        }
    }

    #[test]
    fn superstructure_of_f1_is_triangle() {
        let ss = f1().superstructure();
        assert_eq!(ss.edges(), &[(0, 1), (0, 2), (1, 2)]);
        let dss = f1().directed_superstructure();
        assert_eq!(dss.arcs(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(dss.is_acyclic());
    }

    #[test]
    fn score_of_examples() {
        let f = f1();
        assert_eq!(f.score_of(&Dag::empty(3)), 0.0);
        let best = Dag::from_arcs(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(f.score_of(&best), 5.0);
        // Unlisted parent set contributes nothing.
        let odd = Dag::from_arcs(3, [(0, 2)]).unwrap();
        assert_eq!(f.score_of(&odd), 0.0);
    }

    #[test]
    fn classify_examples() {
        let f = f1();
        let best = Dag::from_arcs(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(f.classify(&best), Admissibility::StrictlyAdmissible);
        // Skeleton edge {A,B} exists but {B} is not a listed set of A.
        let back = Dag::from_arcs(3, [(1, 0)]).unwrap();
        assert_eq!(f.classify(&back), Admissibility::Admissible);
        let off = Dag::from_arcs(3, [(2, 0), (1, 0)]).unwrap();
        assert_eq!(f.classify(&off), Admissibility::Admissible);
        // No listed set of any node pairs B with... actually {B,C} pair:
        // C lists {B}, so edge {B,C} is in the super-structure; use a
        // function without it to get inadmissible.
        let g = ScoreFunction::new(
            vec!["A".into(), "B".into()],
            vec![vec![], vec![]],
        )
        .unwrap();
        let d = Dag::from_arcs(2, [(0, 1)]).unwrap();
        assert_eq!(g.classify(&d), Admissibility::Inadmissible);
    }

    #[test]
    fn repair_drops_unlisted_parent_sets() {
        let f = f1();
        let odd = Dag::from_arcs(3, [(0, 2)]).unwrap();
        let fixed = f.repair_to_strict(&odd);
        assert_eq!(fixed.arc_count(), 0);
        assert_eq!(f.classify(&fixed), Admissibility::StrictlyAdmissible);
        // Score never decreases.
        assert!(f.score_of(&fixed) >= f.score_of(&odd));
    }

    #[test]
    fn prune_dominated_examples() {
        let f = ScoreFunction::new(
            vec!["a".into(), "b".into(), "v".into()],
            vec![
                vec![],
                vec![],
                vec![(vec![0], 5.0), (vec![0, 1], 3.0)],
            ],
        )
        .unwrap();
        let pruned = f.prune_dominated();
        assert_eq!(pruned.listed(2), &[(vec![0], 5.0)]);

        // Ties prune toward the smaller set.
        let g = ScoreFunction::new(
            vec!["a".into(), "b".into(), "v".into()],
            vec![
                vec![],
                vec![],
                vec![(vec![0], 2.0), (vec![0, 1], 2.0)],
            ],
        )
        .unwrap();
        assert_eq!(g.prune_dominated().listed(2), &[(vec![0], 2.0)]);

        // F1 has no dominated sets.
        assert_eq!(f1().prune_dominated(), f1());

        // The empty set dominates zero-valued sets.
        let h = ScoreFunction::new(
            vec!["a".into(), "v".into()],
            vec![vec![], vec![(vec![0], 0.0)]],
        )
        .unwrap();
        assert!(h.prune_dominated().listed(1).is_empty());
    }

    #[test]
    fn restrict_indegree_drops_large_sets() {
        let f = f1().restrict_indegree(1);
        assert_eq!(f.listed(2), &[(vec![1], 1.0)]);
        assert_eq!(f1().restrict_indegree(0).total_listed(), 0);
    }

    #[test]
    fn shift_normalize_example() {
        let raw = RawScoreFunction {
            names: vec!["v".into(), "a".into()],
            entries: vec![vec![(vec![1], -3.0)], vec![]],
        };
        let f = raw.shift_normalize().unwrap();
        assert_eq!(f.listed(0), &[(vec![], 3.0), (vec![1], 0.0)]);
        assert_eq!(f.listed(1), &[(vec![], 0.0)]);
    }

    #[test]
    fn shift_normalize_keeps_nonnegative_inputs() {
        let raw = RawScoreFunction {
            names: vec!["v".into(), "a".into()],
            entries: vec![vec![(vec![1], 2.0)], vec![]],
        };
        let f = raw.shift_normalize().unwrap();
        assert_eq!(f.listed(0), &[(vec![], 0.0), (vec![1], 2.0)]);
    }

    #[test]
    fn shift_normalize_preserves_argmax_on_two_variables() {
        // All dags on two nodes: empty, 0->1, 1->0. Score each under the raw
        // listing (unlisted nonempty sets excluded from the comparison set)
        // and under the shifted one; the argmax set must agree.
        let raw = RawScoreFunction {
            names: vec!["u".into(), "v".into()],
            entries: vec![vec![(vec![1], -1.0)], vec![(vec![0], -4.0)]],
        };
        let f = raw.shift_normalize().unwrap();
        let raw_score = |pu: Option<f64>, pv: Option<f64>| pu.unwrap_or(0.0) + pv.unwrap_or(0.0);
        let before = [
            raw_score(None, None),
            raw_score(None, Some(-4.0)),
            raw_score(Some(-1.0), None),
        ];
        let after = [
            f.score_of(&Dag::empty(2)),
            f.score_of(&Dag::from_arcs(2, [(0, 1)]).unwrap()),
            f.score_of(&Dag::from_arcs(2, [(1, 0)]).unwrap()),
        ];
        let argmax = |xs: &[f64]| {
            let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            xs.iter()
                .enumerate()
                .filter(|(_, &x)| x == m)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        assert_eq!(argmax(&before), argmax(&after));
    }

    #[test]
    fn is_subset_basics() {
        assert!(is_subset(&[], &[1, 2]));
        assert!(is_subset(&[2], &[1, 2, 3]));
        assert!(!is_subset(&[0], &[1, 2]));
        assert!(!is_subset(&[1, 4], &[1, 2, 3]));
    }
}
