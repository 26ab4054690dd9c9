//! Brute-force reference solvers. Deliberately naive and kept independent
//! of the record dynamic program so they can vouch for it; every oracle has
//! a hard size limit and errs rather than truncating.

use thiserror::Error;

use crate::cnf::Cnf;
use crate::graph::{Dag, Digraph, NodeId, UGraph};
use crate::score::{Score, ScoreFunction};

pub const ENUMERATION_NODE_LIMIT: usize = 6;
pub const SUBSET_DP_NODE_LIMIT: usize = 20;
pub const FAS_ARC_LIMIT: usize = 22;
pub const INDSET_NODE_LIMIT: usize = 16;
pub const CLIQUE_PART_LIMIT: usize = 4;
pub const CNF_VAR_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {n} nodes, above the oracle limit {limit}")]
    TooManyNodes { n: usize, limit: usize },
    #[error("digraph has {arcs} arcs, above the oracle limit {limit}")]
    TooManyArcs { arcs: usize, limit: usize },
    #[error("formula has {n} variables, above the oracle limit {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("{parts} parts of size {size}, above the oracle limit {limit}")]
    PartitionTooLarge { parts: usize, size: usize, limit: usize },
    #[error("parts must share one size and partition the nodes: {reason}")]
    PartitionInvalid { reason: String },
    #[error("literal {lit} fills {count} clause slots, more than two")]
    OccurrenceBound { lit: String, count: usize },
}

/// Exhaustive maximum over labeled dags, driven by topological orders:
/// within a fixed order every node independently takes its best allowed
/// parent set among its predecessors, and unlisted sets never help.
pub fn optimal_by_enumeration(f: &ScoreFunction) -> Result<(Score, Dag), OracleError> {
    let n = f.n();
    if n > ENUMERATION_NODE_LIMIT {
        return Err(OracleError::TooManyNodes { n, limit: ENUMERATION_NODE_LIMIT });
    }
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    loop {
        let mut preds = vec![false; n];
        let mut total = 0.0;
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &v in &order {
            let mut node_best = 0usize;
            let mut node_score = f.potential(v, 0).1;
            for idx in 1..f.potential_count(v) {
                let (set, s) = f.potential(v, idx);
                if s > node_score && set.iter().all(|&u| preds[u as usize]) {
                    node_best = idx;
                    node_score = s;
                }
            }
            total += node_score;
            parents[v as usize] = f.potential(v, node_best).0.to_vec();
            preds[v as usize] = true;
        }
        if total > best_score {
            best_score = total;
            best_parents = parents;
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    if n == 0 {
        best_score = 0.0;
    }
    let dag = Dag::from_parent_sets(&best_parents).expect("order-consistent parents are acyclic");
    Ok((best_score, dag))
}

/// Lexicographic successor; false once the order was the last one.
fn next_permutation(xs: &mut [NodeId]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

/// Bellman recursion over node subsets: the best network on S ends in some
/// sink v whose parents come from S minus v.
pub fn optimal_by_subset_dp(f: &ScoreFunction) -> Result<(Score, Dag), OracleError> {
    let n = f.n();
    if n > SUBSET_DP_NODE_LIMIT {
        return Err(OracleError::TooManyNodes { n, limit: SUBSET_DP_NODE_LIMIT });
    }
    if n == 0 {
        return Ok((0.0, Dag::empty(0)));
    }
    // Allowed sets as bitmasks, canonical index order per node.
    let masks: Vec<Vec<u32>> = (0..n as NodeId)
        .map(|v| {
            (0..f.potential_count(v))
                .map(|idx| {
                    f.potential(v, idx).0.iter().fold(0u32, |m, &u| m | 1 << u)
                })
                .collect()
        })
        .collect();

    let full = (1usize << n) - 1;
    let mut best = vec![f64::NEG_INFINITY; full + 1];
    let mut sink: Vec<u8> = vec![u8::MAX; full + 1];
    let mut chosen: Vec<u16> = vec![0; full + 1];
    best[0] = 0.0;
    for s in 1..=full {
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let rest_mask = rest as u32;
            let mut node_best = 0usize;
            let mut node_score = f.potential(v as NodeId, 0).1;
            for (idx, &mask) in masks[v].iter().enumerate().skip(1) {
                if mask & !rest_mask == 0 {
                    let (_, sc) = f.potential(v as NodeId, idx);
                    if sc > node_score {
                        node_best = idx;
                        node_score = sc;
                    }
                }
            }
            let cand = best[rest] + node_score;
            if cand > best[s] {
                best[s] = cand;
                sink[s] = v as u8;
                chosen[s] = node_best as u16;
            }
        }
    }
    let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut s = full;
    while s != 0 {
        let v = sink[s] as usize;
        parents[v] = f.potential(v as NodeId, chosen[s] as usize).0.to_vec();
        s &= !(1 << v);
    }
    let dag = Dag::from_parent_sets(&parents).expect("sink-ordered parents are acyclic");
    Ok((best[full], dag))
}

/// Smallest number of arcs to delete for acyclicity, by ascending-size arc
/// subset enumeration.
pub fn min_fas_bruteforce(d: &Digraph) -> Result<usize, OracleError> {
    let m = d.arc_count();
    if m > FAS_ARC_LIMIT {
        return Err(OracleError::TooManyArcs { arcs: m, limit: FAS_ARC_LIMIT });
    }
    if d.is_acyclic() {
        return Ok(0);
    }
    let arcs = d.arcs();
    let acyclic_without = |removed: u32| {
        let kept: Vec<(NodeId, NodeId)> = arcs
            .iter()
            .enumerate()
            .filter(|(i, _)| removed >> i & 1 == 0)
            .map(|(_, &a)| a)
            .collect();
        Digraph::new(d.node_count(), kept).map(|g| g.is_acyclic()).unwrap_or(false)
    };
    for r in 1..=m {
        // Gosper's hack walks all m-bit masks of popcount r in order.
        let mut mask: u32 = (1 << r) - 1;
        while mask < 1 << m {
            if acyclic_without(mask) {
                return Ok(r);
            }
            let c = mask & mask.wrapping_neg();
            let rr = mask + c;
            mask = (((rr ^ mask) >> 2) / c) | rr;
        }
    }
    unreachable!("removing all arcs always yields an acyclic digraph")
}

/// True when `g` has an independent set of at least `k` nodes.
pub fn max_indset_bruteforce(g: &UGraph, k: usize) -> Result<bool, OracleError> {
    let n = g.node_count();
    if n > INDSET_NODE_LIMIT {
        return Err(OracleError::TooManyNodes { n, limit: INDSET_NODE_LIMIT });
    }
    if k == 0 {
        return Ok(true);
    }
    if k > n {
        return Ok(false);
    }
    let mut adj = vec![0u32; n];
    for &(u, v) in g.edges() {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    for mask in 0u32..1 << n {
        if (mask.count_ones() as usize) < k {
            continue;
        }
        let mut bits = mask;
        let mut independent = true;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if adj[v] & mask != 0 {
                independent = false;
                break;
            }
        }
        if independent {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True when one node per part forms a clique. Parts must have equal sizes
/// and partition the graph's nodes.
pub fn partitioned_clique_bruteforce(
    g: &UGraph,
    parts: &[Vec<NodeId>],
) -> Result<bool, OracleError> {
    let k = parts.len();
    let size = parts.first().map(Vec::len).unwrap_or(0);
    if k > CLIQUE_PART_LIMIT || size > CLIQUE_PART_LIMIT {
        return Err(OracleError::PartitionTooLarge { parts: k, size, limit: CLIQUE_PART_LIMIT });
    }
    if let Some(bad) = parts.iter().find(|p| p.len() != size) {
        return Err(OracleError::PartitionInvalid {
            reason: format!("part of size {} next to parts of size {size}", bad.len()),
        });
    }
    let mut seen = vec![false; g.node_count()];
    for part in parts {
        for &v in part {
            if v as usize >= g.node_count() || seen[v as usize] {
                return Err(OracleError::PartitionInvalid {
                    reason: format!("node {v} repeated or out of range"),
                });
            }
            seen[v as usize] = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(OracleError::PartitionInvalid { reason: "nodes left uncovered".into() });
    }
    if k == 0 {
        return Ok(true);
    }
    let mut pick = vec![0usize; k];
    loop {
        let nodes: Vec<NodeId> = (0..k).map(|i| parts[i][pick[i]]).collect();
        let mut clique = true;
        'pairs: for i in 0..k {
            for j in i + 1..k {
                if !g.has_edge(nodes[i], nodes[j]) {
                    clique = false;
                    break 'pairs;
                }
            }
        }
        if clique {
            return Ok(true);
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(false);
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < size {
                break;
            }
            pick[i] = 0;
        }
    }
}

/// Assignment enumeration. With `enforce_occurrence_bound`, formulas where
/// some literal fills more than two slots are rejected up front.
pub fn cnf_sat_bruteforce(cnf: &Cnf, enforce_occurrence_bound: bool) -> Result<bool, OracleError> {
    let n = cnf.n_vars();
    if n > CNF_VAR_LIMIT {
        return Err(OracleError::TooManyVariables { n, limit: CNF_VAR_LIMIT });
    }
    if enforce_occurrence_bound {
        if let Err(crate::cnf::CnfError::OccurrenceBound { lit, count }) =
            cnf.check_occurrence_bound()
        {
            return Err(OracleError::OccurrenceBound { lit, count });
        }
    }
    let mut assignment = vec![false; n];
    for mask in 0u32..1 << n {
        for (v, slot) in assignment.iter_mut().enumerate() {
            *slot = mask >> v & 1 == 1;
        }
        if cnf.eval(&assignment) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Lit;
    use crate::solver::{solve_exact, solve_acyclic};
    use crate::treedecomp::{make_nice, minfill_decomposition};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

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

    fn f2() -> ScoreFunction {
        ScoreFunction::new(
            vec!["X".into(), "Y".into()],
            vec![vec![(vec![1], 1.0)], vec![(vec![0], 1.0)]],
        )
        .unwrap()
    }

    fn random_instance(rng: &mut StdRng, n: usize) -> ScoreFunction {
        let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = vec![Vec::new(); n];
        for v in 0..n as NodeId {
            let mut sets: Vec<Vec<NodeId>> = Vec::new();
            for _ in 0..rng.gen_range(0..=4) {
                let set: Vec<NodeId> = (0..n as NodeId)
                    .filter(|&u| u != v && rng.gen_bool(0.35))
                    .collect();
                if !set.is_empty() && !sets.contains(&set) {
                    sets.push(set.clone());
                    entries[v as usize].push((set, rng.gen_range(0..12) as f64));
                }
            }
        }
        let names = (0..n).map(|i| format!("v{i}")).collect();
        ScoreFunction::new(names, entries).unwrap()
    }

    #[test]
    fn enumeration_on_fixtures() {
        assert_eq!(optimal_by_enumeration(&f1()).unwrap().0, 5.0);
        assert_eq!(optimal_by_enumeration(&f2()).unwrap().0, 1.0);
        let empty = ScoreFunction::new(
            (0..4).map(|i| format!("n{i}")).collect(),
            vec![vec![]; 4],
        )
        .unwrap();
        let (score, dag) = optimal_by_enumeration(&empty).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(dag.arc_count(), 0);
        let big = ScoreFunction::new((0..7).map(|i| format!("n{i}")).collect(), vec![vec![]; 7])
            .unwrap();
        assert!(matches!(
            optimal_by_enumeration(&big),
            Err(OracleError::TooManyNodes { n: 7, .. })
        ));
    }

    #[test]
    fn subset_dp_on_fixtures() {
        assert_eq!(optimal_by_subset_dp(&f1()).unwrap().0, 5.0);
        assert_eq!(optimal_by_subset_dp(&f2()).unwrap().0, 1.0);
    }

    #[test]
    fn subset_dp_matches_enumeration_on_randoms() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..80 {
            let n = rng.gen_range(1..=6);
            let f = random_instance(&mut rng, n);
            let (a, dag_a) = optimal_by_enumeration(&f).unwrap();
            let (b, dag_b) = optimal_by_subset_dp(&f).unwrap();
            assert_eq!(a, b);
            assert_eq!(f.score_of(&dag_a), a);
            assert_eq!(f.score_of(&dag_b), b);
        }
    }

    #[test]
    fn oracles_vouch_for_the_solvers_on_randoms() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..40 {
            let n = rng.gen_range(1..=6);
            let f = random_instance(&mut rng, n);
            let (want, _) = optimal_by_enumeration(&f).unwrap();
            let g = f.superstructure();
            let ntd = make_nice(&minfill_decomposition(&g), &g).unwrap();
            let (got, dag, _) = solve_exact(&f, &ntd).unwrap();
            assert_eq!(got, want);
            assert_eq!(f.score_of(&dag), want);
            if f.directed_superstructure().is_acyclic() {
                assert_eq!(solve_acyclic(&f).unwrap().0, want);
            }
        }
    }

    #[test]
    fn fas_bruteforce_examples() {
        let two_cycle = Digraph::new(2, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(min_fas_bruteforce(&two_cycle).unwrap(), 1);
        let dag = Digraph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(min_fas_bruteforce(&dag).unwrap(), 0);
        let disjoint = Digraph::new(4, vec![(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        assert_eq!(min_fas_bruteforce(&disjoint).unwrap(), 2);
        let k3_cyclic = Digraph::new(3, vec![(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
        assert_eq!(min_fas_bruteforce(&k3_cyclic).unwrap(), 1);
    }

    #[test]
    fn fas_zero_iff_acyclic() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..60 {
            let n = rng.gen_range(2..=5);
            let mut arcs = Vec::new();
            for u in 0..n as NodeId {
                for v in 0..n as NodeId {
                    if u != v && rng.gen_bool(0.3) {
                        arcs.push((u, v));
                    }
                }
            }
            arcs.truncate(FAS_ARC_LIMIT);
            let d = Digraph::new(n, arcs).unwrap();
            assert_eq!(min_fas_bruteforce(&d).unwrap() == 0, d.is_acyclic());
        }
    }

    #[test]
    fn indset_bruteforce_examples() {
        let triangle = UGraph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        assert!(!max_indset_bruteforce(&triangle, 2).unwrap());
        let path = UGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert!(max_indset_bruteforce(&path, 2).unwrap());
        let edgeless = UGraph::new(3, vec![]).unwrap();
        assert!(max_indset_bruteforce(&edgeless, 3).unwrap());
        assert!(!max_indset_bruteforce(&edgeless, 4).unwrap());
    }

    #[test]
    fn clique_bruteforce_examples() {
        // Complete tripartite with parts of size 1 is a triangle.
        let triangle = UGraph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let parts = vec![vec![0], vec![1], vec![2]];
        assert!(partitioned_clique_bruteforce(&triangle, &parts).unwrap());
        let missing = UGraph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        assert!(!partitioned_clique_bruteforce(&missing, &parts).unwrap());
        let unequal = vec![vec![0, 1], vec![2]];
        assert!(matches!(
            partitioned_clique_bruteforce(&triangle, &unequal),
            Err(OracleError::PartitionInvalid { .. })
        ));
    }

    #[test]
    fn clique_bruteforce_agrees_with_triple_enumeration() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..40 {
            // k = 3 parts of size 2 over nodes 0..6.
            let n = 6;
            let mut edges = Vec::new();
            for u in 0..n as NodeId {
                for v in u + 1..n as NodeId {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            let g = UGraph::new(n, edges).unwrap();
            let parts = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
            let direct = parts[0].iter().any(|&a| {
                parts[1].iter().any(|&b| {
                    parts[2]
                        .iter()
                        .any(|&c| g.has_edge(a, b) && g.has_edge(a, c) && g.has_edge(b, c))
                })
            });
            assert_eq!(partitioned_clique_bruteforce(&g, &parts).unwrap(), direct);
        }
    }

    #[test]
    fn cnf_bruteforce_examples() {
        let c1 = Cnf::new(3, vec![[Lit::pos(0), Lit::pos(1), Lit::pos(2)]]).unwrap();
        assert!(cnf_sat_bruteforce(&c1, true).unwrap());
        // (x) and (not x), padded to three slots.
        let c2 = Cnf::new(
            1,
            vec![
                [Lit::pos(0), Lit::pos(0), Lit::pos(0)],
                [Lit::neg(0), Lit::neg(0), Lit::neg(0)],
            ],
        )
        .unwrap();
        assert!(!cnf_sat_bruteforce(&c2, false).unwrap());
        assert!(matches!(
            cnf_sat_bruteforce(&c2, true),
            Err(OracleError::OccurrenceBound { .. })
        ));
        let empty = Cnf::new(0, vec![]).unwrap();
        assert!(cnf_sat_bruteforce(&empty, true).unwrap());
    }
}
