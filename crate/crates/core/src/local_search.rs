//! Bounded-edit neighborhood search. A k-step neighbor of a network is any
//! dag reachable by at most k operations from an operation set (arc
//! additions, deletions, reversals); only the final arc set must be acyclic,
//! so an edit batch may pass through a cyclic intermediate. Three searchers
//! share that semantics: a subset-enumerating brute force, a polynomial
//! single-node scan for pure addition or pure deletion, and a record dynamic
//! program that threads edit budgets through the exact solver's tables.
//!
//! All searchers look for strictly better neighbors whose parent sets stay
//! within the score listing; starting from a dag with unlisted parent sets
//! the brute force and the DP agree with each other but can differ from the
//! single-node scan, which never inspects other nodes' sets.

use std::collections::BTreeSet;
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::graph::{Dag, NodeId};
use crate::score::{is_subset, Admissibility, Score, ScoreFunction};
use crate::solver::{
    close, leaf_table, reflexive, spread_pos, AVec, PRows, Provenance, SolveError, BAG_LIMIT,
};
use crate::treedecomp::{audit_nice, NiceKind, NiceTreeDecomposition};

/// Cap on the number of operation subsets the brute force will visit.
pub const BRUTE_FORCE_SUBSET_LIMIT: u128 = 4_000_000;
/// Cap on super-structure degree for the DP: each record keeps one bit per
/// neighbor of a bag node.
pub const NEIGHBOR_DEGREE_LIMIT: usize = 32;

/// A set of permitted arc operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSet {
    bits: u8,
}

impl OpSet {
    pub const EMPTY: OpSet = OpSet { bits: 0 };
    pub const ADD: OpSet = OpSet { bits: 1 };
    pub const DEL: OpSet = OpSet { bits: 2 };
    pub const REV: OpSet = OpSet { bits: 4 };

    pub const fn union(self, other: OpSet) -> OpSet {
        OpSet { bits: self.bits | other.bits }
    }

    pub const fn has_add(self) -> bool {
        self.bits & OpSet::ADD.bits != 0
    }

    pub const fn has_del(self) -> bool {
        self.bits & OpSet::DEL.bits != 0
    }

    pub const fn has_rev(self) -> bool {
        self.bits & OpSet::REV.bits != 0
    }

    pub const fn is_empty(self) -> bool {
        self.bits == 0
    }

    /// The empty set and the pure single-operation sets {ADD} and {DEL} are
    /// the trivial cases (their search problems are polynomial); everything
    /// else is nontrivial.
    pub fn is_nontrivial(self) -> bool {
        !(self == OpSet::EMPTY || self == OpSet::ADD || self == OpSet::DEL)
    }

    /// All five nontrivial operation sets.
    pub fn nontrivial_sets() -> [OpSet; 5] {
        [
            OpSet::REV,
            OpSet::ADD.union(OpSet::DEL),
            OpSet::ADD.union(OpSet::REV),
            OpSet::DEL.union(OpSet::REV),
            OpSet::ADD.union(OpSet::DEL).union(OpSet::REV),
        ]
    }
}

impl fmt::Display for OpSet {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.has_add() {
            parts.push("add");
        }
        if self.has_del() {
            parts.push("del");
        }
        if self.has_rev() {
            parts.push("rev");
        }
        write!(out, "{{{}}}", parts.join(","))
    }
}

/// Minimum operation count between two arc sets; `Infeasible` when some
/// required operation is not in the set. Derived order puts every finite
/// cost below `Infeasible`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EditCost {
    Finite(usize),
    Infeasible,
}

impl EditCost {
    pub fn finite(self) -> Option<usize> {
        match self {
            EditCost::Finite(c) => Some(c),
            EditCost::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalSearchError {
    #[error("dag has {dag} nodes, score function has {score}")]
    NodeCountMismatch { dag: usize, score: usize },
    #[error("starting dag has a skeleton edge outside the super-structure")]
    InadmissibleStart,
    #[error("{count} candidate operation subsets, above the limit {limit}")]
    TooManyCandidates { count: u128, limit: u128 },
    #[error("node {node} has super-structure degree {degree}, above the limit {limit}")]
    DegreeTooHigh { node: NodeId, degree: usize, limit: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Pure-addition or pure-deletion scan direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Add,
    Del,
}

// Orientation of one node pair: 0 absent, 1 forward, 2 backward. Forward
// means the first node of the pair points at the second.
fn pair_state(forward: bool, backward: bool) -> u8 {
    debug_assert!(!(forward && backward), "a dag cannot hold a two-cycle");
    if forward {
        1
    } else if backward {
        2
    } else {
        0
    }
}

fn pair_edit_cost(from: u8, to: u8, ops: OpSet) -> EditCost {
    if from == to {
        EditCost::Finite(0)
    } else if from == 0 {
        if ops.has_add() {
            EditCost::Finite(1)
        } else {
            EditCost::Infeasible
        }
    } else if to == 0 {
        if ops.has_del() {
            EditCost::Finite(1)
        } else {
            EditCost::Infeasible
        }
    } else if ops.has_rev() {
        EditCost::Finite(1)
    } else if ops.has_add() && ops.has_del() {
        EditCost::Finite(2)
    } else {
        EditCost::Infeasible
    }
}

/// Minimum number of operations from `ops` turning the arcs of `d1` into
/// the arcs of `d2`. Pairs are independent, so the minimum is the sum of
/// per-pair costs: a reversed pair costs one reversal, or an addition plus
/// a deletion when reversals are unavailable.
pub fn neighbor_distance(d1: &Dag, d2: &Dag, ops: OpSet) -> EditCost {
    assert_eq!(d1.node_count(), d2.node_count(), "dags must share one node set");
    let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for &(u, v) in d1.arcs().iter().chain(d2.arcs().iter()) {
        pairs.insert(if u < v { (u, v) } else { (v, u) });
    }
    let mut total = 0usize;
    for (u, v) in pairs {
        let from = pair_state(d1.has_arc(u, v), d1.has_arc(v, u));
        let to = pair_state(d2.has_arc(u, v), d2.has_arc(v, u));
        match pair_edit_cost(from, to, ops) {
            EditCost::Finite(c) => total += c,
            EditCost::Infeasible => return EditCost::Infeasible,
        }
    }
    EditCost::Finite(total)
}

#[derive(Debug, Clone, Copy)]
enum EditOp {
    Add((NodeId, NodeId)),
    Del((NodeId, NodeId)),
    Rev((NodeId, NodeId)),
}

fn check_start(f: &ScoreFunction, d: &Dag) -> Result<(), LocalSearchError> {
    if d.node_count() != f.n() {
        return Err(LocalSearchError::NodeCountMismatch { dag: d.node_count(), score: f.n() });
    }
    if f.classify(d) == Admissibility::Inadmissible {
        return Err(LocalSearchError::InadmissibleStart);
    }
    Ok(())
}

/// Enumerates operation subsets of size one through k and returns the first
/// result that is acyclic, keeps every parent set listed or empty, and
/// scores strictly higher than `d`. Returns `None` when no subset does.
pub fn brute_force_step(
    f: &ScoreFunction,
    d: &Dag,
    k: usize,
    ops: OpSet,
) -> Result<Option<Dag>, LocalSearchError> {
    check_start(f, d)?;
    let mut universe: Vec<EditOp> = Vec::new();
    if ops.has_del() {
        universe.extend(d.arcs().iter().map(|&a| EditOp::Del(a)));
    }
    if ops.has_rev() {
        universe.extend(d.arcs().iter().map(|&a| EditOp::Rev(a)));
    }
    if ops.has_add() {
        let mut candidates: Vec<(NodeId, NodeId)> = f
            .directed_superstructure()
            .arcs()
            .iter()
            .copied()
            .filter(|&(u, v)| !d.has_arc(u, v))
            .collect();
        candidates.sort_unstable();
        universe.extend(candidates.into_iter().map(EditOp::Add));
    }

    let m = universe.len();
    let depth = k.min(m);
    let mut subsets: u128 = 0;
    let mut binom: u128 = 1;
    for i in 1..=depth {
        binom = binom.saturating_mul((m - i + 1) as u128) / i as u128;
        subsets = subsets.saturating_add(binom);
    }
    if subsets > BRUTE_FORCE_SUBSET_LIMIT {
        return Err(LocalSearchError::TooManyCandidates {
            count: subsets,
            limit: BRUTE_FORCE_SUBSET_LIMIT,
        });
    }

    let current = f.score_of(d);
    let base: BTreeSet<(NodeId, NodeId)> = d.arcs().iter().copied().collect();
    for size in 1..=depth {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            if let Some(dag) = apply_edits(f, &base, &universe, &comb, current) {
                return Ok(Some(dag));
            }
            if !next_combination(&mut comb, m) {
                break;
            }
        }
    }
    Ok(None)
}

fn next_combination(comb: &mut [usize], m: usize) -> bool {
    let size = comb.len();
    let mut i = size;
    while i > 0 {
        i -= 1;
        if comb[i] < m - size + i {
            comb[i] += 1;
            for j in i + 1..size {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Applies a batch of operations as one set edit (removals before
/// insertions, so a reversal lands even next to other edits on the same
/// pair) and validates the outcome.
fn apply_edits(
    f: &ScoreFunction,
    base: &BTreeSet<(NodeId, NodeId)>,
    universe: &[EditOp],
    comb: &[usize],
    current: Score,
) -> Option<Dag> {
    let mut arcs = base.clone();
    for &i in comb {
        match universe[i] {
            EditOp::Del(e) | EditOp::Rev(e) => {
                arcs.remove(&e);
            }
            EditOp::Add(_) => {}
        }
    }
    for &i in comb {
        match universe[i] {
            EditOp::Add(e) => {
                arcs.insert(e);
            }
            EditOp::Rev((u, v)) => {
                arcs.insert((v, u));
            }
            EditOp::Del(_) => {}
        }
    }
    let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); f.n()];
    for &(u, v) in &arcs {
        parents[v as usize].push(u);
    }
    for (v, set) in parents.iter_mut().enumerate() {
        set.sort_unstable();
        f.potential_index_of(v as NodeId, set)?;
    }
    let dag = Dag::from_parent_sets(&parents).ok()?;
    if f.score_of(&dag) > current {
        Some(dag)
    } else {
        None
    }
}

/// Polynomial improvement scan for a single direction: one node swaps its
/// parent set for a listed superset (Add) or a listed-or-empty subset (Del)
/// within k arc changes. Returns the largest single-node gain, earliest
/// node and listing position on ties. Agrees with the brute force on
/// whether an improving pure-addition (pure-deletion) neighbor exists,
/// because any improving batch already contains a node whose own summand
/// increased.
pub fn monotone_step(
    f: &ScoreFunction,
    d: &Dag,
    k: usize,
    direction: Direction,
) -> Result<Option<Dag>, LocalSearchError> {
    check_start(f, d)?;
    let psets = d.parent_sets();
    let mut best: Option<(Score, Dag)> = None;
    for v in 0..f.n() as NodeId {
        let cur = &psets[v as usize];
        let cur_score = f.lookup(v, cur);
        let (lo, hi) = match direction {
            Direction::Add => (1, f.potential_count(v)),
            Direction::Del => (0, f.potential_count(v)),
        };
        for idx in lo..hi {
            let (set, s) = f.potential(v, idx);
            let fits = match direction {
                Direction::Add => is_subset(cur, set) && set.len() - cur.len() <= k,
                Direction::Del => is_subset(set, cur) && cur.len() - set.len() <= k,
            };
            if !fits || s <= cur_score {
                continue;
            }
            if best.as_ref().is_some_and(|(gain, _)| s - cur_score <= *gain) {
                continue;
            }
            let mut parents = psets.clone();
            parents[v as usize] = set.to_vec();
            if let Ok(dag) = Dag::from_parent_sets(&parents) {
                best = Some((s - cur_score, dag));
            } else {
                debug_assert_eq!(direction, Direction::Add, "deletions cannot create cycles");
            }
        }
    }
    Ok(best.map(|(_, dag)| dag))
}

type BVec = SmallVec<[u32; 8]>;

/// Extended record key: parent choices and reachability as in the exact
/// solver, plus per bag node one bit per super-structure neighbor marking
/// realized arcs into already-forgotten nodes. The neighbor bits influence
/// nothing ahead except charges that are already exact (every pair they
/// decide is decided for good), so keys are grouped and compared by
/// (choices, reachability) with the bits along for the witness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ExtKey {
    a: AVec,
    p: PRows,
    b: BVec,
}

struct ExtTable {
    bag: Vec<NodeId>,
    keys: Vec<ExtKey>,
    costs: Vec<u32>,
    scores: Vec<Score>,
    provs: Vec<Provenance>,
}

impl ExtTable {
    /// Canonical order with a Pareto front per (choices, reachability)
    /// group: records are ranked by the total cost they are known to incur
    /// (charged plus still owed), and only records whose score strictly
    /// beats every cheaper-in-total record of their group survive. Ties
    /// keep the earliest emission. Records differing only in neighbor bits
    /// land in one group: their futures diverge solely through the owed
    /// charges, which the total already folds in.
    fn from_entries(
        bag: Vec<NodeId>,
        entries: Vec<(ExtKey, u32, u32, Score, Provenance)>,
    ) -> ExtTable {
        let mut idx: Vec<usize> = (0..entries.len()).collect();
        idx.sort_by(|&x, &y| {
            let (kx, ky) = (&entries[x].0, &entries[y].0);
            kx.a.cmp(&ky.a)
                .then_with(|| kx.p.cmp(&ky.p))
                .then(entries[x].2.cmp(&entries[y].2))
                .then(entries[y].3.total_cmp(&entries[x].3))
                .then(x.cmp(&y))
        });
        let mut keys: Vec<ExtKey> = Vec::new();
        let mut costs = Vec::new();
        let mut scores = Vec::new();
        let mut provs = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for i in idx {
            let (key, c, _, s, prov) = &entries[i];
            if keys.last().map_or(true, |k: &ExtKey| k.a != key.a || k.p != key.p) {
                best = f64::NEG_INFINITY;
            }
            if *s > best {
                keys.push(key.clone());
                costs.push(*c);
                scores.push(*s);
                provs.push(*prov);
                best = *s;
            }
        }
        ExtTable { bag, keys, costs, scores, provs }
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// Dead-record filter for one tree node. Every super-structure pair inside
/// bag ∪ F_t is already decided by a record's parent choices and neighbor
/// bits, so the charges such a pair still owes at future forget nodes are
/// exact. A record owing more than the remaining budget can never reach the
/// root within it; dropping it at creation leaves the root table unchanged
/// while keeping intermediate tables near the budget-feasible neighborhood.
struct Pending {
    ops: OpSet,
    k: usize,
    /// Bag position pairs (i, j), i < j, joined by a super-structure edge,
    /// with the pair state in the start dag (i first).
    bag_pairs: Vec<(usize, usize, u8)>,
    /// Per bag position: forgotten neighbors as (bit in the neighbor mask,
    /// pair state in the start dag, bag node first).
    settled: Vec<Vec<(usize, u8)>>,
    /// Per bag position, per potential parent set: mask of bag positions
    /// whose node lies in that set.
    pset_bag: Vec<Vec<u16>>,
    /// Per bag position, per potential parent set: mask of neighbor bits
    /// whose (forgotten) neighbor lies in that set.
    pset_settled: Vec<Vec<u32>>,
}

impl Pending {
    fn at_node(
        f: &ScoreFunction,
        d: &Dag,
        ops: OpSet,
        k: usize,
        nbrs: &[Vec<NodeId>],
        bag: &[NodeId],
        settled_in: impl Fn(NodeId) -> bool,
    ) -> Pending {
        let b = bag.len();
        let mut bag_pairs = Vec::new();
        for i in 0..b {
            for j in i + 1..b {
                if nbrs[bag[i] as usize].binary_search(&bag[j]).is_ok() {
                    let present = pair_state(d.has_arc(bag[i], bag[j]), d.has_arc(bag[j], bag[i]));
                    bag_pairs.push((i, j, present));
                }
            }
        }
        let mut settled: Vec<Vec<(usize, u8)>> = vec![Vec::new(); b];
        let mut settled_mask = vec![0u32; b];
        for (i, &v) in bag.iter().enumerate() {
            for (ui, &u) in nbrs[v as usize].iter().enumerate() {
                if settled_in(u) {
                    let present = pair_state(d.has_arc(v, u), d.has_arc(u, v));
                    settled[i].push((ui, present));
                    settled_mask[i] |= 1 << ui;
                }
            }
        }
        let mut pset_bag: Vec<Vec<u16>> = vec![Vec::new(); b];
        let mut pset_settled: Vec<Vec<u32>> = vec![Vec::new(); b];
        for (i, &v) in bag.iter().enumerate() {
            for pi in 0..f.potential_count(v) {
                let (pset, _) = f.potential(v, pi);
                let mut in_bag = 0u16;
                let mut in_settled = 0u32;
                for u in pset {
                    if let Ok(j) = bag.binary_search(u) {
                        in_bag |= 1 << j;
                    }
                    let ui = nbrs[v as usize]
                        .binary_search(u)
                        .expect("a listed parent is a super-structure neighbor");
                    if settled_mask[i] >> ui & 1 == 1 {
                        in_settled |= 1 << ui;
                    }
                }
                pset_bag[i].push(in_bag);
                pset_settled[i].push(in_settled);
            }
        }
        Pending { ops, k, bag_pairs, settled, pset_bag, pset_settled }
    }

    /// Exact cost the record still owes for pairs it has already decided,
    /// or `None` when one of them is infeasible under the operation set or
    /// realized as a two-cycle (such a candidate dies at the reflexivity
    /// check regardless).
    fn owed(&self, a: &[u16], b: &[u32]) -> Option<u32> {
        let mut total = 0u32;
        for &(i, j, present) in &self.bag_pairs {
            let fwd = self.pset_bag[j][a[j] as usize] >> i & 1 == 1;
            let bwd = self.pset_bag[i][a[i] as usize] >> j & 1 == 1;
            if fwd && bwd {
                return None;
            }
            match pair_edit_cost(present, pair_state(fwd, bwd), self.ops) {
                EditCost::Finite(c) => total += c as u32,
                EditCost::Infeasible => return None,
            }
        }
        for (i, list) in self.settled.iter().enumerate() {
            let in_pset = self.pset_settled[i][a[i] as usize];
            for &(ui, present) in list {
                let fwd = b[i] >> ui & 1 == 1;
                let bwd = in_pset >> ui & 1 == 1;
                if fwd && bwd {
                    return None;
                }
                match pair_edit_cost(present, pair_state(fwd, bwd), self.ops) {
                    EditCost::Finite(c) => total += c as u32,
                    EditCost::Infeasible => return None,
                }
            }
        }
        Some(total)
    }

    /// Charged plus owed cost of a record, or `None` when that total
    /// already exceeds the budget or some decided pair is infeasible;
    /// such records cannot reach the root within budget and are dropped.
    fn total(&self, a: &[u16], b: &[u32], cost: u32) -> Option<u32> {
        let total = cost.saturating_add(self.owed(a, b)?);
        (total as usize <= self.k).then_some(total)
    }
}

fn ext_leaf(f: &ScoreFunction, bag: &[NodeId], pending: &Pending) -> ExtTable {
    let base = leaf_table(f, bag);
    let zeros: BVec = SmallVec::from_elem(0u32, bag.len());
    let entries = base
        .keys()
        .iter()
        .filter_map(|key| {
            let total = pending.total(&key.a, &zeros, 0)?;
            Some((
                ExtKey { a: key.a.clone(), p: key.p.clone(), b: zeros.clone() },
                0u32,
                total,
                0.0,
                Provenance::Leaf,
            ))
        })
        .collect();
    ExtTable::from_entries(bag.to_vec(), entries)
}

/// Same realized-arc bookkeeping as the exact introduce. The new node has no
/// forgotten neighbors yet, so its neighbor bits start empty and the budget
/// is untouched.
fn ext_introduce(
    f: &ScoreFunction,
    child: &ExtTable,
    v0: NodeId,
    bag: &[NodeId],
    pending: &Pending,
) -> ExtTable {
    let b = bag.len();
    assert!(b <= BAG_LIMIT, "bag of size {b} exceeds the record limit");
    let pos0 = bag.binary_search(&v0).expect("introduced node must be in the bag");
    let low_mask: u16 = (1 << pos0) - 1;
    let spread = |bits: u16| (bits & low_mask) | ((bits & !low_mask) << 1);

    let count0 = f.potential_count(v0);
    let in_bits: Vec<u16> = (0..count0)
        .map(|pi| {
            let (pset, _) = f.potential(v0, pi);
            pset.iter()
                .filter_map(|u| bag.binary_search(u).ok())
                .fold(0u16, |m, i| m | 1 << i)
        })
        .collect();

    let mut entries = Vec::with_capacity(child.len() * count0);
    for (r, key) in child.keys.iter().enumerate() {
        let mut out_bits: u16 = 0;
        for (j, (&u, &ai)) in child.bag.iter().zip(key.a.iter()).enumerate() {
            let (pset, _) = f.potential(u, ai as usize);
            if pset.binary_search(&v0).is_ok() {
                out_bits |= 1 << spread_pos(j, pos0);
            }
        }
        let mut base_rows: PRows = SmallVec::from_elem(0u16, b);
        for (j, &row) in key.p.iter().enumerate() {
            base_rows[spread_pos(j, pos0)] = spread(row);
        }
        base_rows[pos0] = out_bits;

        let mut base_a: AVec = key.a.clone();
        base_a.insert(pos0, 0);
        let mut base_b: BVec = key.b.clone();
        base_b.insert(pos0, 0);
        for pi in 0..count0 {
            let mut a = base_a.clone();
            a[pos0] = pi as u16;
            let Some(total) = pending.total(&a, &base_b, child.costs[r]) else {
                continue;
            };
            let mut rows = base_rows.clone();
            let mut bits = in_bits[pi];
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                rows[i] |= 1 << pos0;
            }
            close(&mut rows);
            if reflexive(&rows) {
                continue;
            }
            entries.push((
                ExtKey { a, p: rows, b: base_b.clone() },
                child.costs[r],
                total,
                child.scores[r],
                Provenance::Introduce { child: r as u32, chosen: pi as u16 },
            ));
        }
    }
    ExtTable::from_entries(bag.to_vec(), entries)
}

/// Banks the forgotten node's score and charges its edit cost: every pair
/// between it and an already-forgotten neighbor is now fully determined, so
/// each such pair pays its operation cost exactly once across the whole
/// tree (pairs with a bag node wait for that node's own forget). Bag nodes
/// that keep an arc into the forgotten node mark it in their neighbor bits.
#[allow(clippy::too_many_arguments)]
fn ext_forget(
    f: &ScoreFunction,
    d: &Dag,
    ops: OpSet,
    k: usize,
    nbrs: &[Vec<NodeId>],
    child: &ExtTable,
    v0: NodeId,
    bag: &[NodeId],
    pending: &Pending,
) -> ExtTable {
    let pos0 = child.bag.binary_search(&v0).expect("forgotten node must be in the child bag");
    let low_mask: u16 = (1 << pos0) - 1;
    // Wider shift: pos0 + 1 can reach 16, which u16 shifts reject.
    let squeeze = |bits: u16| (bits & low_mask) | ((bits as u32 >> (pos0 + 1)) as u16) << pos0;
    // Neighbors of v0 outside the child bag are exactly its forgotten ones.
    let settled: Vec<(usize, NodeId)> = nbrs[v0 as usize]
        .iter()
        .enumerate()
        .filter(|(_, u)| child.bag.binary_search(u).is_err())
        .map(|(i, &u)| (i, u))
        .collect();

    let mut entries = Vec::with_capacity(child.len());
    'records: for (r, key) in child.keys.iter().enumerate() {
        let chosen = key.a[pos0];
        let (pset, gained) = f.potential(v0, chosen as usize);
        let mut extra = 0u32;
        for &(ui, u) in &settled {
            let realized = pair_state(key.b[pos0] >> ui & 1 == 1, pset.binary_search(&u).is_ok());
            let present = pair_state(d.has_arc(v0, u), d.has_arc(u, v0));
            match pair_edit_cost(present, realized, ops) {
                EditCost::Finite(c) => extra += c as u32,
                EditCost::Infeasible => continue 'records,
            }
        }
        let cost = child.costs[r].saturating_add(extra);
        if cost as usize > k {
            continue;
        }
        let mut a = key.a.clone();
        a.remove(pos0);
        let mut bmasks = key.b.clone();
        bmasks.remove(pos0);
        for (&v, mask) in bag.iter().zip(bmasks.iter_mut()) {
            if pset.binary_search(&v).is_ok() {
                let vi = nbrs[v as usize]
                    .binary_search(&v0)
                    .expect("a listed parent is a super-structure neighbor");
                *mask |= 1 << vi;
            }
        }
        let Some(total) = pending.total(&a, &bmasks, cost) else {
            continue;
        };
        let mut p: PRows = key.p.clone();
        p.remove(pos0);
        for row in p.iter_mut() {
            *row = squeeze(*row);
        }
        entries.push((
            ExtKey { a, p, b: bmasks },
            cost,
            total,
            child.scores[r] + gained,
            Provenance::Forget { child: r as u32, chosen },
        ));
    }
    ExtTable::from_entries(bag.to_vec(), entries)
}

/// Merge join over equal parent choices; the two subtrees forget disjoint
/// node sets with no super-structure edges between them, so neighbor bits
/// union disjointly and costs and scores add.
fn ext_join(left: &ExtTable, right: &ExtTable, k: usize, pending: &Pending) -> ExtTable {
    assert_eq!(left.bag, right.bag, "join children must share a bag");
    let mut entries = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        match left.keys[i].a.cmp(&right.keys[j].a) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let a = &left.keys[i].a;
                let i_end = (i..left.len()).find(|&x| &left.keys[x].a != a).unwrap_or(left.len());
                let j_end =
                    (j..right.len()).find(|&x| &right.keys[x].a != a).unwrap_or(right.len());
                for li in i..i_end {
                    for rj in j..j_end {
                        let cost = left.costs[li].saturating_add(right.costs[rj]);
                        if cost as usize > k {
                            continue;
                        }
                        let mut b: BVec = left.keys[li].b.clone();
                        for (mask, &extra) in b.iter_mut().zip(right.keys[rj].b.iter()) {
                            *mask |= extra;
                        }
                        let Some(total) = pending.total(a, &b, cost) else {
                            continue;
                        };
                        let mut rows: PRows = left.keys[li].p.clone();
                        for (row, &extra) in rows.iter_mut().zip(right.keys[rj].p.iter()) {
                            *row |= extra;
                        }
                        close(&mut rows);
                        if reflexive(&rows) {
                            continue;
                        }
                        entries.push((
                            ExtKey { a: left.keys[li].a.clone(), p: rows, b },
                            cost,
                            total,
                            left.scores[li] + right.scores[rj],
                            Provenance::Join { left: li as u32, right: rj as u32 },
                        ));
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    ExtTable::from_entries(left.bag.clone(), entries)
}

/// Record DP over the decomposition with an edit budget: each root record
/// is the best score of a listed-parents network whose edit distance from
/// `d` is its cost. Returns the witness of the best root record within
/// budget whose score strictly beats `d`, or `None`.
pub fn dp_local_search_step(
    f: &ScoreFunction,
    d: &Dag,
    k: usize,
    ops: OpSet,
    ntd: &NiceTreeDecomposition,
) -> Result<Option<Dag>, LocalSearchError> {
    let n = f.n();
    check_start(f, d)?;
    if ntd.graph_node_count() != n {
        return Err(SolveError::NodeCountMismatch {
            decomposition: ntd.graph_node_count(),
            score: n,
        }
        .into());
    }
    for (i, t) in ntd.nodes().iter().enumerate() {
        if t.bag.len() > BAG_LIMIT {
            return Err(
                SolveError::BagTooWide { node: i, size: t.bag.len(), limit: BAG_LIMIT }.into()
            );
        }
    }
    for v in 0..n as NodeId {
        let count = f.potential_count(v);
        if count > u16::MAX as usize {
            return Err(SolveError::TooManyParentSets { node: v, count }.into());
        }
    }
    let skeleton = f.superstructure();
    audit_nice(ntd, &skeleton).map_err(SolveError::Audit)?;
    let nbrs = skeleton.adjacency();
    for (v, list) in nbrs.iter().enumerate() {
        if list.len() > NEIGHBOR_DEGREE_LIMIT {
            return Err(LocalSearchError::DegreeTooHigh {
                node: v as NodeId,
                degree: list.len(),
                limit: NEIGHBOR_DEGREE_LIMIT,
            });
        }
    }

    // Post-order subtree intervals locate each node's unique forget, which
    // tells every tree node which neighbors of its bag are already settled.
    let order = ntd.post_order();
    let count = ntd.node_count();
    let mut tin = vec![0usize; count];
    let mut tout = vec![0usize; count];
    for (idx, &t) in order.iter().enumerate() {
        tout[t] = idx;
        tin[t] = ntd.node(t).children.iter().map(|&c| tin[c]).min().unwrap_or(idx);
    }
    let mut forget_node = vec![usize::MAX; n];
    for (i, nd) in ntd.nodes().iter().enumerate() {
        if let NiceKind::Forget(v) = nd.kind {
            forget_node[v as usize] = i;
        }
    }

    let mut tables: Vec<Option<ExtTable>> = Vec::new();
    tables.resize_with(count, || None);
    for &t in &order {
        let node = ntd.node(t);
        let pending = Pending::at_node(f, d, ops, k, &nbrs, &node.bag, |u| {
            let fu = forget_node[u as usize];
            tin[t] <= tout[fu] && tout[fu] <= tout[t]
        });
        let table = match node.kind {
            NiceKind::Leaf => ext_leaf(f, &node.bag, &pending),
            NiceKind::Introduce(v0) => ext_introduce(
                f,
                tables[node.children[0]].as_ref().unwrap(),
                v0,
                &node.bag,
                &pending,
            ),
            NiceKind::Forget(v0) => ext_forget(
                f,
                d,
                ops,
                k,
                &nbrs,
                tables[node.children[0]].as_ref().unwrap(),
                v0,
                &node.bag,
                &pending,
            ),
            NiceKind::Join => ext_join(
                tables[node.children[0]].as_ref().unwrap(),
                tables[node.children[1]].as_ref().unwrap(),
                k,
                &pending,
            ),
        };
        tables[t] = Some(table);
    }

    let root = ntd.root();
    let root_table = tables[root].as_ref().unwrap();
    let current = f.score_of(d);
    let mut pick: Option<usize> = None;
    for (i, &c) in root_table.costs.iter().enumerate() {
        if c as usize <= k
            && root_table.scores[i] > current
            && pick.is_none_or(|p| root_table.scores[i] > root_table.scores[p])
        {
            pick = Some(i);
        }
    }
    let Some(pick) = pick else {
        return Ok(None);
    };

    let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut stack: Vec<(usize, u32)> = vec![(root, pick as u32)];
    while let Some((t, r)) = stack.pop() {
        let node = ntd.node(t);
        match tables[t].as_ref().unwrap().provs[r as usize] {
            Provenance::Leaf => {}
            Provenance::Introduce { child, .. } => stack.push((node.children[0], child)),
            Provenance::Forget { child, chosen } => {
                let NiceKind::Forget(v0) = node.kind else {
                    unreachable!("forget provenance at a non-forget node")
                };
                parents[v0 as usize] = f.potential(v0, chosen as usize).0.to_vec();
                stack.push((node.children[0], child));
            }
            Provenance::Join { left, right } => {
                stack.push((node.children[0], left));
                stack.push((node.children[1], right));
            }
        }
    }
    let dag = Dag::from_parent_sets(&parents).expect("valid records represent acyclic networks");
    debug_assert!(f.score_of(&dag) > current);
    debug_assert!(matches!(
        neighbor_distance(d, &dag, ops),
        EditCost::Finite(c) if c <= k
    ));
    Ok(Some(dag))
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn nice_for(f: &ScoreFunction) -> NiceTreeDecomposition {
        let g = f.superstructure();
        make_nice(&minfill_decomposition(&g), &g).unwrap()
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

    /// Strictly admissible random dag: a random order, then per node a
    /// random listed set drawn from the order's predecessors.
    fn random_start(rng: &mut StdRng, f: &ScoreFunction) -> Dag {
        let n = f.n();
        let mut order: Vec<NodeId> = (0..n as NodeId).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut seen = vec![false; n];
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &v in &order {
            let allowed: Vec<usize> = (0..f.potential_count(v))
                .filter(|&idx| f.potential(v, idx).0.iter().all(|&u| seen[u as usize]))
                .collect();
            let idx = allowed[rng.gen_range(0..allowed.len())];
            parents[v as usize] = f.potential(v, idx).0.to_vec();
            seen[v as usize] = true;
        }
        Dag::from_parent_sets(&parents).unwrap()
    }

    fn random_dag(rng: &mut StdRng, n: usize) -> Dag {
        let mut order: Vec<NodeId> = (0..n as NodeId).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    arcs.push((order[i], order[j]));
                }
            }
        }
        Dag::from_arcs(n, arcs).unwrap()
    }

    #[test]
    fn opset_triviality_and_display() {
        assert!(!OpSet::EMPTY.is_nontrivial());
        assert!(!OpSet::ADD.is_nontrivial());
        assert!(!OpSet::DEL.is_nontrivial());
        for ops in OpSet::nontrivial_sets() {
            assert!(ops.is_nontrivial());
        }
        assert_eq!(OpSet::ADD.union(OpSet::REV).to_string(), "{add,rev}");
        assert_eq!(OpSet::EMPTY.to_string(), "{}");
    }

    #[test]
    fn distance_examples() {
        let d1 = Dag::from_arcs(3, vec![(0, 1), (1, 2)]).unwrap();
        for ops in OpSet::nontrivial_sets() {
            assert_eq!(neighbor_distance(&d1, &d1, ops), EditCost::Finite(0));
        }
        let reversed = Dag::from_arcs(3, vec![(1, 0), (1, 2)]).unwrap();
        assert_eq!(neighbor_distance(&d1, &reversed, OpSet::REV), EditCost::Finite(1));
        assert_eq!(
            neighbor_distance(&d1, &reversed, OpSet::ADD.union(OpSet::DEL)),
            EditCost::Finite(2)
        );
        assert_eq!(neighbor_distance(&d1, &reversed, OpSet::ADD), EditCost::Infeasible);
        let grown = Dag::from_arcs(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(
            neighbor_distance(&d1, &grown, OpSet::DEL.union(OpSet::REV)),
            EditCost::Infeasible
        );
        assert_eq!(neighbor_distance(&d1, &grown, OpSet::ADD), EditCost::Finite(1));
    }

    #[test]
    fn distance_symmetry_zero_and_triangle() {
        let mut rng = StdRng::seed_from_u64(11);
        let full = OpSet::ADD.union(OpSet::DEL).union(OpSet::REV);
        let swap_closed = [OpSet::ADD.union(OpSet::DEL), full];
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let (a, b, c) = (random_dag(&mut rng, n), random_dag(&mut rng, n), random_dag(&mut rng, n));
            for ops in swap_closed {
                assert_eq!(neighbor_distance(&a, &b, ops), neighbor_distance(&b, &a, ops));
            }
            for ops in OpSet::nontrivial_sets() {
                let d_ab = neighbor_distance(&a, &b, ops);
                assert_eq!(d_ab == EditCost::Finite(0), a.arcs() == b.arcs());
                if let (EditCost::Finite(ab), EditCost::Finite(bc)) =
                    (d_ab, neighbor_distance(&b, &c, ops))
                {
                    if let EditCost::Finite(ac) = neighbor_distance(&a, &c, ops) {
                        assert!(ac <= ab + bc);
                    } else {
                        panic!("two feasible legs force a feasible third");
                    }
                }
            }
        }
    }

    #[test]
    fn brute_force_on_fixtures() {
        let f = f1();
        let edgeless = Dag::empty(3);
        let found = brute_force_step(&f, &edgeless, 3, OpSet::ADD).unwrap().unwrap();
        assert!(f.score_of(&found) >= 2.0);
        assert!(matches!(
            neighbor_distance(&edgeless, &found, OpSet::ADD),
            EditCost::Finite(c) if c <= 3
        ));

        let optimal = Dag::from_arcs(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(f.score_of(&optimal), 5.0);
        let full = OpSet::ADD.union(OpSet::DEL).union(OpSet::REV);
        for k in 0..=3 {
            for ops in [OpSet::EMPTY, OpSet::ADD, OpSet::DEL, full] {
                assert_eq!(brute_force_step(&f, &optimal, k, ops).unwrap(), None);
            }
        }

        let g = f2();
        let d = Dag::from_arcs(2, vec![(0, 1)]).unwrap();
        assert_eq!(brute_force_step(&g, &d, 1, OpSet::REV).unwrap(), None);
    }

    #[test]
    fn brute_force_guards_subset_blowup() {
        let n = 12;
        let entries = (0..n)
            .map(|v| {
                (0..n as NodeId)
                    .filter(|&u| u != v as NodeId)
                    .map(|u| (vec![u], 1.0))
                    .collect()
            })
            .collect();
        let f =
            ScoreFunction::new((0..n).map(|i| format!("v{i}")).collect(), entries).unwrap();
        let err = brute_force_step(&f, &Dag::empty(n), 9, OpSet::ADD).unwrap_err();
        assert!(matches!(err, LocalSearchError::TooManyCandidates { .. }));
    }

    #[test]
    fn monotone_on_fixtures() {
        let f = f1();
        let d = Dag::from_arcs(3, vec![(0, 1)]).unwrap();
        let up = monotone_step(&f, &d, 2, Direction::Add).unwrap().unwrap();
        assert_eq!(f.score_of(&up), 5.0);

        let weak = Dag::from_arcs(3, vec![(1, 2)]).unwrap();
        assert_eq!(monotone_step(&f, &weak, 1, Direction::Del).unwrap(), None);
        assert_eq!(monotone_step(&f, &Dag::empty(3), 0, Direction::Add).unwrap(), None);
    }

    #[test]
    fn monotone_matches_brute_force_direction_answers() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..60 {
            let n = rng.gen_range(2..=5);
            let f = random_instance(&mut rng, n);
            let d = random_start(&mut rng, &f);
            let k = rng.gen_range(0..=2);
            let add_mono = monotone_step(&f, &d, k, Direction::Add).unwrap();
            let add_brute = brute_force_step(&f, &d, k, OpSet::ADD).unwrap();
            assert_eq!(add_mono.is_some(), add_brute.is_some());
            let del_mono = monotone_step(&f, &d, k, Direction::Del).unwrap();
            let del_brute = brute_force_step(&f, &d, k, OpSet::DEL).unwrap();
            assert_eq!(del_mono.is_some(), del_brute.is_some());
            for dag in [add_mono, add_brute, del_mono, del_brute].into_iter().flatten() {
                assert!(f.score_of(&dag) > f.score_of(&d));
            }
        }
    }

    #[test]
    fn dp_step_on_fixtures() {
        let f = f1();
        let ntd = nice_for(&f);
        let full = OpSet::ADD.union(OpSet::DEL).union(OpSet::REV);
        let optimal = Dag::from_arcs(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(dp_local_search_step(&f, &optimal, 3, full, &ntd).unwrap(), None);

        let edgeless = Dag::empty(3);
        let found = dp_local_search_step(&f, &edgeless, 2, OpSet::ADD, &ntd).unwrap().unwrap();
        assert!(f.score_of(&found) > 0.0);
        assert!(monotone_step(&f, &edgeless, 2, Direction::Add).unwrap().is_some());

        for ops in OpSet::nontrivial_sets() {
            assert_eq!(dp_local_search_step(&f, &edgeless, 0, ops, &ntd).unwrap(), None);
        }
    }

    #[test]
    fn dp_step_matches_brute_force_on_randoms() {
        let mut rng = StdRng::seed_from_u64(13);
        for round in 0..40 {
            let n = rng.gen_range(2..=5);
            let f = random_instance(&mut rng, n);
            let ntd = nice_for(&f);
            let d = random_start(&mut rng, &f);
            let k = rng.gen_range(0..=2);
            for ops in OpSet::nontrivial_sets() {
                let brute = brute_force_step(&f, &d, k, ops).unwrap();
                let dp = dp_local_search_step(&f, &d, k, ops, &ntd).unwrap();
                assert_eq!(
                    brute.is_some(),
                    dp.is_some(),
                    "round {round}: k={k} ops={ops} start={:?}",
                    d.arcs()
                );
                if let Some(dag) = dp {
                    assert!(f.score_of(&dag) > f.score_of(&d));
                    assert!(matches!(
                        neighbor_distance(&d, &dag, ops),
                        EditCost::Finite(c) if c <= k
                    ));
                }
            }
        }
    }

    #[test]
    fn dp_step_rejects_bad_inputs() {
        // Sparse super-structure: only the edge {0, 1} is usable.
        let f = ScoreFunction::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![], vec![(vec![0], 1.0)], vec![]],
        )
        .unwrap();
        let ntd = nice_for(&f);
        let wrong = Dag::empty(2);
        assert!(matches!(
            dp_local_search_step(&f, &wrong, 1, OpSet::REV, &ntd),
            Err(LocalSearchError::NodeCountMismatch { .. })
        ));
        let off = Dag::from_arcs(3, vec![(2, 0)]).unwrap();
        assert!(matches!(
            dp_local_search_step(&f, &off, 1, OpSet::REV, &ntd),
            Err(LocalSearchError::InadmissibleStart)
        ));
    }
}
