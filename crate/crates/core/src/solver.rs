//! The record dynamic program over a nice tree decomposition, and the fast
//! path for score functions whose directed super-structure is acyclic.
//!
//! A record is a pair (a, p) with a score s: `a` assigns every bag node one
//! of its allowed parent sets, `p` is the transitive (and, for a valid
//! record, irreflexive) reachability relation the partial network induces on
//! the bag, and `s` is the best score over the already-forgotten nodes among
//! partial networks matching (a, p). Tables hold the records of one tree
//! node in a fixed canonical order: lexicographic over the tuple of
//! parent-set indices, then over the row-major bits of p. Everything
//! downstream (merge joins, tie-breaking, traceback) leans on that order.

use smallvec::SmallVec;
use thiserror::Error;

use crate::graph::{Dag, NodeId};
use crate::score::{Score, ScoreFunction};
use crate::treedecomp::{audit_nice, NiceAuditError, NiceKind, NiceTreeDecomposition};

/// Records index bag positions with u16 bit rows, so bags are capped here.
/// The table size is exponential in the bag size anyway; wider bags are a
/// lost cause long before this limit bites.
pub const BAG_LIMIT: usize = 16;

pub(crate) type AVec = SmallVec<[u16; 8]>;
pub(crate) type PRows = SmallVec<[u16; 8]>;

/// Table key: parent-set choice indices per bag position, plus the
/// reachability rows (bit j of `p[i]` set when position i reaches j).
/// The derived order is the canonical record order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub a: AVec,
    pub p: PRows,
}

/// How a record was formed, by child record index. The parent-set index of
/// a forgotten node is captured at its forget so traceback never needs the
/// child keys (which are dropped once the parent table is built).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Leaf,
    Introduce { child: u32, chosen: u16 },
    Forget { child: u32, chosen: u16 },
    Join { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct RecordTable {
    bag: Vec<NodeId>,
    keys: Vec<RecordKey>,
    scores: Vec<Score>,
    provs: Vec<Provenance>,
}

impl RecordTable {
    /// Freezes raw emissions into canonical order, keeping the best score
    /// per key. Ties keep the earliest emission, which makes traceback
    /// deterministic for every table transformer.
    pub fn from_entries(
        bag: Vec<NodeId>,
        entries: Vec<(RecordKey, Score, Provenance)>,
    ) -> RecordTable {
        let mut idx: Vec<usize> = (0..entries.len()).collect();
        idx.sort_by(|&x, &y| entries[x].0.cmp(&entries[y].0));
        let mut keys = Vec::new();
        let mut scores: Vec<Score> = Vec::new();
        let mut provs = Vec::new();
        for i in idx {
            let (key, s, prov) = &entries[i];
            if keys.last() == Some(key) {
                let last = scores.len() - 1;
                if *s > scores[last] {
                    scores[last] = *s;
                    provs[last] = *prov;
                }
            } else {
                keys.push(key.clone());
                scores.push(*s);
                provs.push(*prov);
            }
        }
        RecordTable { bag, keys, scores, provs }
    }

    pub fn bag(&self) -> &[NodeId] {
        &self.bag
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[RecordKey] {
        &self.keys
    }

    pub fn scores(&self) -> &[Score] {
        &self.scores
    }

    pub fn provenances(&self) -> &[Provenance] {
        &self.provs
    }

    /// Drops keys and scores once the parent table exists; provenance stays
    /// for traceback.
    fn release(&mut self) {
        self.keys = Vec::new();
        self.scores = Vec::new();
    }
}

/// Floyd-Warshall closure over bit rows.
pub(crate) fn close(rows: &mut [u16]) {
    for k in 0..rows.len() {
        let row_k = rows[k];
        for row in rows.iter_mut() {
            if *row >> k & 1 == 1 {
                *row |= row_k;
            }
        }
    }
}

pub(crate) fn reflexive(rows: &[u16]) -> bool {
    rows.iter().enumerate().any(|(i, row)| row >> i & 1 == 1)
}

fn transitive(rows: &[u16]) -> bool {
    let mut closed: Vec<u16> = rows.to_vec();
    close(&mut closed);
    closed == rows
}

/// True for every stored p by construction; exposed for table audits.
pub fn key_is_valid(key: &RecordKey) -> bool {
    key.a.len() == key.p.len() && transitive(&key.p) && !reflexive(&key.p)
}

/// One record per parent-set assignment whose induced arcs on the bag are
/// acyclic; p closes those arcs, scores start at zero.
pub fn leaf_table(f: &ScoreFunction, bag: &[NodeId]) -> RecordTable {
    let b = bag.len();
    assert!(b <= BAG_LIMIT, "bag of size {b} exceeds the record limit");
    assert!(bag.windows(2).all(|w| w[0] < w[1]), "bag must be sorted");
    let counts: Vec<usize> = bag.iter().map(|&v| f.potential_count(v)).collect();
    let mut entries = Vec::new();
    let mut a: AVec = SmallVec::from_elem(0u16, b);
    loop {
        let mut rows: PRows = SmallVec::from_elem(0u16, b);
        for (j, &v) in bag.iter().enumerate() {
            let (pset, _) = f.potential(v, a[j] as usize);
            for u in pset {
                if let Ok(i) = bag.binary_search(u) {
                    rows[i] |= 1 << j;
                }
            }
        }
        close(&mut rows);
        if !reflexive(&rows) {
            entries.push((RecordKey { a: a.clone(), p: rows }, 0.0, Provenance::Leaf));
        }
        // Odometer over parent-set indices, most significant position first.
        let mut j = b;
        loop {
            if j == 0 {
                return RecordTable::from_entries(bag.to_vec(), entries);
            }
            j -= 1;
            a[j] += 1;
            if (a[j] as usize) < counts[j] {
                break;
            }
            a[j] = 0;
        }
    }
}

/// Extends each child record with every allowed parent set P of the new
/// node: realized arcs into the new node come from P's members already in
/// the bag, realized arcs out of it from child assignments listing it.
/// Records whose closed relation turns reflexive are dropped.
pub fn introduce_table(
    f: &ScoreFunction,
    child: &RecordTable,
    v0: NodeId,
    bag: &[NodeId],
) -> RecordTable {
    let b = bag.len();
    assert!(b <= BAG_LIMIT, "bag of size {b} exceeds the record limit");
    let pos0 = bag.binary_search(&v0).expect("introduced node must be in the bag");
    debug_assert_eq!(child.bag.len() + 1, b);
    let low_mask: u16 = (1 << pos0) - 1;
    let spread = |bits: u16| (bits & low_mask) | ((bits & !low_mask) << 1);

    // Bag bits of each allowed parent set of v0, computed once.
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
        // Positions of the child bag whose assigned set lists v0: the new
        // node points at them the moment it appears.
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
        for pi in 0..count0 {
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
            let mut a = base_a.clone();
            a[pos0] = pi as u16;
            entries.push((
                RecordKey { a, p: rows },
                child.scores[r],
                Provenance::Introduce { child: r as u32, chosen: pi as u16 },
            ));
        }
    }
    RecordTable::from_entries(bag.to_vec(), entries)
}

pub(crate) fn spread_pos(j: usize, pos0: usize) -> usize {
    if j < pos0 { j } else { j + 1 }
}

/// Projects each child record onto the smaller bag and banks the forgotten
/// node's score: all of its allowed parents are inside the subtree by now,
/// so its chosen set is final. Colliding projections keep the best score.
pub fn forget_table(
    f: &ScoreFunction,
    child: &RecordTable,
    v0: NodeId,
    bag: &[NodeId],
) -> RecordTable {
    let pos0 = child.bag.binary_search(&v0).expect("forgotten node must be in the child bag");
    debug_assert_eq!(child.bag.len(), bag.len() + 1);
    let low_mask: u16 = (1 << pos0) - 1;
    // Wider shift: pos0 + 1 can reach 16, which u16 shifts reject.
    let squeeze = |bits: u16| (bits & low_mask) | ((bits as u32 >> (pos0 + 1)) as u16) << pos0;

    let mut entries = Vec::with_capacity(child.len());
    for (r, key) in child.keys.iter().enumerate() {
        let chosen = key.a[pos0];
        let gained = f.potential(v0, chosen as usize).1;
        let mut a = key.a.clone();
        a.remove(pos0);
        let mut p: PRows = key.p.clone();
        p.remove(pos0);
        for row in p.iter_mut() {
            *row = squeeze(*row);
        }
        entries.push((
            RecordKey { a, p },
            child.scores[r] + gained,
            Provenance::Forget { child: r as u32, chosen },
        ));
    }
    RecordTable::from_entries(bag.to_vec(), entries)
}

/// Ordered merge join: runs of equal parent-set assignment are paired, the
/// reachability unions are closed, and cyclic combinations are dropped.
/// Scores add because the two subtrees forget disjoint node sets.
pub fn join_table(left: &RecordTable, right: &RecordTable) -> RecordTable {
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
                        combine_join(left, right, li, rj, &mut entries);
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    RecordTable::from_entries(left.bag.clone(), entries)
}

/// All-pairs reference join; the ordered merge must match it exactly.
pub fn join_table_naive(left: &RecordTable, right: &RecordTable) -> RecordTable {
    assert_eq!(left.bag, right.bag, "join children must share a bag");
    let mut entries = Vec::new();
    for li in 0..left.len() {
        for rj in 0..right.len() {
            if left.keys[li].a == right.keys[rj].a {
                combine_join(left, right, li, rj, &mut entries);
            }
        }
    }
    RecordTable::from_entries(left.bag.clone(), entries)
}

fn combine_join(
    left: &RecordTable,
    right: &RecordTable,
    li: usize,
    rj: usize,
    entries: &mut Vec<(RecordKey, Score, Provenance)>,
) {
    let mut rows: PRows = left.keys[li].p.clone();
    for (row, &extra) in rows.iter_mut().zip(right.keys[rj].p.iter()) {
        *row |= extra;
    }
    close(&mut rows);
    if reflexive(&rows) {
        return;
    }
    entries.push((
        RecordKey { a: left.keys[li].a.clone(), p: rows },
        left.scores[li] + right.scores[rj],
        Provenance::Join { left: li as u32, right: rj as u32 },
    ));
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("decomposition covers {decomposition} nodes, score function has {score}")]
    NodeCountMismatch { decomposition: usize, score: usize },
    #[error("tree node {node} has bag size {size}, above the record limit {limit}")]
    BagTooWide { node: usize, size: usize, limit: usize },
    #[error("node {node} has {count} allowed parent sets, above the index limit")]
    TooManyParentSets { node: NodeId, count: usize },
    #[error("decomposition audit failed: {0}")]
    Audit(NiceAuditError),
    #[error("directed super-structure has a cycle: {cycle:?}")]
    CyclicSuperstructure { cycle: Vec<NodeId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStats {
    pub node: usize,
    pub kind: NiceKind,
    pub bag_size: usize,
    pub records: usize,
    /// Key-space bound: product of allowed-set counts times 2^(b(b-1)).
    pub potential: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsReport {
    /// One entry per tree node, in tree-node index order.
    pub per_node: Vec<NodeStats>,
    /// Sum over tree nodes of w^2 times the product of allowed-set counts,
    /// with w the decomposition width: the refinement-analysis total.
    pub refined_bound: u128,
}

fn potential_product(f: &ScoreFunction, bag: &[NodeId]) -> u128 {
    bag.iter().fold(1u128, |acc, &v| {
        acc.saturating_mul(f.potential_count(v) as u128)
    })
}

fn key_space(f: &ScoreFunction, bag: &[NodeId]) -> u128 {
    let b = bag.len() as u32;
    let shift = b * b.saturating_sub(1);
    let relations = if shift >= 128 { u128::MAX } else { 1u128 << shift };
    potential_product(f, bag).saturating_mul(relations)
}

/// Runs the table dynamic program bottom-up over the decomposition, reads
/// the optimum off the single root record, and rebuilds the witness network
/// top-down: each forget provenance pins the forgotten node's parent set.
pub fn solve_exact(
    f: &ScoreFunction,
    ntd: &NiceTreeDecomposition,
) -> Result<(Score, Dag, StatsReport), SolveError> {
    let n = f.n();
    if ntd.graph_node_count() != n {
        return Err(SolveError::NodeCountMismatch {
            decomposition: ntd.graph_node_count(),
            score: n,
        });
    }
    for (i, t) in ntd.nodes().iter().enumerate() {
        if t.bag.len() > BAG_LIMIT {
            return Err(SolveError::BagTooWide { node: i, size: t.bag.len(), limit: BAG_LIMIT });
        }
    }
    for v in 0..n as NodeId {
        let count = f.potential_count(v);
        if count > u16::MAX as usize {
            return Err(SolveError::TooManyParentSets { node: v, count });
        }
    }
    audit_nice(ntd, &f.superstructure()).map_err(SolveError::Audit)?;

    let count = ntd.node_count();
    let order = ntd.post_order();
    let mut tables: Vec<Option<RecordTable>> = vec![None; count];
    let mut per_node: Vec<Option<NodeStats>> = vec![None; count];
    let width = ntd.width() as u128;
    let mut refined_bound = 0u128;
    for &t in &order {
        let node = ntd.node(t);
        let table = match node.kind {
            NiceKind::Leaf => leaf_table(f, &node.bag),
            NiceKind::Introduce(v0) => {
                introduce_table(f, tables[node.children[0]].as_ref().unwrap(), v0, &node.bag)
            }
            NiceKind::Forget(v0) => {
                forget_table(f, tables[node.children[0]].as_ref().unwrap(), v0, &node.bag)
            }
            NiceKind::Join => join_table(
                tables[node.children[0]].as_ref().unwrap(),
                tables[node.children[1]].as_ref().unwrap(),
            ),
        };
        per_node[t] = Some(NodeStats {
            node: t,
            kind: node.kind,
            bag_size: node.bag.len(),
            records: table.len(),
            potential: key_space(f, &node.bag),
        });
        refined_bound = refined_bound
            .saturating_add(width.saturating_mul(width).saturating_mul(potential_product(f, &node.bag)));
        for &c in &node.children {
            tables[c].as_mut().unwrap().release();
        }
        tables[t] = Some(table);
    }

    let root = ntd.root();
    let root_table = tables[root].as_ref().unwrap();
    assert_eq!(root_table.len(), 1, "empty root bag admits exactly one record");
    let best = root_table.scores[0];

    let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut stack: Vec<(usize, u32)> = vec![(root, 0)];
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
    debug_assert!((f.score_of(&dag) - best).abs() <= 1e-9 * (1.0 + best.abs()));
    let per_node = per_node.into_iter().map(Option::unwrap).collect();
    Ok((best, dag, StatsReport { per_node, refined_bound }))
}

/// When the directed super-structure is acyclic every node can take its
/// best allowed parent set independently; the union cannot form a cycle.
pub fn solve_acyclic(f: &ScoreFunction) -> Result<(Score, Dag), SolveError> {
    let ss = f.directed_superstructure();
    if let Some(cycle) = ss.find_cycle() {
        return Err(SolveError::CyclicSuperstructure { cycle });
    }
    let mut parents = Vec::with_capacity(f.n());
    let mut total = 0.0;
    for v in 0..f.n() as NodeId {
        let mut best_idx = 0;
        let mut best_score = f.potential(v, 0).1;
        for idx in 1..f.potential_count(v) {
            let (_, s) = f.potential(v, idx);
            if s > best_score {
                best_idx = idx;
                best_score = s;
            }
        }
        total += best_score;
        parents.push(f.potential(v, best_idx).0.to_vec());
    }
    let dag = Dag::from_parent_sets(&parents).expect("all arcs lie in an acyclic super-structure");
    Ok((total, dag))
}
