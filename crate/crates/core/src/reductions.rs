//! Instance generators that embed four classical decision problems into
//! structure search over listed score functions, plus codecs that translate
//! witnesses back. Feedback arc set, partitioned clique and 3-satisfiability
//! pose a threshold question about the reachable optimum; the clique
//! local-search variant and the independent-set family instead ask whether a
//! supplied start dag has an improving neighbor within an edit budget. Node
//! roles are recorded in the score function's name table, numeric constants
//! and thresholds in the emitted [`ReductionInstance`].

use thiserror::Error;

use crate::cnf::{Cnf, CnfError, Lit};
use crate::graph::{Dag, Digraph, GraphError, NodeId, UGraph};
use crate::local_search::OpSet;
use crate::score::{Admissibility, Score, ScoreFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("need at least {min} parts, got {got}")]
    TooFewParts { got: usize, min: usize },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("node {0} is not a graph node of the instance")]
    NotASourceNode(NodeId),
    #[error("edge ({u}, {w}) stays inside part {part}")]
    EdgeWithinPart { u: NodeId, w: NodeId, part: usize },
    #[error("edge ({u}, {w}) is not a cross edge of the source graph")]
    EdgeNotInGraph { u: NodeId, w: NodeId },
    #[error("parts {i} and {j} carry more than one selected edge")]
    NotRepresentable { i: usize, j: usize },
    #[error("instance lacks the metadata this operation needs")]
    WrongInstanceKind,
    #[error("dag has {got} nodes, instance has {want}")]
    NodeCountMismatch { got: usize, want: usize },
    #[error("formula has no clauses")]
    EmptyFormula,
    #[error("assignment has {got} values, formula has {want} variables")]
    AssignmentLength { got: usize, want: usize },
    #[error("clause {0} has no literal satisfied by the assignment")]
    UnsatisfiedClause(usize),
    #[error("dag scores {score}, below the threshold {threshold}")]
    BelowThreshold { score: Score, threshold: Score },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A generated instance together with the bookkeeping a consumer needs to
/// interpret it.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub f: ScoreFunction,
    /// Decision threshold: the source instance is a yes-instance exactly when
    /// some dag scores at least this much. The local-search families phrase
    /// the same bar as "an improving neighbor of `initial` exists within
    /// `budget`", and there the threshold equals the start score plus one.
    pub threshold: Score,
    /// Start dag for the local-search families.
    pub initial: Option<Dag>,
    /// Edit budget for the local-search families. The independent-set
    /// generator takes the operation set and stores the adjusted value; the
    /// clique generator stores the reversal-capable budget, to be doubled by
    /// the consumer when reversals are unavailable.
    pub budget: Option<usize>,
    /// Named integer constants of the construction.
    pub constants: Vec<(String, i64)>,
    /// Clique family only: the node partition, parts in input order.
    pub parts: Option<Vec<Vec<NodeId>>>,
    /// Satisfiability family only: the source formula.
    pub cnf: Option<Cnf>,
}

impl ReductionInstance {
    pub fn constant(&self, name: &str) -> Option<i64> {
        self.constants
            .iter()
            .find(|(key, _)| key == name)
            .map(|&(_, value)| value)
    }
}

/// Sum of listed values over a digraph's parent sets; unlisted sets
/// contribute zero. Agrees with `ScoreFunction::score_of` on dags.
#[cfg_attr(not(debug_assertions), allow(dead_code))]
fn digraph_score(f: &ScoreFunction, d: &Digraph) -> Score {
    d.parent_sets()
        .iter()
        .enumerate()
        .map(|(v, ps)| f.lookup(v as NodeId, ps))
        .sum()
}

fn pair(a: NodeId, b: NodeId) -> Vec<NodeId> {
    let mut p = vec![a, b];
    p.sort_unstable();
    p
}

fn without(set: &[NodeId], x: NodeId) -> Vec<NodeId> {
    set.iter().copied().filter(|&y| y != x).collect()
}

/// Encodes minimum feedback arc set. Nodes are the originals followed by one
/// node per arc (`v{i}`, then `e{u}_{w}` in arc order); the arc node of
/// (u, w) scores 1 with parent set {u}, and each original with incoming arcs
/// scores its in-degree with the full set of its in-arc nodes. The optimum
/// equals 2|E| minus the minimum feedback arc set size, so the stored
/// threshold 2|E| is the k = 0 member of the family: k arcs suffice exactly
/// when some dag scores at least 2|E| - k. The super-structure is the
/// subdivision of the arc multigraph (arc nodes have degree 2, originals keep
/// their total degree).
pub fn fas_reduction(d: &Digraph) -> ReductionInstance {
    let nv = d.node_count();
    let m = d.arc_count();
    let mut names: Vec<String> = (0..nv).map(|v| format!("v{v}")).collect();
    for &(u, w) in d.arcs() {
        names.push(format!("e{u}_{w}"));
    }
    let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = vec![Vec::new(); nv + m];
    let mut in_nodes: Vec<Vec<NodeId>> = vec![Vec::new(); nv];
    for (idx, &(u, w)) in d.arcs().iter().enumerate() {
        let a = (nv + idx) as NodeId;
        entries[a as usize].push((vec![u], 1.0));
        in_nodes[w as usize].push(a);
    }
    for (v, ins) in in_nodes.into_iter().enumerate() {
        if !ins.is_empty() {
            let indeg = ins.len() as f64;
            entries[v].push((ins, indeg));
        }
    }
    let f = ScoreFunction::new(names, entries).expect("generated listing is valid");
    ReductionInstance {
        f,
        threshold: (2 * m) as Score,
        initial: None,
        budget: None,
        constants: vec![("n".into(), nv as i64), ("m".into(), m as i64)],
        parts: None,
        cnf: None,
    }
}

/// Ids of the pair nodes a_ij, i < j, laid out after the nv graph nodes in
/// lexicographic pair order.
fn pair_node_ids(k: usize, nv: usize) -> Vec<Vec<NodeId>> {
    let mut ids = vec![vec![0 as NodeId; k]; k];
    let mut next = nv as NodeId;
    for i in 0..k {
        for j in (i + 1)..k {
            ids[i][j] = next;
            next += 1;
        }
    }
    ids
}

/// Encodes partitioned clique: given a graph whose nodes are split into k
/// parts of size n each, some dag scores at least the threshold exactly when
/// the graph has a clique with one node per part. Nodes are the originals
/// (`v{i}`) followed by one pair node `a{i}_{j}` per unordered part pair;
/// every original in part i scores alpha = k^2 - k - 1 with the full set A_i
/// of its k - 1 incident pair nodes, and a pair node scores epsilon = 2k
/// with {u, w} for every cross edge {u, w} between its two parts. The
/// threshold is nk*alpha + 1.
pub fn clique_reduction(
    g: &UGraph,
    parts: &[Vec<NodeId>],
    k: usize,
    n: usize,
) -> Result<ReductionInstance, ReductionError> {
    if k <= 2 {
        return Err(ReductionError::TooFewParts { got: k, min: 3 });
    }
    if parts.len() != k {
        return Err(ReductionError::BadPartition(format!(
            "got {} parts, expected k = {k}",
            parts.len()
        )));
    }
    if n == 0 {
        return Err(ReductionError::BadPartition("parts must be nonempty".into()));
    }
    let nv = g.node_count();
    if nv != n * k {
        return Err(ReductionError::BadPartition(format!(
            "graph has {nv} nodes, parts cover {}",
            n * k
        )));
    }
    let mut part_of = vec![usize::MAX; nv];
    for (i, part) in parts.iter().enumerate() {
        if part.len() != n {
            return Err(ReductionError::BadPartition(format!(
                "part {i} has {} nodes, expected n = {n}",
                part.len()
            )));
        }
        for &v in part {
            if v as usize >= nv {
                return Err(ReductionError::BadPartition(format!("node {v} out of range")));
            }
            if part_of[v as usize] != usize::MAX {
                return Err(ReductionError::BadPartition(format!("node {v} listed twice")));
            }
            part_of[v as usize] = i;
        }
    }
    let alpha = (k * k - k - 1) as i64;
    let eps = (2 * k) as i64;
    let pair_ids = pair_node_ids(k, nv);
    let mut names: Vec<String> = (0..nv).map(|v| format!("v{v}")).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            names.push(format!("a{i}_{j}"));
        }
    }
    let total = nv + k * (k - 1) / 2;
    let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = vec![Vec::new(); total];
    for i in 0..k {
        let mut a_i: Vec<NodeId> = (0..k)
            .filter(|&j| j != i)
            .map(|j| pair_ids[i.min(j)][i.max(j)])
            .collect();
        a_i.sort_unstable();
        for &v in &parts[i] {
            entries[v as usize].push((a_i.clone(), alpha as f64));
        }
    }
    for &(u, w) in g.edges() {
        let (pu, pw) = (part_of[u as usize], part_of[w as usize]);
        if pu != pw {
            let a = pair_ids[pu.min(pw)][pu.max(pw)];
            entries[a as usize].push((vec![u, w], eps as f64));
        }
    }
    let f = ScoreFunction::new(names, entries).expect("generated listing is valid");
    Ok(ReductionInstance {
        f,
        threshold: (nv as i64 * alpha + 1) as Score,
        initial: None,
        budget: None,
        constants: vec![
            ("alpha".into(), alpha),
            ("epsilon".into(), eps),
            ("k".into(), k as i64),
            ("n".into(), n as i64),
        ],
        parts: Some(parts.to_vec()),
        cnf: None,
    })
}

/// Orients a clique instance around a selected edge set: a pair node with a
/// selected edge receives arcs from the edge's two endpoints, every other
/// node of its two parts receives an arc from the pair node. The selection
/// must pick cross edges of the source graph, at most one per part pair.
/// The score obeys nk*alpha - |V(E')|*alpha + |E'|*epsilon; the result can
/// be cyclic for some selections, so it comes back as a digraph.
pub fn build_de(
    inst: &ReductionInstance,
    eset: &[(NodeId, NodeId)],
) -> Result<Digraph, ReductionError> {
    let parts = inst.parts.as_ref().ok_or(ReductionError::WrongInstanceKind)?;
    let k = parts.len();
    let nv: usize = parts.iter().map(|p| p.len()).sum();
    if inst.f.n() != nv + k * (k - 1) / 2 {
        return Err(ReductionError::WrongInstanceKind);
    }
    let mut part_of = vec![usize::MAX; nv];
    for (i, part) in parts.iter().enumerate() {
        for &v in part {
            part_of[v as usize] = i;
        }
    }
    let pair_ids = pair_node_ids(k, nv);
    let mut chosen: Vec<Vec<Option<(NodeId, NodeId)>>> = vec![vec![None; k]; k];
    for &(u, w) in eset {
        for x in [u, w] {
            if x as usize >= nv {
                return Err(ReductionError::NotASourceNode(x));
            }
        }
        let (pu, pw) = (part_of[u as usize], part_of[w as usize]);
        if pu == pw {
            return Err(ReductionError::EdgeWithinPart { u, w, part: pu });
        }
        let (i, j) = (pu.min(pw), pu.max(pw));
        if inst
            .f
            .potential_index_of(pair_ids[i][j], &pair(u, w))
            .is_none()
        {
            return Err(ReductionError::EdgeNotInGraph { u, w });
        }
        if chosen[i][j].is_some() {
            return Err(ReductionError::NotRepresentable { i, j });
        }
        chosen[i][j] = Some((u, w));
    }
    let mut arcs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let a = pair_ids[i][j];
            match chosen[i][j] {
                Some((u, w)) => {
                    arcs.push((u, a));
                    arcs.push((w, a));
                    for &x in parts[i].iter().chain(parts[j].iter()) {
                        if x != u && x != w {
                            arcs.push((a, x));
                        }
                    }
                }
                None => {
                    for &x in parts[i].iter().chain(parts[j].iter()) {
                        arcs.push((a, x));
                    }
                }
            }
        }
    }
    let d = Digraph::new(inst.f.n(), arcs)?;
    #[cfg(debug_assertions)]
    {
        let mut endpoints = std::collections::BTreeSet::new();
        let mut edges = 0usize;
        for c in chosen.iter().flatten().flatten() {
            endpoints.insert(c.0);
            endpoints.insert(c.1);
            edges += 1;
        }
        let alpha = (k * k - k - 1) as f64;
        let eps = (2 * k) as f64;
        let want = (nv - endpoints.len()) as f64 * alpha + edges as f64 * eps;
        debug_assert_eq!(digraph_score(&inst.f, &d), want);
    }
    Ok(d)
}

/// Local-search form of the clique encoding: the start dag orients every
/// pair node at its parts (the empty selection), scoring threshold - 1, and
/// an improving neighbor within the budget exists exactly when the
/// partitioned clique exists. The stored budget k(k-1) covers the witness
/// move, which reverses both endpoint arcs of each of the k(k-1)/2 pair
/// nodes; consumers without REV pay a deletion plus an addition per reversal
/// and must double it.
pub fn clique_localsearch_reduction(
    g: &UGraph,
    parts: &[Vec<NodeId>],
    k: usize,
    n: usize,
) -> Result<ReductionInstance, ReductionError> {
    let mut inst = clique_reduction(g, parts, k, n)?;
    let start = build_de(&inst, &[]).expect("empty selection is representable");
    let start = Dag::new(start).expect("pair nodes only point at graph nodes");
    let budget = k * (k - 1);
    inst.initial = Some(start);
    inst.budget = Some(budget);
    inst.constants.push(("kprime".into(), budget as i64));
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndsetVariant {
    /// Super-structure degree stays at most 5.
    Degree5,
    /// Larger construction whose super-structure degree stays at most 3.
    Degree3,
}

#[derive(Default)]
struct Builder {
    names: Vec<String>,
    arcs: Vec<(NodeId, NodeId)>,
}

impl Builder {
    fn add(&mut self, name: String) -> NodeId {
        let id = self.names.len() as NodeId;
        self.names.push(name);
        id
    }

    fn arc(&mut self, u: NodeId, v: NodeId) {
        self.arcs.push((u, v));
    }
}

/// Left-complete binary tree hung off `root` with one leaf per entry of
/// `leaf_names`; returns the leaf ids aligned with that slice. Arcs point
/// away from the root, or at it when `toward_root` is set. Internal nodes
/// are named by heap position under `internal_prefix`; a single-leaf tree is
/// the root plus one child, and an empty one is the bare root.
fn heap_tree(
    b: &mut Builder,
    root: NodeId,
    leaf_names: &[String],
    internal_prefix: &str,
    toward_root: bool,
) -> Vec<NodeId> {
    let l = leaf_names.len();
    if l == 0 {
        return Vec::new();
    }
    if l == 1 {
        let leaf = b.add(leaf_names[0].clone());
        if toward_root {
            b.arc(leaf, root);
        } else {
            b.arc(root, leaf);
        }
        return vec![leaf];
    }
    // heap positions 1..=2l-1; position 1 is the existing root, positions
    // l..=2l-1 are the leaves
    let mut ids = vec![root; 2 * l];
    for pos in 2..=(2 * l - 1) {
        let id = if pos < l {
            b.add(format!("{internal_prefix}{pos}"))
        } else {
            b.add(leaf_names[pos - l].clone())
        };
        ids[pos] = id;
        let up = ids[pos / 2];
        if toward_root {
            b.arc(id, up);
        } else {
            b.arc(up, id);
        }
    }
    ids[l..].to_vec()
}

/// Encodes independent set as a local-search question: the start dag has an
/// improving neighbor within the stored budget exactly when the graph has an
/// independent set of size k. Selecting node v means reversing the arcs out
/// of its source role node (two arcs in the degree-5 layout, three in the
/// degree-3 layout) so that it collects epsilon = 1, and any such move only
/// pays off once the arc into the global tree root r1 is also reversed,
/// dropping alpha = k - 1; beta = |V(G)| protects every other listing.
/// Budgets: 2k + 1 (degree 5) or 3k + 1 (degree 3) when REV is available,
/// doubled otherwise.
///
/// # Panics
///
/// The operation set must be nontrivial and k at least 1.
pub fn indset_localsearch_reduction(
    g: &UGraph,
    k: usize,
    ops: OpSet,
    variant: IndsetVariant,
) -> ReductionInstance {
    assert!(k >= 1, "independent-set target must be at least 1");
    assert!(
        ops.is_nontrivial(),
        "operation set {ops} admits no improving move"
    );
    let nv = g.node_count();
    let adj = g.adjacency();
    let mut b = Builder::default();
    let (mut v1, mut v1a, mut v1b) = (Vec::new(), Vec::new(), Vec::new());
    let mut v2 = Vec::with_capacity(nv);
    for v in 0..nv {
        match variant {
            IndsetVariant::Degree5 => v1.push(b.add(format!("v1_{v}"))),
            IndsetVariant::Degree3 => {
                v1a.push(b.add(format!("v1a_{v}")));
                v1b.push(b.add(format!("v1b_{v}")));
            }
        }
        v2.push(b.add(format!("v2_{v}")));
    }
    let r1 = b.add("r1".into());
    let r2 = b.add("r2".into());
    let t1_names: Vec<String> = (0..nv).map(|v| format!("lt1_{v}")).collect();
    let lt1 = heap_tree(&mut b, r1, &t1_names, "it1_", false);
    let t2_names: Vec<String> = (0..nv).map(|v| format!("lt2_{v}")).collect();
    let lt2 = heap_tree(&mut b, r2, &t2_names, "it2_", true);
    b.arc(r2, r1);

    // per node: an out-tree spreading its cross arcs and an in-tree
    // collecting them, one leaf per neighbor (the degree-3 out-tree carries
    // one extra leaf that feeds the node's global in-tree leaf)
    let mut out_leaves: Vec<Vec<NodeId>> = Vec::with_capacity(nv);
    let mut in_leaves: Vec<Vec<NodeId>> = Vec::with_capacity(nv);
    for v in 0..nv {
        let out = match variant {
            IndsetVariant::Degree5 => {
                let names: Vec<String> =
                    adj[v].iter().map(|u| format!("lv1_{v}_{u}")).collect();
                heap_tree(&mut b, v1[v], &names, &format!("iv1_{v}_"), false)
            }
            IndsetVariant::Degree3 => {
                let mut names: Vec<String> =
                    adj[v].iter().map(|u| format!("lv1a_{v}_{u}")).collect();
                names.push(format!("lv1a_{v}_t2"));
                heap_tree(&mut b, v1a[v], &names, &format!("iv1a_{v}_"), false)
            }
        };
        out_leaves.push(out);
        let names: Vec<String> = adj[v].iter().map(|u| format!("lv2_{v}_{u}")).collect();
        in_leaves.push(heap_tree(&mut b, v2[v], &names, &format!("iv2_{v}_"), true));
    }
    for v in 0..nv {
        match variant {
            IndsetVariant::Degree5 => {
                b.arc(v1[v], v2[v]);
                b.arc(v1[v], lt1[v]);
                b.arc(v1[v], lt2[v]);
            }
            IndsetVariant::Degree3 => {
                b.arc(v1a[v], v1b[v]);
                b.arc(v1b[v], v2[v]);
                b.arc(v1b[v], lt1[v]);
                b.arc(out_leaves[v][adj[v].len()], lt2[v]);
            }
        }
    }
    for &(u, w) in g.edges() {
        let pu = adj[u as usize].binary_search(&w).unwrap();
        let pw = adj[w as usize].binary_search(&u).unwrap();
        b.arc(out_leaves[u as usize][pu], in_leaves[w as usize][pw]);
        b.arc(out_leaves[w as usize][pw], in_leaves[u as usize][pu]);
    }

    let total = b.names.len();
    let initial = Dag::from_arcs(total, b.arcs.iter().copied()).expect("start dag is acyclic");
    let parents = initial.parent_sets();
    let alpha = (k - 1) as f64;
    let beta = nv as f64;
    let mut source_role = vec![false; total];
    for v in 0..nv {
        let s = match variant {
            IndsetVariant::Degree5 => v1[v],
            IndsetVariant::Degree3 => v1a[v],
        };
        source_role[s as usize] = true;
    }
    let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = vec![Vec::new(); total];
    for x in 0..total {
        if !source_role[x] && x != r1 as usize {
            entries[x].push((parents[x].clone(), beta));
        }
    }
    for v in 0..nv {
        match variant {
            IndsetVariant::Degree5 => {
                entries[v1[v] as usize].push((pair(v2[v], lt1[v]), 1.0));
                entries[v2[v] as usize].push((without(&parents[v2[v] as usize], v1[v]), beta));
                entries[lt1[v] as usize]
                    .push((without(&parents[lt1[v] as usize], v1[v]), beta));
            }
            IndsetVariant::Degree3 => {
                entries[v1a[v] as usize].push((vec![v1b[v]], 1.0));
                entries[v1b[v] as usize].push((pair(v2[v], lt1[v]), beta));
                entries[v2[v] as usize].push((without(&parents[v2[v] as usize], v1b[v]), beta));
                entries[lt1[v] as usize]
                    .push((without(&parents[lt1[v] as usize], v1b[v]), beta));
            }
        }
    }
    entries[r1 as usize].push((vec![r2], alpha));
    let mut above = parents[r2 as usize].clone();
    above.push(r1);
    above.sort_unstable();
    entries[r2 as usize].push((above, beta));

    let f = ScoreFunction::new(b.names, entries).expect("generated listing is valid");
    debug_assert_eq!(f.superstructure(), initial.skeleton());
    debug_assert!(
        f.superstructure().max_degree()
            <= match variant {
                IndsetVariant::Degree5 => 5,
                IndsetVariant::Degree3 => 3,
            }
    );
    debug_assert_eq!(f.classify(&initial), Admissibility::StrictlyAdmissible);
    let base = match variant {
        IndsetVariant::Degree5 => 2 * k + 1,
        IndsetVariant::Degree3 => 3 * k + 1,
    };
    let budget = if ops.has_rev() { base } else { 2 * base };
    let threshold = f.score_of(&initial) + 1.0;
    ReductionInstance {
        f,
        threshold,
        initial: Some(initial),
        budget: Some(budget),
        constants: vec![
            ("alpha".into(), (k - 1) as i64),
            ("beta".into(), nv as i64),
            ("epsilon".into(), 1),
            ("k".into(), k as i64),
            ("kprime".into(), budget as i64),
        ],
        parts: None,
        cnf: None,
    }
}

/// Node layout of the satisfiability encoding: chain nodes d_0..d_n and
/// t_0..t_{n+m}, then per variable the four roles x, nx, a, b, then per
/// clause three literal slots and the clause node.
#[derive(Clone, Copy)]
struct SatIds {
    base_t: u32,
    base_var: u32,
    base_cl: u32,
    total: usize,
}

impl SatIds {
    fn new(n: usize, m: usize) -> SatIds {
        let base_t = (n + 1) as u32;
        let base_var = base_t + (n + m + 1) as u32;
        let base_cl = base_var + (4 * n) as u32;
        SatIds {
            base_t,
            base_var,
            base_cl,
            total: 6 * n + 5 * m + 2,
        }
    }

    fn d(self, i: usize) -> NodeId {
        i as NodeId
    }

    fn t(self, i: usize) -> NodeId {
        self.base_t + i as u32
    }

    fn x(self, v: usize) -> NodeId {
        self.base_var + 4 * v as u32
    }

    fn nx(self, v: usize) -> NodeId {
        self.base_var + 4 * v as u32 + 1
    }

    fn a(self, v: usize) -> NodeId {
        self.base_var + 4 * v as u32 + 2
    }

    fn b(self, v: usize) -> NodeId {
        self.base_var + 4 * v as u32 + 3
    }

    fn lit(self, l: Lit) -> NodeId {
        if l.negated {
            self.nx(l.var as usize)
        } else {
            self.x(l.var as usize)
        }
    }

    fn slot(self, j: usize, s: usize) -> NodeId {
        self.base_cl + (4 * j + s) as u32
    }

    fn clause(self, j: usize) -> NodeId {
        self.base_cl + (4 * j + 3) as u32
    }
}

/// Encodes 3-satisfiability (with every literal filling at most two clause
/// slots): some dag scores at least the threshold s = (4n + 5m + 2)*alpha +
/// n*epsilon, with alpha = n + 1 and epsilon = 1, exactly when the formula
/// is satisfiable. Two directed chains (descending t_i feeding d_0, then
/// ascending d_i) thread every variable gadget a -> {x, nx} -> b and every
/// clause node, so the directed super-structure is cyclic as a whole but
/// acyclic once d_0 is removed, and all in- and out-degrees stay at most 3.
pub fn sat_reduction(cnf: &Cnf) -> Result<ReductionInstance, ReductionError> {
    let m = cnf.clauses().len();
    if m == 0 {
        return Err(ReductionError::EmptyFormula);
    }
    cnf.check_occurrence_bound()?;
    let n = cnf.n_vars();
    let ids = SatIds::new(n, m);
    let mut names: Vec<String> = Vec::with_capacity(ids.total);
    for i in 0..=n {
        names.push(format!("d{i}"));
    }
    for i in 0..=(n + m) {
        names.push(format!("t{i}"));
    }
    for v in 0..n {
        names.push(format!("x{v}"));
        names.push(format!("nx{v}"));
        names.push(format!("a{v}"));
        names.push(format!("b{v}"));
    }
    for j in 0..m {
        for s in 0..3 {
            names.push(format!("l{j}_{s}"));
        }
        names.push(format!("c{j}"));
    }
    let alpha = (n + 1) as f64;
    let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = vec![Vec::new(); ids.total];
    entries[ids.d(0) as usize].push((vec![ids.t(0)], alpha));
    entries[ids.t(0) as usize].push((vec![ids.t(1)], alpha));
    for i in 1..=n {
        entries[ids.d(i) as usize].push((vec![ids.d(i - 1)], alpha));
        entries[ids.t(i) as usize].push((pair(ids.t(i + 1), ids.b(i - 1)), alpha));
        let v = i - 1;
        entries[ids.a(v) as usize].push((vec![ids.d(i)], alpha));
        entries[ids.x(v) as usize].push((vec![ids.a(v)], 1.0));
        entries[ids.nx(v) as usize].push((vec![ids.a(v)], 1.0));
        entries[ids.b(v) as usize].push((vec![ids.x(v)], alpha));
        entries[ids.b(v) as usize].push((vec![ids.nx(v)], alpha));
    }
    for j in 0..m {
        for (s, &lit) in cnf.clauses()[j].iter().enumerate() {
            entries[ids.slot(j, s) as usize].push((vec![ids.lit(lit)], alpha));
            entries[ids.clause(j) as usize].push((vec![ids.slot(j, s)], alpha));
        }
        let tj = ids.t(n + 1 + j) as usize;
        if j + 1 < m {
            entries[tj].push((pair(ids.t(n + 2 + j), ids.clause(j)), alpha));
        } else {
            entries[tj].push((vec![ids.clause(j)], alpha));
        }
    }
    let f = ScoreFunction::new(names, entries).expect("generated listing is valid");
    let threshold = (4 * n + 5 * m + 2) as f64 * alpha + n as f64;
    Ok(ReductionInstance {
        f,
        threshold,
        initial: None,
        budget: None,
        constants: vec![
            ("alpha".into(), (n + 1) as i64),
            ("epsilon".into(), 1),
            ("n".into(), n as i64),
            ("m".into(), m as i64),
        ],
        parts: None,
        cnf: Some(cnf.clone()),
    })
}

/// Builds the dag certifying a satisfying assignment: both chains run at
/// full score, each variable node routes a -> (unsatisfied literal) and
/// (satisfied literal) -> b, and each clause node picks its first satisfied
/// literal slot as parent. Scores exactly the threshold.
pub fn sat_witness_dag(
    inst: &ReductionInstance,
    assignment: &[bool],
) -> Result<Dag, ReductionError> {
    let cnf = inst.cnf.as_ref().ok_or(ReductionError::WrongInstanceKind)?;
    let n = cnf.n_vars();
    let m = cnf.clauses().len();
    if assignment.len() != n {
        return Err(ReductionError::AssignmentLength {
            got: assignment.len(),
            want: n,
        });
    }
    let ids = SatIds::new(n, m);
    let mut arcs = vec![(ids.t(0), ids.d(0))];
    for i in 1..=n {
        arcs.push((ids.d(i - 1), ids.d(i)));
        arcs.push((ids.d(i), ids.a(i - 1)));
        arcs.push((ids.b(i - 1), ids.t(i)));
        arcs.push((ids.t(i), ids.t(i - 1)));
    }
    for (v, &value) in assignment.iter().enumerate() {
        if value {
            arcs.push((ids.a(v), ids.nx(v)));
            arcs.push((ids.x(v), ids.b(v)));
        } else {
            arcs.push((ids.a(v), ids.x(v)));
            arcs.push((ids.nx(v), ids.b(v)));
        }
    }
    for (j, clause) in cnf.clauses().iter().enumerate() {
        for (s, &lit) in clause.iter().enumerate() {
            arcs.push((ids.lit(lit), ids.slot(j, s)));
        }
        arcs.push((ids.clause(j), ids.t(n + 1 + j)));
        arcs.push((ids.t(n + 1 + j), ids.t(n + j)));
        let hit = (0..3)
            .find(|&s| clause[s].eval(assignment))
            .ok_or(ReductionError::UnsatisfiedClause(j))?;
        arcs.push((ids.slot(j, hit), ids.clause(j)));
    }
    let dag = Dag::from_arcs(ids.total, arcs).expect("witness orientation is acyclic");
    debug_assert_eq!(inst.f.score_of(&dag), inst.threshold);
    Ok(dag)
}

/// Reads an assignment off a dag that reaches the threshold: variable v is
/// true exactly when the arc from its a node into its x node is absent.
pub fn sat_decode(inst: &ReductionInstance, d: &Dag) -> Result<Vec<bool>, ReductionError> {
    let cnf = inst.cnf.as_ref().ok_or(ReductionError::WrongInstanceKind)?;
    if d.node_count() != inst.f.n() {
        return Err(ReductionError::NodeCountMismatch {
            got: d.node_count(),
            want: inst.f.n(),
        });
    }
    let score = inst.f.score_of(d);
    if score < inst.threshold {
        return Err(ReductionError::BelowThreshold {
            score,
            threshold: inst.threshold,
        });
    }
    let ids = SatIds::new(cnf.n_vars(), cnf.clauses().len());
    let assignment: Vec<bool> = (0..cnf.n_vars())
        .map(|v| !d.has_arc(ids.a(v), ids.x(v)))
        .collect();
    debug_assert!(
        cnf.eval(&assignment),
        "threshold-reaching dags decode to satisfying assignments"
    );
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::local_search::{
        brute_force_step, dp_local_search_step, neighbor_distance, EditCost,
    };
    use crate::oracle::{min_fas_bruteforce, optimal_by_enumeration, optimal_by_subset_dp};
    use crate::solver::solve_exact;
    use crate::treedecomp::{
        make_nice, minfill_decomposition, star_decomposition, NiceTreeDecomposition,
    };

    fn nice_for(f: &ScoreFunction) -> NiceTreeDecomposition {
        let g = f.superstructure();
        let td = minfill_decomposition(&g);
        make_nice(&td, &g).unwrap()
    }

    fn optimum(f: &ScoreFunction) -> (Score, Dag) {
        let (s, d, _) = solve_exact(f, &nice_for(f)).unwrap();
        (s, d)
    }

    fn dp_step(f: &ScoreFunction, d: &Dag, k: usize, ops: OpSet) -> Option<Dag> {
        dp_local_search_step(f, d, k, ops, &nice_for(f)).unwrap()
    }

    fn id_of(f: &ScoreFunction, name: &str) -> NodeId {
        f.names().iter().position(|n| n == name).unwrap() as NodeId
    }

    #[test]
    fn fas_two_cycle() {
        let d = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        let inst = fas_reduction(&d);
        assert_eq!(inst.f.n(), 4);
        assert_eq!(inst.threshold, 4.0);
        assert_eq!(inst.f.names(), ["v0", "v1", "e0_1", "e1_0"]);
        // arc nodes score 1 with their tail, originals list the full in-arc set
        assert_eq!(inst.f.lookup(2, &[0]), 1.0);
        assert_eq!(inst.f.lookup(3, &[1]), 1.0);
        assert_eq!(inst.f.lookup(0, &[3]), 1.0);
        assert_eq!(inst.f.lookup(1, &[2]), 1.0);
        let (best, _) = optimal_by_enumeration(&inst.f).unwrap();
        assert_eq!(best, 3.0);
        assert_eq!(min_fas_bruteforce(&d).unwrap(), 1);
    }

    #[test]
    fn fas_acyclic_inputs_score_full() {
        let one = Digraph::new(2, [(0, 1)]).unwrap();
        let inst = fas_reduction(&one);
        assert_eq!(inst.f.lookup(2, &[0]), 1.0);
        assert_eq!(inst.f.lookup(1, &[2]), 1.0);
        let (best, _) = optimal_by_enumeration(&inst.f).unwrap();
        assert_eq!(best, 2.0);

        let dag = Digraph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let inst = fas_reduction(&dag);
        let (best, _) = optimal_by_enumeration(&inst.f).unwrap();
        assert_eq!(best, 6.0);
        assert_eq!(best, inst.threshold);

        let arcless = fas_reduction(&Digraph::new(3, []).unwrap());
        assert_eq!(arcless.threshold, 0.0);
        assert_eq!(optimal_by_enumeration(&arcless.f).unwrap().0, 0.0);
    }

    #[test]
    fn fas_superstructure_subdivides_the_arc_multigraph() {
        // antiparallel arcs keep distinct arc nodes: the 2-cycle's
        // super-structure is a 4-cycle even though its skeleton is one edge
        let d = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        let inst = fas_reduction(&d);
        let s = inst.f.superstructure();
        assert_eq!(s.edges(), [(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(s.max_degree(), 2);
        assert_eq!(d.skeleton().max_degree(), 1);

        let cases: Vec<(usize, Vec<(NodeId, NodeId)>)> = vec![
            (4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
            (5, vec![(0, 1), (1, 0), (2, 1), (3, 4), (4, 3), (2, 4)]),
        ];
        for (nn, arcs) in cases {
            let d = Digraph::new(nn, arcs).unwrap();
            let inst = fas_reduction(&d);
            let adj = inst.f.superstructure().adjacency();
            let mut total = vec![0usize; nn];
            for &(u, w) in d.arcs() {
                total[u as usize] += 1;
                total[w as usize] += 1;
            }
            for (v, want) in total.iter().enumerate() {
                assert_eq!(adj[v].len(), *want);
            }
            for a in nn..(nn + d.arc_count()) {
                assert_eq!(adj[a].len(), 2);
            }
        }
    }

    #[test]
    fn fas_optimum_tracks_minimum_feedback_sets() {
        let cases: Vec<(usize, Vec<(NodeId, NodeId)>)> = vec![
            (3, vec![(0, 1), (1, 2), (2, 0)]),
            (3, vec![(0, 1), (1, 0), (1, 2), (2, 1)]),
            (4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (1, 0)]),
        ];
        for (nn, arcs) in cases {
            let d = Digraph::new(nn, arcs).unwrap();
            let inst = fas_reduction(&d);
            let fas = min_fas_bruteforce(&d).unwrap();
            let (best, dag) = optimum(&inst.f);
            assert_eq!(best, inst.threshold - fas as f64);
            assert_eq!(inst.f.score_of(&dag), best);
        }
    }

    fn tripartite(edges: &[(NodeId, NodeId)]) -> (UGraph, Vec<Vec<NodeId>>) {
        let g = UGraph::new(3, edges.iter().copied()).unwrap();
        (g, vec![vec![0], vec![1], vec![2]])
    }

    #[test]
    fn clique_constants_and_threshold() {
        let (g, parts) = tripartite(&[(0, 1), (0, 2), (1, 2)]);
        let inst = clique_reduction(&g, &parts, 3, 1).unwrap();
        assert_eq!(inst.f.n(), 6);
        assert_eq!(inst.constant("alpha"), Some(5));
        assert_eq!(inst.constant("epsilon"), Some(6));
        assert_eq!(inst.threshold, 16.0);
        let (best, _) = optimal_by_subset_dp(&inst.f).unwrap();
        assert_eq!(best, 18.0);

        let (g2, parts2) = tripartite(&[(0, 1), (0, 2)]);
        let inst2 = clique_reduction(&g2, &parts2, 3, 1).unwrap();
        let (best2, _) = optimal_by_subset_dp(&inst2.f).unwrap();
        assert!(best2 < 16.0);
    }

    #[test]
    fn clique_rejects_bad_inputs() {
        let g2 = UGraph::new(2, [(0, 1)]).unwrap();
        assert_eq!(
            clique_reduction(&g2, &[vec![0], vec![1]], 2, 1).unwrap_err(),
            ReductionError::TooFewParts { got: 2, min: 3 }
        );
        let (g3, _) = tripartite(&[(0, 1)]);
        assert!(matches!(
            clique_reduction(&g3, &[vec![0], vec![1, 2], vec![]], 3, 1),
            Err(ReductionError::BadPartition(_))
        ));
        assert!(matches!(
            clique_reduction(&g3, &[vec![0], vec![1], vec![2]], 3, 2),
            Err(ReductionError::BadPartition(_))
        ));
        let g6 = UGraph::new(6, [(0, 2)]).unwrap();
        assert!(matches!(
            clique_reduction(&g6, &[vec![0, 1], vec![1, 2], vec![4, 5]], 3, 2),
            Err(ReductionError::BadPartition(_))
        ));
    }

    #[test]
    fn build_de_scores_follow_the_identity() {
        let (g, parts) = tripartite(&[(0, 1), (0, 2), (1, 2)]);
        let inst = clique_reduction(&g, &parts, 3, 1).unwrap();
        let empty = build_de(&inst, &[]).unwrap();
        assert_eq!(digraph_score(&inst.f, &empty), 15.0);
        let parents = empty.parent_sets();
        for v in 0..3u32 {
            // with nothing selected every graph node keeps its full pair set
            assert_eq!(&parents[v as usize], &inst.f.listed(v)[0].0);
        }
        let one = build_de(&inst, &[(0, 1)]).unwrap();
        assert_eq!(digraph_score(&inst.f, &one), 11.0);
        let full = build_de(&inst, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(digraph_score(&inst.f, &full), 18.0);
        assert!(full.is_acyclic());

        let edges = [(0u32, 1u32), (0, 2), (1, 2)];
        for mask in 0u32..8 {
            let sel: Vec<_> = (0..3)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| edges[i])
                .collect();
            let d = build_de(&inst, &sel).unwrap();
            let mut covered = BTreeSet::new();
            for &(u, w) in &sel {
                covered.insert(u);
                covered.insert(w);
            }
            let want = 15.0 - 5.0 * covered.len() as f64 + 6.0 * sel.len() as f64;
            assert_eq!(digraph_score(&inst.f, &d), want);
        }
    }

    #[test]
    fn build_de_rejections_and_cyclic_selections() {
        let (g, parts) = tripartite(&[(0, 1), (0, 2), (1, 2)]);
        let inst = clique_reduction(&g, &parts, 3, 1).unwrap();
        assert_eq!(
            build_de(&inst, &[(0, 1), (1, 0)]).unwrap_err(),
            ReductionError::NotRepresentable { i: 0, j: 1 }
        );

        let g6 = UGraph::new(
            6,
            [
                (0, 2),
                (0, 3),
                (1, 2),
                (2, 4),
                (2, 5),
                (3, 4),
                (3, 5),
                (0, 4),
                (0, 5),
                (1, 4),
                (1, 5),
            ],
        )
        .unwrap();
        let parts6 = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let inst6 = clique_reduction(&g6, &parts6, 3, 2).unwrap();
        assert_eq!(
            build_de(&inst6, &[(0, 2), (1, 2)]).unwrap_err(),
            ReductionError::NotRepresentable { i: 0, j: 1 }
        );
        assert!(matches!(
            build_de(&inst6, &[(0, 1)]),
            Err(ReductionError::EdgeWithinPart { .. })
        ));
        // (1, 3) crosses parts 0 and 1 but is not an edge of g6
        assert_eq!(
            build_de(&inst6, &[(1, 3)]).unwrap_err(),
            ReductionError::EdgeNotInGraph { u: 1, w: 3 }
        );
        assert!(matches!(
            build_de(&inst6, &[(0, 9)]),
            Err(ReductionError::NotASourceNode(9))
        ));
        // each part contributes the covered node of one pair and an
        // uncovered receiver of another, closing a directed cycle
        let cyclic = build_de(&inst6, &[(0, 2), (3, 4), (1, 5)]).unwrap();
        assert!(cyclic.find_cycle().is_some());
    }

    #[test]
    fn clique_localsearch_budget_and_neighbors() {
        let (g, parts) = tripartite(&[(0, 1), (0, 2), (1, 2)]);
        let inst = clique_localsearch_reduction(&g, &parts, 3, 1).unwrap();
        let d0 = inst.initial.as_ref().unwrap();
        assert_eq!(inst.budget, Some(6));
        assert_eq!(inst.f.score_of(d0), 15.0);
        assert_eq!(inst.threshold, 16.0);
        // completing a pair node flips both endpoint arcs, so three
        // reversals reach nothing; six cover the full clique move
        assert_eq!(brute_force_step(&inst.f, d0, 3, OpSet::REV).unwrap(), None);
        let better = brute_force_step(&inst.f, d0, 6, OpSet::REV).unwrap().unwrap();
        assert!(inst.f.score_of(&better) >= 16.0);
        let adddel = OpSet::ADD.union(OpSet::DEL);
        let better2 = brute_force_step(&inst.f, d0, 12, adddel).unwrap().unwrap();
        assert!(inst.f.score_of(&better2) >= 16.0);

        let (g2, parts2) = tripartite(&[(0, 1), (0, 2)]);
        let inst2 = clique_localsearch_reduction(&g2, &parts2, 3, 1).unwrap();
        let d2 = inst2.initial.as_ref().unwrap();
        assert_eq!(brute_force_step(&inst2.f, d2, 6, OpSet::REV).unwrap(), None);
        assert_eq!(brute_force_step(&inst2.f, d2, 12, adddel).unwrap(), None);
    }

    #[test]
    fn clique_pair_nodes_form_a_star_center() {
        let (g, parts) = tripartite(&[(0, 1), (0, 2), (1, 2)]);
        let inst = clique_reduction(&g, &parts, 3, 1).unwrap();
        let td = star_decomposition(&inst.f.superstructure(), &[3, 4, 5]).unwrap();
        assert_eq!(td.width(), 3);
    }

    #[test]
    fn indset_path_improves_triangle_does_not() {
        let path = UGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = indset_localsearch_reduction(&path, 2, OpSet::REV, IndsetVariant::Degree5);
        assert_eq!(inst.budget, Some(5));
        assert_eq!(inst.constant("alpha"), Some(1));
        assert_eq!(inst.constant("beta"), Some(3));
        assert_eq!(inst.constant("epsilon"), Some(1));
        let d = inst.initial.as_ref().unwrap();
        let base = inst.f.score_of(d);
        let better = brute_force_step(&inst.f, d, 5, OpSet::REV).unwrap().unwrap();
        assert!(inst.f.score_of(&better) > base);
        let via_dp = dp_step(&inst.f, d, 5, OpSet::REV).unwrap();
        assert!(inst.f.score_of(&via_dp) > base);

        let tri = UGraph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let inst_t = indset_localsearch_reduction(&tri, 2, OpSet::REV, IndsetVariant::Degree5);
        let dt = inst_t.initial.as_ref().unwrap();
        assert_eq!(brute_force_step(&inst_t.f, dt, 5, OpSet::REV).unwrap(), None);
    }

    #[test]
    fn indset_witness_reversal_scores_plus_one() {
        let path = UGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        for variant in [IndsetVariant::Degree5, IndsetVariant::Degree3] {
            let inst = indset_localsearch_reduction(&path, 2, OpSet::REV, variant);
            let d = inst.initial.as_ref().unwrap();
            let f = &inst.f;
            let mut rev: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            rev.insert((id_of(f, "r2"), id_of(f, "r1")));
            for v in ["0", "2"] {
                match variant {
                    IndsetVariant::Degree5 => {
                        rev.insert((id_of(f, &format!("v1_{v}")), id_of(f, &format!("v2_{v}"))));
                        rev.insert((id_of(f, &format!("v1_{v}")), id_of(f, &format!("lt1_{v}"))));
                    }
                    IndsetVariant::Degree3 => {
                        rev.insert((id_of(f, &format!("v1a_{v}")), id_of(f, &format!("v1b_{v}"))));
                        rev.insert((id_of(f, &format!("v1b_{v}")), id_of(f, &format!("v2_{v}"))));
                        rev.insert((id_of(f, &format!("v1b_{v}")), id_of(f, &format!("lt1_{v}"))));
                    }
                }
            }
            let arcs: Vec<_> = d
                .arcs()
                .iter()
                .map(|&(u, w)| if rev.contains(&(u, w)) { (w, u) } else { (u, w) })
                .collect();
            let better = Dag::from_arcs(f.n(), arcs).unwrap();
            assert_eq!(f.classify(&better), Admissibility::StrictlyAdmissible);
            assert_eq!(f.score_of(&better), inst.threshold);
            let want = match variant {
                IndsetVariant::Degree5 => 5,
                IndsetVariant::Degree3 => 7,
            };
            assert_eq!(neighbor_distance(d, &better, OpSet::REV), EditCost::Finite(want));
        }
    }

    #[test]
    fn indset_budgets_degrees_and_superstructure() {
        let graphs = [
            UGraph::new(3, [(0, 1), (1, 2)]).unwrap(),
            UGraph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap(),
            UGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap(),
            UGraph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap(),
            UGraph::new(2, []).unwrap(),
        ];
        let adddel = OpSet::ADD.union(OpSet::DEL);
        for g in &graphs {
            for k in [1usize, 2] {
                let cases = [
                    (IndsetVariant::Degree5, 5, 2 * k + 1),
                    (IndsetVariant::Degree3, 3, 3 * k + 1),
                ];
                for (variant, cap, base) in cases {
                    let inst = indset_localsearch_reduction(g, k, OpSet::REV, variant);
                    assert_eq!(inst.budget, Some(base));
                    let d = inst.initial.as_ref().unwrap();
                    assert_eq!(inst.f.superstructure(), d.skeleton());
                    assert!(inst.f.superstructure().max_degree() <= cap);
                    assert_eq!(inst.f.classify(d), Admissibility::StrictlyAdmissible);
                    assert_eq!(inst.f.score_of(d) + 1.0, inst.threshold);
                    let doubled = indset_localsearch_reduction(g, k, adddel, variant);
                    assert_eq!(doubled.budget, Some(2 * base));
                }
            }
        }
    }

    #[test]
    fn indset_degree3_agrees_with_independent_sets() {
        let path = UGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = indset_localsearch_reduction(&path, 2, OpSet::REV, IndsetVariant::Degree3);
        assert_eq!(inst.budget, Some(7));
        let d = inst.initial.as_ref().unwrap();
        let better = dp_step(&inst.f, d, 7, OpSet::REV).unwrap();
        assert!(inst.f.score_of(&better) > inst.f.score_of(d));

        let tri = UGraph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let inst_t = indset_localsearch_reduction(&tri, 2, OpSet::REV, IndsetVariant::Degree3);
        let dt = inst_t.initial.as_ref().unwrap();
        assert!(dp_step(&inst_t.f, dt, 7, OpSet::REV).is_none());
    }

    #[test]
    #[should_panic(expected = "admits no improving move")]
    fn indset_rejects_trivial_ops() {
        let g = UGraph::new(2, [(0, 1)]).unwrap();
        indset_localsearch_reduction(&g, 1, OpSet::ADD, IndsetVariant::Degree5);
    }

    fn one_clause() -> Cnf {
        Cnf::new(3, vec![[Lit::pos(0), Lit::pos(1), Lit::pos(2)]]).unwrap()
    }

    #[test]
    fn sat_constants_structure_and_degrees() {
        let inst = sat_reduction(&one_clause()).unwrap();
        assert_eq!(inst.f.n(), 25);
        assert_eq!(inst.constant("alpha"), Some(4));
        assert_eq!(inst.threshold, 79.0);
        let sf = inst.f.directed_superstructure();
        assert!(!sf.is_acyclic());
        // the chain anchor d0 (node 0) carries every cycle
        let trimmed = Digraph::new(
            sf.node_count(),
            sf.arcs().iter().copied().filter(|&(u, w)| u != 0 && w != 0),
        )
        .unwrap();
        assert!(trimmed.is_acyclic());
        let mut indeg = vec![0usize; inst.f.n()];
        let mut outdeg = vec![0usize; inst.f.n()];
        for &(u, w) in sf.arcs() {
            outdeg[u as usize] += 1;
            indeg[w as usize] += 1;
        }
        assert!(indeg.iter().all(|&deg| deg <= 3));
        assert!(outdeg.iter().all(|&deg| deg <= 3));
    }

    #[test]
    fn sat_witness_round_trips() {
        let inst = sat_reduction(&one_clause()).unwrap();
        let assignment = vec![true, false, false];
        let w = sat_witness_dag(&inst, &assignment).unwrap();
        assert_eq!(inst.f.score_of(&w), 79.0);
        assert_eq!(sat_decode(&inst, &w).unwrap(), assignment);
        assert_eq!(
            sat_witness_dag(&inst, &[false, false, false]).unwrap_err(),
            ReductionError::UnsatisfiedClause(0)
        );
        assert_eq!(
            sat_witness_dag(&inst, &[true]).unwrap_err(),
            ReductionError::AssignmentLength { got: 1, want: 3 }
        );
        assert!(matches!(
            sat_decode(&inst, &Dag::empty(inst.f.n())),
            Err(ReductionError::BelowThreshold { .. })
        ));
    }

    #[test]
    fn sat_rejections() {
        let packed = Cnf::new(1, vec![[Lit::pos(0), Lit::pos(0), Lit::pos(0)]]).unwrap();
        assert!(matches!(
            sat_reduction(&packed),
            Err(ReductionError::Cnf(CnfError::OccurrenceBound { .. }))
        ));
        let empty = Cnf::new(0, vec![]).unwrap();
        assert_eq!(sat_reduction(&empty).unwrap_err(), ReductionError::EmptyFormula);
    }

    #[test]
    fn sat_solver_optimum_decodes_to_satisfying_assignment() {
        let cnf = Cnf::new(
            3,
            vec![
                [Lit::pos(0), Lit::neg(1), Lit::pos(2)],
                [Lit::neg(0), Lit::pos(1), Lit::neg(2)],
            ],
        )
        .unwrap();
        let inst = sat_reduction(&cnf).unwrap();
        let (best, dag) = optimum(&inst.f);
        assert!(best >= inst.threshold);
        let decoded = sat_decode(&inst, &dag).unwrap();
        assert!(cnf.eval(&decoded));
        // witnesses from every satisfying assignment hit the threshold exactly
        for bits in 0u32..8 {
            let assignment: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            if cnf.eval(&assignment) {
                let w = sat_witness_dag(&inst, &assignment).unwrap();
                assert_eq!(inst.f.score_of(&w), inst.threshold);
                assert_eq!(sat_decode(&inst, &w).unwrap(), assignment);
            }
        }
    }

    #[test]
    fn generated_instances_carry_roles_and_metadata() {
        let (g, parts) = tripartite(&[(0, 1), (1, 2)]);
        let inst = clique_reduction(&g, &parts, 3, 1).unwrap();
        assert_eq!(inst.f.names()[3], "a0_1");
        assert_eq!(inst.parts.as_deref().unwrap(), parts.as_slice());

        let edge = UGraph::new(2, [(0, 1)]).unwrap();
        let ii = indset_localsearch_reduction(&edge, 1, OpSet::REV, IndsetVariant::Degree5);
        assert!(ii.f.names().iter().any(|n| n == "lv1_0_1"));
        // k = 1 makes alpha zero: the root listing stays, valued at zero
        assert_eq!(ii.constant("alpha"), Some(0));
        let r1 = id_of(&ii.f, "r1");
        assert_eq!(ii.f.lookup(r1, &[id_of(&ii.f, "r2")]), 0.0);

        let si = sat_reduction(&one_clause()).unwrap();
        assert_eq!(si.f.names()[0], "d0");
        assert!(si.cnf.is_some());
        assert_eq!(si.constant("n"), Some(3));
        assert_eq!(si.constant("m"), Some(1));
    }
}
