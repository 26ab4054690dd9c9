//! Graph primitives over dense integer node ids.
//!
//! Nodes are `0..n`; names, where they exist, live in the score function's
//! name table. All edge/arc lists are kept sorted and deduplicated so that
//! equality, hashing and iteration order are canonical.

use std::collections::BTreeSet;

use thiserror::Error;

/// Index into a name table.
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("node id {id} out of range (graph has {n} nodes)")]
    OutOfRange { id: NodeId, n: usize },
    #[error("arc set contains a cycle: {}", format_cycle(.0))]
    Cyclic(Vec<NodeId>),
}

fn format_cycle(cycle: &[NodeId]) -> String {
    let mut s = String::new();
    for v in cycle {
        s.push_str(&v.to_string());
        s.push_str(" -> ");
    }
    if let Some(first) = cycle.first() {
        s.push_str(&first.to_string());
    }
    s
}

/// Undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UGraph {
    n: usize,
    /// Sorted, deduplicated, each stored with the smaller endpoint first.
    edges: Vec<(NodeId, NodeId)>,
}

impl UGraph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for id in [u, v] {
                if id as usize >= n {
                    return Err(GraphError::OutOfRange { id, n });
                }
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(UGraph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        UGraph { n, edges: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    /// Sorted neighbor lists, indexed by node.
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// True if `other` contains every edge of `self`.
    pub fn is_subgraph_of(&self, other: &UGraph) -> bool {
        self.n == other.n && self.edges.iter().all(|&(u, v)| other.has_edge(u, v))
    }
}

/// Directed graph without self-loops; cycles are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    arcs: Vec<(NodeId, NodeId)>,
}

impl Digraph {
    pub fn new(
        n: usize,
        arcs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in arcs {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for id in [u, v] {
                if id as usize >= n {
                    return Err(GraphError::OutOfRange { id, n });
                }
            }
            set.insert((u, v));
        }
        Ok(Digraph {
            n,
            arcs: set.into_iter().collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.arcs.binary_search(&(u, v)).is_ok()
    }

    pub fn out_adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.arcs {
            adj[u as usize].push(v);
        }
        adj
    }

    /// Parent list (in-neighbors) per node, sorted.
    pub fn parent_sets(&self) -> Vec<Vec<NodeId>> {
        let mut parents = vec![Vec::new(); self.n];
        for &(u, v) in &self.arcs {
            parents[v as usize].push(u);
        }
        for list in &mut parents {
            list.sort_unstable();
        }
        parents
    }

    /// Kahn's algorithm; `None` when a cycle blocks a full order.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let adj = self.out_adjacency();
        let mut indeg = vec![0usize; self.n];
        for &(_, v) in &self.arcs {
            indeg[v as usize] += 1;
        }
        let mut queue: Vec<NodeId> = (0..self.n as NodeId).filter(|&v| indeg[v as usize] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &w in &adj[v as usize] {
                indeg[w as usize] -= 1;
                if indeg[w as usize] == 0 {
                    queue.push(w);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Some directed cycle, as the sequence of nodes along it.
    pub fn find_cycle(&self) -> Option<Vec<NodeId>> {
        let adj = self.out_adjacency();
        // Iterative DFS with tri-state marks; `stack_pos` recovers the cycle.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.n];
        let mut stack_pos = vec![usize::MAX; self.n];
        let mut path: Vec<NodeId> = Vec::new();
        for start in 0..self.n as NodeId {
            if color[start as usize] != WHITE {
                continue;
            }
            // (node, next child index)
            let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
            color[start as usize] = GRAY;
            stack_pos[start as usize] = 0;
            path.push(start);
            while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
                if let Some(&w) = adj[v as usize].get(*idx) {
                    *idx += 1;
                    match color[w as usize] {
                        WHITE => {
                            color[w as usize] = GRAY;
                            stack_pos[w as usize] = path.len();
                            path.push(w);
                            stack.push((w, 0));
                        }
                        GRAY => {
                            return Some(path[stack_pos[w as usize]..].to_vec());
                        }
                        _ => {}
                    }
                } else {
                    color[v as usize] = BLACK;
                    stack.pop();
                    path.pop();
                }
            }
        }
        None
    }

    /// Reachability relation: all pairs (u, v), u != v or u == v on a cycle,
    /// with a directed path of length >= 1 from u to v.
    pub fn transitive_closure(&self) -> BTreeSet<(NodeId, NodeId)> {
        let adj = self.out_adjacency();
        let mut closure = BTreeSet::new();
        let mut seen = vec![u32::MAX; self.n];
        let mut stack = Vec::new();
        for u in 0..self.n as NodeId {
            stack.clear();
            for &w in &adj[u as usize] {
                if seen[w as usize] != u {
                    seen[w as usize] = u;
                    stack.push(w);
                }
            }
            while let Some(v) = stack.pop() {
                closure.insert((u, v));
                for &w in &adj[v as usize] {
                    if seen[w as usize] != u {
                        seen[w as usize] = u;
                        stack.push(w);
                    }
                }
            }
        }
        closure
    }

    /// Forget orientation; antiparallel arc pairs collapse to one edge.
    pub fn skeleton(&self) -> UGraph {
        UGraph::new(self.n, self.arcs.iter().copied())
            .expect("digraph invariants imply valid undirected edges")
    }
}

/// Directed acyclic graph; acyclicity is checked at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    inner: Digraph,
}

impl Dag {
    pub fn new(digraph: Digraph) -> Result<Self, GraphError> {
        match digraph.find_cycle() {
            Some(cycle) => Err(GraphError::Cyclic(cycle)),
            None => Ok(Dag { inner: digraph }),
        }
    }

    pub fn from_arcs(
        n: usize,
        arcs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        Dag::new(Digraph::new(n, arcs)?)
    }

    pub fn empty(n: usize) -> Self {
        Dag {
            inner: Digraph::new(n, []).expect("no arcs"),
        }
    }

    /// Builds the dag whose in-neighborhoods are exactly `parents`.
    pub fn from_parent_sets(parents: &[Vec<NodeId>]) -> Result<Self, GraphError> {
        let n = parents.len();
        let mut arcs = Vec::new();
        for (v, ps) in parents.iter().enumerate() {
            for &u in ps {
                arcs.push((u, v as NodeId));
            }
        }
        Dag::from_arcs(n, arcs)
    }

    pub fn as_digraph(&self) -> &Digraph {
        &self.inner
    }

    pub fn node_count(&self) -> usize {
        self.inner.n
    }

    pub fn arc_count(&self) -> usize {
        self.inner.arcs.len()
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.inner.arcs
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.inner.has_arc(u, v)
    }

    pub fn parent_sets(&self) -> Vec<Vec<NodeId>> {
        self.inner.parent_sets()
    }

    pub fn skeleton(&self) -> UGraph {
        self.inner.skeleton()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closure_by_warshall(d: &Digraph) -> BTreeSet<(NodeId, NodeId)> {
        let n = d.node_count();
        let mut reach = vec![vec![false; n]; n];
        for &(u, v) in d.arcs() {
            reach[u as usize][v as usize] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if reach[i][j] {
                    out.insert((i as NodeId, j as NodeId));
                }
            }
        }
        out
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(matches!(UGraph::new(3, [(1, 1)]), Err(GraphError::SelfLoop(1))));
        assert!(matches!(
            Digraph::new(2, [(0, 5)]),
            Err(GraphError::OutOfRange { id: 5, n: 2 })
        ));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = UGraph::new(3, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn two_cycle_is_cyclic() {
        let d = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        assert!(!d.is_acyclic());
        let cycle = d.find_cycle().unwrap();
        assert_eq!(cycle.len(), 2);
        assert!(Dag::new(d).is_err());
    }

    #[test]
    fn chain_is_acyclic_with_order() {
        let d = Digraph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let order = d.topological_order().unwrap();
        let pos: Vec<usize> = {
            let mut p = vec![0; 4];
            for (i, &v) in order.iter().enumerate() {
                p[v as usize] = i;
            }
            p
        };
        for &(u, v) in d.arcs() {
            assert!(pos[u as usize] < pos[v as usize]);
        }
    }

    #[test]
    fn closure_matches_warshall_on_samples() {
        let samples = [
            Digraph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap(),
            Digraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap(),
            Digraph::new(5, [(0, 1), (0, 2), (3, 4)]).unwrap(),
            Digraph::new(1, []).unwrap(),
        ];
        for d in &samples {
            assert_eq!(d.transitive_closure(), closure_by_warshall(d));
        }
    }

    #[test]
    fn closure_of_cycle_contains_diagonal() {
        let d = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        let c = d.transitive_closure();
        assert!(c.contains(&(0, 0)) && c.contains(&(1, 1)));
    }

    #[test]
    fn skeleton_merges_antiparallel_arcs() {
        let d = Digraph::new(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        let s = d.skeleton();
        assert_eq!(s.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn dag_from_parent_sets_round_trips() {
        let parents = vec![vec![], vec![0], vec![0, 1]];
        let d = Dag::from_parent_sets(&parents).unwrap();
        assert_eq!(d.parent_sets(), parents);
    }
}
