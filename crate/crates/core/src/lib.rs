//! Exact and local-search structure learning for Bayesian networks.
//!
//! The solver maximizes a decomposable score over dags whose skeleton lies
//! inside the super-structure implied by the score's listed parent sets.
//! The exact algorithm runs dynamic programming over a nice tree
//! decomposition of that super-structure; its running time is governed by
//! the decomposition width and the number of listed sets, not by the node
//! count alone. A separate fast path handles score functions whose directed
//! super-structure is already acyclic, and a constrained local-search module
//! reuses the same machinery for bounded-edit neighborhood search.

pub mod cnf;
pub mod graph;
pub mod local_search;
pub mod oracle;
pub mod reductions;
pub mod score;
pub mod solver;
pub mod treedecomp;

pub use cnf::{Cnf, CnfError, Lit};
pub use local_search::{
    brute_force_step, dp_local_search_step, monotone_step, neighbor_distance, Direction,
    EditCost, LocalSearchError, OpSet,
};
pub use graph::{Dag, Digraph, GraphError, NodeId, UGraph};
pub use oracle::OracleError;
pub use reductions::{
    build_de, clique_localsearch_reduction, clique_reduction, fas_reduction,
    indset_localsearch_reduction, sat_decode, sat_reduction, sat_witness_dag, IndsetVariant,
    ReductionError, ReductionInstance,
};
pub use score::{Admissibility, RawScoreFunction, Score, ScoreError, ScoreFunction};
pub use solver::{
    solve_acyclic, solve_exact, NodeStats, RecordTable, SolveError, StatsReport,
};
pub use treedecomp::{
    BagClosure, NiceAuditError, NiceKind, NiceNode, NiceTreeDecomposition, TdError,
    TreeDecomposition,
};
