//! Command-line driver tying the solvers, oracles, local search,
//! decompositions and instance generators to the text formats in `codec`.
//!
//! Exit codes: 0 on success, 1 on input or usage errors, 2 when a
//! configured size limit is exceeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnsl_cli::codec::{self, ParseError};
use bnsl_core::oracle::{optimal_by_enumeration, optimal_by_subset_dp};
use bnsl_core::treedecomp::{exact_decomposition, make_nice, minfill_decomposition};
use bnsl_core::{
    brute_force_step, clique_localsearch_reduction, clique_reduction, dp_local_search_step,
    fas_reduction, indset_localsearch_reduction, monotone_step, sat_reduction, solve_acyclic,
    solve_exact, Dag, Direction, IndsetVariant, LocalSearchError, NiceKind,
    NiceTreeDecomposition, OpSet, OracleError, ReductionError, ReductionInstance, ScoreFunction,
    SolveError, TdError,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bnsl", version, about = "Exact and local-search Bayesian-network structure learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact maximum-score dag by dynamic programming over a tree
    /// decomposition of the super-structure.
    Solve {
        #[arg(long)]
        scores: PathBuf,
        /// Decomposition file; derived by min-fill when absent.
        #[arg(long)]
        td: Option<PathBuf>,
        /// Drop listed sets dominated by a subset scoring at least as much.
        #[arg(long)]
        prune: bool,
        /// Drop listed sets with more than this many parents.
        #[arg(long, value_name = "C")]
        max_indegree: Option<usize>,
        /// Append per-node record counts and their key-space bounds.
        #[arg(long)]
        stats: bool,
    },
    /// Fast path for score functions whose directed super-structure is
    /// acyclic: every variable takes its best listed set independently.
    SolveAcyclic {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Brute-force reference solvers for small instances.
    Oracle {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum)]
        method: OracleMethod,
    },
    /// One improving bounded-edit step from a dag, or a full descent.
    Localsearch {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        dag: PathBuf,
        /// Edit budget per step.
        #[arg(long)]
        k: usize,
        /// Comma-separated subset of add, del, rev.
        #[arg(long)]
        ops: String,
        #[arg(long, value_enum)]
        method: LsMethod,
        /// Repeat until no improving neighbor remains.
        #[arg(long = "loop")]
        repeat: bool,
    },
    /// Build a tree decomposition of a graph.
    Decompose {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        method: DecomposeMethod,
        /// Reject decompositions wider than this.
        #[arg(long, value_name = "W")]
        wmax: Option<usize>,
    },
    /// Emit a hardness-construction instance with its metadata.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Normalize a listing with negative values into the non-negative model.
    Shift {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Check a decomposition against a graph and report its width.
    Audit {
        #[arg(long)]
        td: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    /// Exhaustive enumeration over labeled dags.
    Enum,
    /// Order-based subset dynamic program.
    Subsets,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum LsMethod {
    /// Enumerate operation subsets up to the budget.
    Brute,
    /// Polynomial scan; pure add or pure del only.
    Poly,
    /// Record dynamic program over a decomposition.
    Dp,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecomposeMethod {
    Minfill,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Degree5,
    Degree3,
}

#[derive(Subcommand)]
enum Family {
    /// Feedback-arc-set instance from a digraph.
    Fas {
        #[arg(long)]
        digraph: PathBuf,
        /// Write PREFIX.scores and PREFIX.meta instead of stdout.
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Partitioned-clique decision instance.
    Clique {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated part labels, one per vertex in id order.
        #[arg(long)]
        parts: String,
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Partitioned-clique instance plus a start dag for local search.
    CliqueLs {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        parts: String,
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Independent-set local-search instance.
    Indset {
        #[arg(long)]
        graph: PathBuf,
        /// Independent-set size to decide.
        #[arg(long)]
        k: usize,
        /// Comma-separated subset of add, del, rev; must allow an
        /// improving move (rev, or both add and del).
        #[arg(long)]
        ops: String,
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Satisfiability instance from a 3-CNF under the occurrence bound.
    Sat {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Limit(String),
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn from_solve(e: SolveError) -> Failure {
    match e {
        SolveError::BagTooWide { .. } | SolveError::TooManyParentSets { .. } => {
            Failure::Limit(e.to_string())
        }
        _ => Failure::Input(e.to_string()),
    }
}

fn from_oracle(e: OracleError) -> Failure {
    match e {
        OracleError::TooManyNodes { .. }
        | OracleError::TooManyArcs { .. }
        | OracleError::TooManyVariables { .. }
        | OracleError::PartitionTooLarge { .. } => Failure::Limit(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn from_ls(e: LocalSearchError) -> Failure {
    match e {
        LocalSearchError::TooManyCandidates { .. } | LocalSearchError::DegreeTooHigh { .. } => {
            Failure::Limit(e.to_string())
        }
        LocalSearchError::Solve(inner) => from_solve(inner),
        _ => Failure::Input(e.to_string()),
    }
}

fn from_td(e: TdError) -> Failure {
    match e {
        TdError::TooLarge { .. } => Failure::Limit(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn from_reduction(e: ReductionError) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, parsed: Result<T, ParseError>) -> Result<T, Failure> {
    parsed.map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_scores(path: &Path) -> Result<ScoreFunction, Failure> {
    with_path(path, codec::parse_scores(&read(path)?))
}

fn parse_ops(spec: &str) -> Result<OpSet, Failure> {
    let mut ops = OpSet::EMPTY;
    for part in spec.split(',') {
        ops = ops.union(match part.trim() {
            "add" => OpSet::ADD,
            "del" => OpSet::DEL,
            "rev" => OpSet::REV,
            other => {
                return Err(input(format!(
                    "unknown operation {other:?}; expected add, del or rev"
                )))
            }
        });
    }
    Ok(ops)
}

fn ops_word(ops: OpSet) -> String {
    let mut parts = Vec::new();
    if ops.has_add() {
        parts.push("add");
    }
    if ops.has_del() {
        parts.push("del");
    }
    if ops.has_rev() {
        parts.push("rev");
    }
    parts.join(",")
}

/// Nice decomposition of the super-structure via min-fill.
fn default_ntd(f: &ScoreFunction) -> Result<NiceTreeDecomposition, Failure> {
    let sg = f.superstructure();
    make_nice(&minfill_decomposition(&sg), &sg).map_err(from_td)
}

fn kind_word(kind: &NiceKind) -> &'static str {
    match kind {
        NiceKind::Leaf => "leaf",
        NiceKind::Introduce(_) => "introduce",
        NiceKind::Forget(_) => "forget",
        NiceKind::Join => "join",
    }
}

fn score_and_dag(f: &ScoreFunction, score: f64, dag: &Dag) -> String {
    format!("score {score}\n{}", codec::write_dag(f.names(), dag))
}

fn solve_cmd(
    scores: &Path,
    td: Option<&Path>,
    prune: bool,
    max_indegree: Option<usize>,
    stats: bool,
) -> Result<String, Failure> {
    let mut f = load_scores(scores)?;
    if let Some(c) = max_indegree {
        f = f.restrict_indegree(c);
    }
    if prune {
        f = f.prune_dominated();
    }
    let ntd = match td {
        Some(path) => {
            let td = with_path(path, codec::parse_td(&read(path)?))?;
            let sg = f.superstructure();
            td.validate(&sg).map_err(from_td)?;
            make_nice(&td, &sg).map_err(from_td)?
        }
        None => default_ntd(&f)?,
    };
    let (score, dag, report) = solve_exact(&f, &ntd).map_err(from_solve)?;
    let mut out = score_and_dag(&f, score, &dag);
    if stats {
        for s in &report.per_node {
            let _ = writeln!(
                out,
                "node {} kind {} bagsize {} records {} potential {}",
                s.node,
                kind_word(&s.kind),
                s.bag_size,
                s.records,
                s.potential
            );
        }
    }
    Ok(out)
}

fn solve_acyclic_cmd(scores: &Path) -> Result<String, Failure> {
    let f = load_scores(scores)?;
    let (score, dag) = solve_acyclic(&f).map_err(|e| match e {
        SolveError::CyclicSuperstructure { ref cycle } => {
            let names: Vec<&str> = cycle.iter().map(|&v| f.name(v)).collect();
            input(format!("directed super-structure has a cycle: {}", names.join(",")))
        }
        other => from_solve(other),
    })?;
    Ok(score_and_dag(&f, score, &dag))
}

fn oracle_cmd(scores: &Path, method: OracleMethod) -> Result<String, Failure> {
    let f = load_scores(scores)?;
    let (score, dag) = match method {
        OracleMethod::Enum => optimal_by_enumeration(&f),
        OracleMethod::Subsets => optimal_by_subset_dp(&f),
    }
    .map_err(from_oracle)?;
    Ok(score_and_dag(&f, score, &dag))
}

fn localsearch_cmd(
    scores: &Path,
    dag: &Path,
    k: usize,
    ops: &str,
    method: LsMethod,
    repeat: bool,
) -> Result<String, Failure> {
    let f = load_scores(scores)?;
    let start = with_path(dag, codec::parse_dag(&read(dag)?, f.names()))?;
    let ops = parse_ops(ops)?;
    let ntd = match method {
        LsMethod::Dp => Some(default_ntd(&f)?),
        _ => None,
    };
    let step = |d: &Dag| -> Result<Option<Dag>, Failure> {
        match method {
            LsMethod::Brute => brute_force_step(&f, d, k, ops).map_err(from_ls),
            LsMethod::Poly => {
                let dir = if ops == OpSet::ADD {
                    Direction::Add
                } else if ops == OpSet::DEL {
                    Direction::Del
                } else {
                    return Err(input("--method poly handles --ops add or --ops del only"));
                };
                monotone_step(&f, d, k, dir).map_err(from_ls)
            }
            LsMethod::Dp => {
                dp_local_search_step(&f, d, k, ops, ntd.as_ref().expect("built above"))
                    .map_err(from_ls)
            }
        }
    };
    let mut out = String::new();
    if repeat {
        let mut cur = start;
        while let Some(next) = step(&cur)? {
            out.push_str("improved\n");
            cur = next;
        }
        out.push_str("local-optimum\n");
        out.push_str(&codec::write_dag(f.names(), &cur));
    } else {
        match step(&start)? {
            Some(next) => {
                out.push_str("improved\n");
                out.push_str(&codec::write_dag(f.names(), &next));
            }
            None => {
                out.push_str("local-optimum\n");
                out.push_str(&codec::write_dag(f.names(), &start));
            }
        }
    }
    Ok(out)
}

fn decompose_cmd(
    graph: &Path,
    method: DecomposeMethod,
    wmax: Option<usize>,
) -> Result<String, Failure> {
    let g = with_path(graph, codec::parse_graph(&read(graph)?))?;
    let td = match method {
        DecomposeMethod::Minfill => minfill_decomposition(&g),
        DecomposeMethod::Exact => {
            let cap = wmax.unwrap_or_else(|| g.node_count().saturating_sub(1));
            exact_decomposition(&g, cap)
                .map_err(from_td)?
                .ok_or_else(|| Failure::Limit(format!("treewidth exceeds --wmax {cap}")))?
        }
    };
    if let Some(w) = wmax {
        if td.width() > w {
            return Err(Failure::Limit(format!(
                "decomposition width {} exceeds --wmax {w}",
                td.width()
            )));
        }
    }
    Ok(codec::write_td(&td))
}

fn parse_parts(spec: &str, n: usize) -> Result<Vec<Vec<bnsl_core::NodeId>>, Failure> {
    let labels: Vec<&str> = spec.split(',').map(str::trim).collect();
    if labels.len() != n {
        return Err(input(format!(
            "--parts lists {} labels, the graph has {n} vertices",
            labels.len()
        )));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: Vec<Vec<bnsl_core::NodeId>> = Vec::new();
    for (v, lab) in labels.iter().enumerate() {
        if lab.is_empty() {
            return Err(input(format!("--parts label for vertex {} is empty", v + 1)));
        }
        match order.iter().position(|o| o == lab) {
            Some(i) => groups[i].push(v as bnsl_core::NodeId),
            None => {
                order.push(lab);
                groups.push(vec![v as bnsl_core::NodeId]);
            }
        }
    }
    Ok(groups)
}

fn meta_lines(inst: &ReductionInstance, extra: &[(String, String)]) -> Vec<(String, String)> {
    let mut lines = vec![("threshold".to_string(), format!("{}", inst.threshold))];
    if let Some(b) = inst.budget {
        lines.push(("budget".to_string(), b.to_string()));
    }
    for (name, value) in &inst.constants {
        lines.push((name.clone(), value.to_string()));
    }
    if let Some(parts) = &inst.parts {
        for (i, part) in parts.iter().enumerate() {
            let names: Vec<&str> = part.iter().map(|&v| inst.f.name(v)).collect();
            lines.push((format!("part{i}"), names.join(",")));
        }
    }
    lines.extend(extra.iter().cloned());
    lines
}

/// Without `--out`, prints the score listing with the metadata appended as
/// comments, so the stream still parses as a score file. With `--out`,
/// writes PREFIX.scores, PREFIX.meta and, when the family has a start dag,
/// PREFIX.dag; the metadata comments still go to stdout.
fn emit(
    inst: &ReductionInstance,
    extra: Vec<(String, String)>,
    out: Option<&Path>,
) -> Result<String, Failure> {
    let meta = meta_lines(inst, &extra);
    let mut commented = String::new();
    for (key, value) in &meta {
        let _ = writeln!(commented, "# {key} {value}");
    }
    let Some(prefix) = out else {
        if inst.initial.is_some() {
            return Err(input(
                "this family carries a start dag; pass --out PREFIX to write the file set",
            ));
        }
        return Ok(format!("{}{commented}", codec::write_scores(&inst.f)));
    };
    let write = |suffix: &str, body: String| -> Result<(), Failure> {
        let path = PathBuf::from(format!("{}.{suffix}", prefix.display()));
        fs::write(&path, body).map_err(|e| input(format!("{}: {e}", path.display())))
    };
    write("scores", codec::write_scores(&inst.f))?;
    let mut plain = String::new();
    for (key, value) in &meta {
        let _ = writeln!(plain, "{key} {value}");
    }
    write("meta", plain)?;
    if let Some(d) = &inst.initial {
        write("dag", codec::write_dag(inst.f.names(), d))?;
    }
    Ok(commented)
}

fn generate_cmd(family: Family) -> Result<String, Failure> {
    match family {
        Family::Fas { digraph, out } => {
            let (_, d) = with_path(&digraph, codec::parse_digraph(&read(&digraph)?))?;
            let inst = fas_reduction(&d);
            emit(&inst, Vec::new(), out.as_deref())
        }
        Family::Clique { graph, parts, out } => {
            let g = with_path(&graph, codec::parse_graph(&read(&graph)?))?;
            let parts = parse_parts(&parts, g.node_count())?;
            let (k, size) = (parts.len(), parts.first().map_or(0, Vec::len));
            let inst = clique_reduction(&g, &parts, k, size).map_err(from_reduction)?;
            emit(&inst, Vec::new(), out.as_deref())
        }
        Family::CliqueLs { graph, parts, out } => {
            let g = with_path(&graph, codec::parse_graph(&read(&graph)?))?;
            let parts = parse_parts(&parts, g.node_count())?;
            let (k, size) = (parts.len(), parts.first().map_or(0, Vec::len));
            let inst = clique_localsearch_reduction(&g, &parts, k, size).map_err(from_reduction)?;
            emit(&inst, Vec::new(), out.as_deref())
        }
        Family::Indset { graph, k, ops, variant, out } => {
            let g = with_path(&graph, codec::parse_graph(&read(&graph)?))?;
            let ops = parse_ops(&ops)?;
            if k == 0 {
                return Err(input("--k must be at least 1"));
            }
            if !ops.is_nontrivial() {
                return Err(input(format!(
                    "operation set {{{}}} admits no improving move; include rev or both add and del",
                    ops_word(ops)
                )));
            }
            let variant = match variant {
                Variant::Degree5 => IndsetVariant::Degree5,
                Variant::Degree3 => IndsetVariant::Degree3,
            };
            let inst = indset_localsearch_reduction(&g, k, ops, variant);
            let extra = vec![
                (
                    "variant".to_string(),
                    match variant {
                        IndsetVariant::Degree5 => "degree5".to_string(),
                        IndsetVariant::Degree3 => "degree3".to_string(),
                    },
                ),
                ("ops".to_string(), ops_word(ops)),
            ];
            emit(&inst, extra, out.as_deref())
        }
        Family::Sat { cnf, out } => {
            let formula = with_path(&cnf, codec::parse_cnf(&read(&cnf)?))?;
            let inst = sat_reduction(&formula).map_err(from_reduction)?;
            emit(&inst, Vec::new(), out.as_deref())
        }
    }
}

fn shift_cmd(scores: &Path) -> Result<String, Failure> {
    let raw = with_path(scores, codec::parse_scores_raw(&read(scores)?))?;
    let f = raw.shift_normalize().map_err(|e| input(e.to_string()))?;
    Ok(codec::write_scores(&f))
}

fn audit_cmd(td: &Path, graph: &Path) -> Result<String, Failure> {
    let g = with_path(graph, codec::parse_graph(&read(graph)?))?;
    let td = with_path(td, codec::parse_td(&read(td)?))?;
    let width = td.validate(&g).map_err(from_td)?;
    Ok(format!("valid width {width}\n"))
}

fn run(cmd: Cmd) -> Result<String, Failure> {
    match cmd {
        Cmd::Solve { scores, td, prune, max_indegree, stats } => {
            solve_cmd(&scores, td.as_deref(), prune, max_indegree, stats)
        }
        Cmd::SolveAcyclic { scores } => solve_acyclic_cmd(&scores),
        Cmd::Oracle { scores, method } => oracle_cmd(&scores, method),
        Cmd::Localsearch { scores, dag, k, ops, method, repeat } => {
            localsearch_cmd(&scores, &dag, k, &ops, method, repeat)
        }
        Cmd::Decompose { graph, method, wmax } => decompose_cmd(&graph, method, wmax),
        Cmd::Generate { family } => generate_cmd(family),
        Cmd::Shift { scores } => shift_cmd(&scores),
        Cmd::Audit { td, graph } => audit_cmd(&td, &graph),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they print to stdout and
            // succeed, real usage errors go to stderr and fail.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Limit(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
