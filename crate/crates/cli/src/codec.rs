//! Parsers and writers for the on-disk formats.
//!
//! Score, dag and digraph files name variables by token; `#` starts a
//! comment anywhere on a line. Decomposition and graph files follow the
//! PACE conventions (1-indexed vertices, comment lines starting with `c`),
//! and formulas are DIMACS CNF. Writers emit canonical form: variables in
//! id order, parent sets in canonical order, floats rendered as the
//! shortest decimal that reparses to the identical value, edges and arcs
//! sorted. Names must be single tokens without `#`; every generator and
//! parser in this toolkit produces such names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bnsl_core::{
    Cnf, Dag, Digraph, Lit, NodeId, RawScoreFunction, ScoreFunction, TreeDecomposition, UGraph,
};
use thiserror::Error;

/// Position-tagged parse failure. Lines and columns are 1-based; the column
/// counts characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col, msg: msg.into() }
}

#[derive(Clone, Copy)]
struct Tok<'a> {
    s: &'a str,
    line: usize,
    col: usize,
}

impl Tok<'_> {
    fn fail(&self, msg: impl Into<String>) -> ParseError {
        err(self.line, self.col, msg)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Comments {
    /// `#` truncates the rest of the line (score, dag, digraph files).
    Hash,
    /// Lines whose first token is `c` are skipped (PACE, DIMACS files).
    CLine,
}

/// Non-empty lines as token lists with 1-based positions.
fn tokenize(text: &str, style: Comments) -> Vec<Vec<Tok<'_>>> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = match style {
            Comments::Hash => &raw[..raw.find('#').unwrap_or(raw.len())],
            Comments::CLine => raw,
        };
        let mut toks = Vec::new();
        let mut start: Option<(usize, usize)> = None;
        let mut col = 0;
        for (byte, ch) in line.char_indices() {
            if ch.is_whitespace() {
                if let Some((sb, sc)) = start.take() {
                    toks.push(Tok { s: &line[sb..byte], line: li + 1, col: sc + 1 });
                }
            } else if start.is_none() {
                start = Some((byte, col));
            }
            col += 1;
        }
        if let Some((sb, sc)) = start {
            toks.push(Tok { s: &line[sb..], line: li + 1, col: sc + 1 });
        }
        if style == Comments::CLine && toks.first().is_some_and(|t| t.s == "c") {
            continue;
        }
        if !toks.is_empty() {
            out.push(toks);
        }
    }
    out
}

/// Sequential reader over a flattened token stream.
struct Cursor<'a> {
    toks: Vec<Tok<'a>>,
    i: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(lines: Vec<Vec<Tok<'a>>>, text: &str) -> Self {
        let toks: Vec<Tok<'a>> = lines.into_iter().flatten().collect();
        let last_line = text.lines().count().max(1);
        Cursor { toks, i: 0, last_line }
    }

    fn next(&mut self, what: &str) -> Result<Tok<'a>, ParseError> {
        match self.toks.get(self.i) {
            Some(&t) => {
                self.i += 1;
                Ok(t)
            }
            None => Err(err(self.last_line, 1, format!("expected {what}, found end of input"))),
        }
    }

    fn usize(&mut self, what: &str) -> Result<(usize, Tok<'a>), ParseError> {
        let t = self.next(what)?;
        let v = t
            .s
            .parse::<usize>()
            .map_err(|_| t.fail(format!("expected {what}, found {:?}", t.s)))?;
        Ok((v, t))
    }

    fn i64(&mut self, what: &str) -> Result<(i64, Tok<'a>), ParseError> {
        let t = self.next(what)?;
        let v = t
            .s
            .parse::<i64>()
            .map_err(|_| t.fail(format!("expected {what}, found {:?}", t.s)))?;
        Ok((v, t))
    }

    fn f64(&mut self, what: &str) -> Result<(f64, Tok<'a>), ParseError> {
        let t = self.next(what)?;
        let v = t
            .s
            .parse::<f64>()
            .map_err(|_| t.fail(format!("expected {what}, found {:?}", t.s)))?;
        Ok((v, t))
    }

    fn literal(&mut self, word: &str) -> Result<Tok<'a>, ParseError> {
        let t = self.next(&format!("{word:?}"))?;
        if t.s != word {
            return Err(t.fail(format!("expected {word:?}, found {:?}", t.s)));
        }
        Ok(t)
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.toks.get(self.i) {
            Some(t) => Err(t.fail(format!("trailing content {:?}", t.s))),
            None => Ok(()),
        }
    }
}

/// One listed set as read, before names resolve to ids.
struct RawSet<'a> {
    score: f64,
    score_tok: Tok<'a>,
    parents: Vec<Tok<'a>>,
}

fn scores_body(
    text: &str,
    allow_negative: bool,
) -> Result<(Vec<String>, Vec<Vec<(Vec<NodeId>, f64)>>), ParseError> {
    let mut cur = Cursor::new(tokenize(text, Comments::Hash), text);
    let (n, _) = cur.usize("variable count")?;
    let mut names: Vec<String> = Vec::with_capacity(n);
    let mut ids: BTreeMap<&str, NodeId> = BTreeMap::new();
    let mut blocks: Vec<Vec<RawSet>> = Vec::with_capacity(n);
    for v in 0..n {
        let name = cur.next("variable name")?;
        if ids.insert(name.s, v as NodeId).is_some() {
            return Err(name.fail(format!("duplicate variable name {:?}", name.s)));
        }
        names.push(name.s.to_string());
        let (m, _) = cur.usize("listed-set count")?;
        let mut block = Vec::with_capacity(m);
        for _ in 0..m {
            let (score, score_tok) = cur.f64("score")?;
            if !score.is_finite() {
                return Err(score_tok.fail("score must be finite"));
            }
            if !allow_negative && score < 0.0 {
                return Err(score_tok.fail(format!(
                    "negative score {score}; normalize with the shift subcommand first"
                )));
            }
            let (k, _) = cur.usize("parent count")?;
            let parents = (0..k)
                .map(|_| cur.next("parent name"))
                .collect::<Result<Vec<_>, _>>()?;
            block.push(RawSet { score, score_tok, parents });
        }
        blocks.push(block);
    }
    cur.done()?;

    let mut entries: Vec<Vec<(Vec<NodeId>, f64)>> = Vec::with_capacity(n);
    for (v, block) in blocks.into_iter().enumerate() {
        let mut sets: Vec<(Vec<NodeId>, f64)> = Vec::with_capacity(block.len());
        for raw in block {
            let mut set = Vec::with_capacity(raw.parents.len());
            for p in &raw.parents {
                let &id = ids
                    .get(p.s)
                    .ok_or_else(|| p.fail(format!("unknown parent name {:?}", p.s)))?;
                if id as usize == v {
                    return Err(p.fail(format!("variable {:?} lists itself as a parent", p.s)));
                }
                if set.contains(&id) {
                    return Err(p.fail(format!("parent {:?} repeated in one set", p.s)));
                }
                set.push(id);
            }
            set.sort_unstable();
            if sets.iter().any(|(s, _)| *s == set) {
                return Err(raw
                    .score_tok
                    .fail(format!("variable {:?} lists the same parent set twice", names[v])));
            }
            sets.push((set, raw.score));
        }
        entries.push(sets);
    }
    Ok((names, entries))
}

/// Strict parse: negative scores are rejected with a pointer to `shift`.
pub fn parse_scores(text: &str) -> Result<ScoreFunction, ParseError> {
    let (names, entries) = scores_body(text, false)?;
    ScoreFunction::new(names, entries).map_err(|e| err(1, 1, e.to_string()))
}

/// Lenient parse for the shift subcommand: scores may be negative.
pub fn parse_scores_raw(text: &str) -> Result<RawScoreFunction, ParseError> {
    let (names, entries) = scores_body(text, true)?;
    Ok(RawScoreFunction { names, entries })
}

pub fn write_scores(f: &ScoreFunction) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", f.n());
    for v in 0..f.n() as NodeId {
        let sets = f.listed(v);
        let _ = writeln!(out, "{} {}", f.name(v), sets.len());
        for (set, score) in sets {
            let _ = write!(out, "{} {}", score, set.len());
            for &p in set {
                let _ = write!(out, " {}", f.name(p));
            }
            out.push('\n');
        }
    }
    out
}

fn resolve_names<'a>(names: &'a [String]) -> BTreeMap<&'a str, NodeId> {
    names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as NodeId))
        .collect()
}

/// Arc lines `u v` under a header word, resolved against a name table.
fn arc_lines(
    cur: &mut Cursor<'_>,
    m: usize,
    ids: &BTreeMap<&str, NodeId>,
) -> Result<Vec<(NodeId, NodeId)>, ParseError> {
    let mut arcs = Vec::with_capacity(m);
    for _ in 0..m {
        let ut = cur.next("arc tail name")?;
        let vt = cur.next("arc head name")?;
        let &u = ids
            .get(ut.s)
            .ok_or_else(|| ut.fail(format!("unknown node name {:?}", ut.s)))?;
        let &v = ids
            .get(vt.s)
            .ok_or_else(|| vt.fail(format!("unknown node name {:?}", vt.s)))?;
        if u == v {
            return Err(vt.fail(format!("self arc on {:?}", vt.s)));
        }
        if arcs.contains(&(u, v)) {
            return Err(ut.fail(format!("arc {} {} listed twice", ut.s, vt.s)));
        }
        arcs.push((u, v));
    }
    Ok(arcs)
}

/// Parses a `dag n m` file against the given name table and rejects cycles
/// with a witness.
pub fn parse_dag(text: &str, names: &[String]) -> Result<Dag, ParseError> {
    let mut cur = Cursor::new(tokenize(text, Comments::Hash), text);
    let header = cur.literal("dag")?;
    let (n, ntok) = cur.usize("node count")?;
    if n != names.len() {
        return Err(ntok.fail(format!(
            "dag file declares {n} nodes, the score function has {}",
            names.len()
        )));
    }
    let (m, _) = cur.usize("arc count")?;
    let ids = resolve_names(names);
    let arcs = arc_lines(&mut cur, m, &ids)?;
    cur.done()?;
    let d = Digraph::new(n, arcs).map_err(|e| header.fail(e.to_string()))?;
    if let Some(cycle) = d.find_cycle() {
        let witness: Vec<&str> = cycle.iter().map(|&v| names[v as usize].as_str()).collect();
        return Err(header.fail(format!("not a dag: cycle {}", witness.join(","))));
    }
    Ok(Dag::new(d).expect("cycle check above"))
}

pub fn write_dag(names: &[String], d: &Dag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dag {} {}", d.node_count(), d.arc_count());
    for &(u, v) in d.arcs() {
        let _ = writeln!(out, "{} {}", names[u as usize], names[v as usize]);
    }
    out
}

/// Parses a `digraph n m` file; cycles are allowed. Names are assigned ids
/// by first appearance and every node must appear in some arc.
pub fn parse_digraph(text: &str) -> Result<(Vec<String>, Digraph), ParseError> {
    let mut cur = Cursor::new(tokenize(text, Comments::Hash), text);
    cur.literal("digraph")?;
    let (n, ntok) = cur.usize("node count")?;
    let (m, _) = cur.usize("arc count")?;
    let mut names: Vec<String> = Vec::new();
    let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut arcs: Vec<(NodeId, NodeId)> = Vec::with_capacity(m);
    for _ in 0..m {
        let ut = cur.next("arc tail name")?;
        let vt = cur.next("arc head name")?;
        if ut.s == vt.s {
            return Err(vt.fail(format!("self arc on {:?}", vt.s)));
        }
        let mut id_of = |t: &Tok<'_>| -> NodeId {
            *ids.entry(t.s.to_string()).or_insert_with(|| {
                names.push(t.s.to_string());
                (names.len() - 1) as NodeId
            })
        };
        let (u, v) = (id_of(&ut), id_of(&vt));
        if arcs.contains(&(u, v)) {
            return Err(ut.fail(format!("arc {} {} listed twice", ut.s, vt.s)));
        }
        arcs.push((u, v));
    }
    cur.done()?;
    if names.len() != n {
        return Err(ntok.fail(format!(
            "header declares {n} nodes, the arcs name {}; nodes without arcs are not expressible",
            names.len()
        )));
    }
    let d = Digraph::new(n, arcs).map_err(|e| err(1, 1, e.to_string()))?;
    Ok((names, d))
}

pub fn write_digraph(names: &[String], d: &Digraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {}", d.node_count(), d.arc_count());
    for &(u, v) in d.arcs() {
        let _ = writeln!(out, "{} {}", names[u as usize], names[v as usize]);
    }
    out
}

/// Parses a PACE-style decomposition: `s td <bags> <maxbagsize> <n>`, `b`
/// lines, then tree edges. Bags and vertices are 1-indexed on disk.
pub fn parse_td(text: &str) -> Result<TreeDecomposition, ParseError> {
    let lines = tokenize(text, Comments::CLine);
    let mut it = lines.into_iter();
    let header = it
        .next()
        .ok_or_else(|| err(1, 1, "expected header \"s td <bags> <maxbagsize> <n>\""))?;
    let [s, td, b, w, n] = header.as_slice() else {
        let t = header[0];
        return Err(t.fail("header must be \"s td <bags> <maxbagsize> <n>\""));
    };
    if s.s != "s" || td.s != "td" {
        return Err(s.fail("header must be \"s td <bags> <maxbagsize> <n>\""));
    }
    let bag_count = b.s.parse::<usize>().map_err(|_| b.fail("bad bag count"))?;
    let max_bag = w.s.parse::<usize>().map_err(|_| w.fail("bad largest-bag size"))?;
    let n = n.s.parse::<usize>().map_err(|_| n.fail("bad vertex count"))?;

    let mut bags: Vec<Option<Vec<NodeId>>> = vec![None; bag_count];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let vertex = |t: &Tok<'_>| -> Result<NodeId, ParseError> {
        let v = t.s.parse::<usize>().map_err(|_| t.fail("bad vertex id"))?;
        if v == 0 || v > n {
            return Err(t.fail(format!("vertex {v} out of range 1..={n}")));
        }
        Ok((v - 1) as NodeId)
    };
    for line in it {
        if line[0].s == "b" {
            let id_tok = line
                .get(1)
                .ok_or_else(|| line[0].fail("bag line needs an id"))?;
            let id = id_tok.s.parse::<usize>().map_err(|_| id_tok.fail("bad bag id"))?;
            if id == 0 || id > bag_count {
                return Err(id_tok.fail(format!("bag id {id} out of range 1..={bag_count}")));
            }
            if bags[id - 1].is_some() {
                return Err(id_tok.fail(format!("bag {id} declared twice")));
            }
            let verts = line[2..].iter().map(vertex).collect::<Result<Vec<_>, _>>()?;
            bags[id - 1] = Some(verts);
        } else {
            let [a, bb] = line.as_slice() else {
                return Err(line[0].fail("tree edge line must be two bag ids"));
            };
            let mut bag_id = |t: &Tok<'_>| -> Result<usize, ParseError> {
                let v = t.s.parse::<usize>().map_err(|_| t.fail("bad bag id"))?;
                if v == 0 || v > bag_count {
                    return Err(t.fail(format!("bag id {v} out of range 1..={bag_count}")));
                }
                Ok(v - 1)
            };
            edges.push((bag_id(a)?, bag_id(bb)?));
        }
    }
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, bag)| bag.ok_or_else(|| err(1, 1, format!("bag {} never declared", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let found = bags.iter().map(Vec::len).max().unwrap_or(0);
    if found != max_bag {
        return Err(w.fail(format!(
            "header claims largest bag size {max_bag}, bags reach {found}"
        )));
    }
    TreeDecomposition::new(n, bags, edges).map_err(|e| err(1, 1, e.to_string()))
}

pub fn write_td(td: &TreeDecomposition) -> String {
    let mut out = String::new();
    let max_bag = td.bags().iter().map(Vec::len).max().unwrap_or(0);
    let _ = writeln!(out, "s td {} {} {}", td.bags().len(), max_bag, td.node_count());
    for (i, bag) in td.bags().iter().enumerate() {
        let _ = write!(out, "b {}", i + 1);
        for &v in bag {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
    }
    for &(a, b) in td.edges() {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

/// Parses a PACE-style graph: `p tw <n> <m>` then m edge lines, 1-indexed.
pub fn parse_graph(text: &str) -> Result<UGraph, ParseError> {
    let mut cur = Cursor::new(tokenize(text, Comments::CLine), text);
    cur.literal("p")?;
    cur.literal("tw")?;
    let (n, _) = cur.usize("node count")?;
    let (m, _) = cur.usize("edge count")?;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m);
    let mut vertex = |cur: &mut Cursor<'_>| -> Result<(NodeId, Tok<'_>), ParseError> {
        let (v, t) = cur.usize("vertex id")?;
        if v == 0 || v > n {
            return Err(t.fail(format!("vertex {v} out of range 1..={n}")));
        }
        Ok(((v - 1) as NodeId, t))
    };
    for _ in 0..m {
        let (u, ut) = vertex(&mut cur)?;
        let (v, vt) = vertex(&mut cur)?;
        if u == v {
            return Err(vt.fail(format!("self loop on vertex {}", vt.s)));
        }
        let e = (u.min(v), u.max(v));
        if edges.contains(&e) {
            return Err(ut.fail(format!("edge {} {} listed twice", ut.s, vt.s)));
        }
        edges.push(e);
    }
    cur.done()?;
    UGraph::new(n, edges).map_err(|e| err(1, 1, e.to_string()))
}

pub fn write_graph(g: &UGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p tw {} {}", g.node_count(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{} {}", u + 1, v + 1);
    }
    out
}

/// Parses DIMACS CNF. Clauses have one to three literals; shorter clauses
/// repeat their last literal to fill the three slots of the in-memory form,
/// which leaves satisfaction untouched but counts against the occurrence
/// bound the satisfiability generator enforces.
pub fn parse_cnf(text: &str) -> Result<Cnf, ParseError> {
    let mut cur = Cursor::new(tokenize(text, Comments::CLine), text);
    cur.literal("p")?;
    cur.literal("cnf")?;
    let (n, _) = cur.usize("variable count")?;
    let (m, _) = cur.usize("clause count")?;
    let mut clauses: Vec<[Lit; 3]> = Vec::with_capacity(m);
    for ci in 0..m {
        let mut lits: Vec<Lit> = Vec::with_capacity(3);
        loop {
            let (v, t) = cur.i64("literal")?;
            if v == 0 {
                break;
            }
            let var = v.unsigned_abs();
            if var as usize > n {
                return Err(t.fail(format!("variable {var} out of range 1..={n}")));
            }
            if lits.len() == 3 {
                return Err(t.fail(format!("clause {} has more than three literal slots", ci + 1)));
            }
            let var = (var - 1) as u32;
            lits.push(if v < 0 { Lit::neg(var) } else { Lit::pos(var) });
        }
        let &last = lits
            .last()
            .ok_or_else(|| err(cur.toks[cur.i - 1].line, cur.toks[cur.i - 1].col,
                format!("clause {} is empty", ci + 1)))?;
        while lits.len() < 3 {
            lits.push(last);
        }
        clauses.push([lits[0], lits[1], lits[2]]);
    }
    cur.done()?;
    Cnf::new(n, clauses).map_err(|e| err(1, 1, e.to_string()))
}

pub fn write_cnf(cnf: &Cnf) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", cnf.n_vars(), cnf.clauses().len());
    for clause in cnf.clauses() {
        for lit in clause {
            let v = lit.var as i64 + 1;
            let _ = write!(out, "{} ", if lit.negated { -v } else { v });
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn scores_round_trip_f1() {
        let text = write_scores(&f1());
        assert_eq!(parse_scores(&text).unwrap(), f1());
        // Canonical text is stable under a second round trip.
        assert_eq!(write_scores(&parse_scores(&text).unwrap()), text);
    }

    #[test]
    fn scores_canonical_text_shape() {
        let text = write_scores(&f1());
        assert_eq!(text, "3\nA 0\nB 1\n2 1 A\nC 2\n1 1 B\n3 2 A B\n");
    }

    #[test]
    fn scores_parse_reports_positions() {
        // Duplicate parent inside one set, third line, fourth token.
        let e = parse_scores("2\nA 0\nB 1\n2 2 A A\n").unwrap_err();
        assert_eq!((e.line, e.col), (4, 7));
        assert!(e.msg.contains("repeated"));

        let e = parse_scores("1\nA 1\n-1 0\n").unwrap_err();
        assert!(e.msg.contains("shift"), "{}", e.msg);
        assert_eq!((e.line, e.col), (3, 1));

        let e = parse_scores("2\nA 1\n1 1 Q\nB 0\n").unwrap_err();
        assert!(e.msg.contains("unknown parent"));

        let e = parse_scores("2\nA 2\n1 1 B\n1 1 B\nB 0\n").unwrap_err();
        assert!(e.msg.contains("twice"));
        assert_eq!(e.line, 4);

        let e = parse_scores("1\nA 1\n1 1 A\n").unwrap_err();
        assert!(e.msg.contains("itself"));
    }

    #[test]
    fn scores_comments_and_blank_lines_ignored() {
        let text = "# header\n\n3\nA 0\n\nB 1 # one set\n2 1 A\nC 2\n1 1 B\n3 2 A B\n";
        assert_eq!(parse_scores(text).unwrap(), f1());
    }

    #[test]
    fn scores_raw_accepts_negatives() {
        let raw = parse_scores_raw("1\nA 1\n-2 0\n").unwrap();
        assert_eq!(raw.entries[0], vec![(vec![], -2.0)]);
        assert!(parse_scores_raw("1\nA 1\ninf 0\n").is_err());
    }

    #[test]
    fn dag_round_trip_and_cycle_witness() {
        let names: Vec<String> = vec!["X".into(), "Y".into()];
        let d = Dag::from_arcs(2, [(0, 1)]).unwrap();
        let text = write_dag(&names, &d);
        assert_eq!(text, "dag 2 1\nX Y\n");
        assert_eq!(parse_dag(&text, &names).unwrap(), d);

        let e = parse_dag("dag 2 2\nX Y\nY X\n", &names).unwrap_err();
        assert!(e.msg.contains("cycle X,Y"), "{}", e.msg);
    }

    #[test]
    fn dag_rejects_mismatched_node_count() {
        let names: Vec<String> = vec!["X".into(), "Y".into()];
        assert!(parse_dag("dag 3 0\n", &names).is_err());
        assert!(parse_dag("dag 2 1\nX X\n", &names).is_err());
        assert!(parse_dag("dag 2 1\nX Q\n", &names).is_err());
        // Trailing content is an error, not silently ignored.
        assert!(parse_dag("dag 2 1\nX Y\nX Y\n", &names).is_err());
    }

    #[test]
    fn digraph_allows_cycles_names_by_first_appearance() {
        let (names, d) = parse_digraph("digraph 2 2\nu v\nv u\n").unwrap();
        assert_eq!(names, vec!["u".to_string(), "v".to_string()]);
        assert_eq!(d.arcs(), &[(0, 1), (1, 0)]);
        let text = write_digraph(&names, &d);
        assert_eq!(parse_digraph(&text).unwrap().1, d);

        let e = parse_digraph("digraph 3 2\nu v\nv u\n").unwrap_err();
        assert!(e.msg.contains("not expressible"));
    }

    #[test]
    fn td_round_trip() {
        let td = TreeDecomposition::new(
            3,
            vec![vec![0, 1], vec![1, 2]],
            vec![(0, 1)],
        )
        .unwrap();
        let text = write_td(&td);
        assert_eq!(text, "s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n");
        assert_eq!(parse_td(&text).unwrap(), td);
    }

    #[test]
    fn td_parser_checks_header_and_ids() {
        assert!(parse_td("s td 1 2 2\nb 1 1\n").is_err()); // claims max 2, reaches 1
        assert!(parse_td("s td 2 1 2\nb 1 1\n1 2\n").is_err()); // bag 2 missing
        assert!(parse_td("s td 1 1 1\nb 1 1\nb 1 1\n").is_err()); // declared twice
        assert!(parse_td("s td 1 1 1\nb 1 2\n").is_err()); // vertex out of range
        let td = parse_td("c comment\ns td 1 1 1\nb 1 1\n").unwrap();
        assert_eq!(td.bags(), &[vec![0]]);
    }

    #[test]
    fn graph_round_trip() {
        let g = UGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let text = write_graph(&g);
        assert_eq!(text, "p tw 3 2\n1 2\n2 3\n");
        assert_eq!(parse_graph(&text).unwrap(), g);
        assert!(parse_graph("p tw 2 1\n1 1\n").is_err());
        assert!(parse_graph("p tw 2 2\n1 2\n2 1\n").is_err());
    }

    #[test]
    fn cnf_round_trip_and_padding() {
        let cnf = parse_cnf("c a comment\np cnf 3 2\n1 -2 3 0\n2 0\n").unwrap();
        assert_eq!(cnf.n_vars(), 3);
        assert_eq!(
            cnf.clauses()[1],
            [Lit::pos(1), Lit::pos(1), Lit::pos(1)]
        );
        let text = write_cnf(&cnf);
        assert_eq!(parse_cnf(&text).unwrap(), cnf);
        assert!(parse_cnf("p cnf 1 1\n1 1 1 1 0\n").is_err());
        assert!(parse_cnf("p cnf 1 1\n0\n").is_err());
        assert!(parse_cnf("p cnf 1 1\n2 0\n").is_err());
    }
}
