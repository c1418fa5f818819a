//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Each one takes a different route from the library
//! code it checks: explicit path enumeration instead of recurrences or
//! fixpoints, raw token scans instead of tree walks, text recounts instead
//! of in-memory tallies.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use corpuslab::callgraph::CallGraph;
use corpuslab::corpus::{catalog_corpus, EntityId, merged_catalog, Catalog, ProjectParse, Strictness};
use corpuslab::featuregraph::{EdgeType, FeatureGraph};
use corpuslab::fixture::{write_fixture, FixtureConfig};
use corpuslab::lexparse::scope::{resolve_variables, Var};
use corpuslab::lexparse::{lex, Ast, MethodSource, NodeKind, TokenKind};
use corpuslab::par::ExecMode;

/// Inflated project sizes that put one project in each of buckets B, C, D.
pub const INFLATE: [usize; 3] = [30, 60, 110];

pub struct Corpus {
    pub root: PathBuf,
    pub projects: Vec<ProjectParse>,
    pub catalog: Catalog,
}

impl Corpus {
    pub fn project(&self, name: &str) -> &ProjectParse {
        self.projects
            .iter()
            .find(|p| p.project().project_name == name)
            .unwrap_or_else(|| panic!("no project {name}"))
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodSource> {
        self.projects.iter().flat_map(|p| p.methods())
    }

    /// Methods of the hand-written projects only.
    pub fn handwritten(&self) -> impl Iterator<Item = &MethodSource> {
        self.projects
            .iter()
            .filter(|p| !p.project().project_name.starts_with("inflate"))
            .flat_map(|p| p.methods())
    }

    pub fn method(&self, class: &str, signature: &str) -> &MethodSource {
        self.methods()
            .find(|m| m.class_name == class && m.signature == signature)
            .unwrap_or_else(|| panic!("no method {class}.{signature}"))
    }
}

fn fresh_dir() -> PathBuf {
    let dir = tempfile::Builder::new().prefix("corpuslab-fixture").tempdir().expect("temp dir");
    dir.keep()
}

/// The fixture corpus, written and parsed once per test binary.
pub fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let root = fresh_dir();
        write_fixture(&root, &FixtureConfig { inflate: INFLATE.to_vec() }).expect("fixture");
        let projects = catalog_corpus(&root, Strictness::SkipUnparseable, ExecMode::Sequential).expect("catalog");
        let catalog = merged_catalog(&projects);
        Corpus { root, projects, catalog }
    })
}

/// Writes a fresh copy of the fixture corpus below `dir`.
pub fn write_corpus(dir: &Path) -> PathBuf {
    let root = dir.join("corpus");
    write_fixture(&root, &FixtureConfig { inflate: INFLATE.to_vec() }).expect("fixture");
    root
}

// ---------------------------------------------------------------- metrics

// (signature, CMPX, NPTH), worked out by hand from Flow.java
pub const FLOW: &[(&str, u64, u64)] = &[
    ("empty()", 1, 1),
    ("add(int,int)", 1, 1),
    ("abs(int)", 2, 2),
    ("max(int,int)", 2, 2),
    ("clamp(int,int,int)", 4, 6),
    ("sum(int)", 2, 2),
    ("countPositive(int[])", 3, 3),
    ("sign(int)", 3, 3),
    ("pick(boolean,int,int)", 2, 1),
    ("score(int,int)", 5, 12),
    ("drain(int,boolean)", 3, 3),
    ("pairs(int)", 3, 3),
];

/// 1 + decision tokens, counted on a fresh lex of the method text.
pub fn cmpx_from_tokens(m: &MethodSource) -> u64 {
    let tokens = lex(&m.text).expect("method text lexes");
    1 + tokens
        .iter()
        .filter(|t| {
            (t.kind == TokenKind::Keyword && matches!(t.lexeme.as_str(), "if" | "while" | "for"))
                || (t.kind == TokenKind::Operator && matches!(t.lexeme.as_str(), "&&" | "||" | "?"))
        })
        .count() as u64
}

fn short_circuit_ops(ast: &Ast, n: usize) -> usize {
    ast.terminals_in(n)
        .filter(|&t| ast.kind(t) == NodeKind::Operator && matches!(ast.lexeme(t), Some("&&" | "||")))
        .count()
}

/// Acyclic paths as explicit label sequences. Loops run zero or one time,
/// every `&&`/`||` in a branch or loop condition contributes one extra
/// bypass path, and a `return` does not end the path (the count is
/// structural). Returns the number of distinct sequences.
pub fn npath_by_enumeration(ast: &Ast) -> usize {
    fn stmt(ast: &Ast, n: usize) -> Vec<Vec<String>> {
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::Block => {
                let mut acc = vec![Vec::new()];
                for &c in kids.iter().filter(|&&c| ast.kind(c).is_statement()) {
                    let tails = stmt(ast, c);
                    acc = acc
                        .iter()
                        .flat_map(|head| {
                            tails.iter().map(move |t| {
                                let mut p = head.clone();
                                p.extend(t.iter().cloned());
                                p
                            })
                        })
                        .collect();
                }
                acc
            }
            NodeKind::IfStmt => {
                let mut out: Vec<Vec<String>> = stmt(ast, kids[2])
                    .into_iter()
                    .map(|mut p| {
                        p.insert(0, format!("{n}:then"));
                        p
                    })
                    .collect();
                match kids.get(4) {
                    Some(&other) => out.extend(stmt(ast, other).into_iter().map(|mut p| {
                        p.insert(0, format!("{n}:else"));
                        p
                    })),
                    None => out.push(vec![format!("{n}:else")]),
                }
                for k in 0..short_circuit_ops(ast, kids[1]) {
                    out.push(vec![format!("{n}:bypass{k}")]);
                }
                out
            }
            NodeKind::WhileStmt | NodeKind::ForStmt => {
                let body = *kids.last().unwrap();
                let mut out = vec![vec![format!("{n}:skip")]];
                out.extend(stmt(ast, body).into_iter().map(|mut p| {
                    p.insert(0, format!("{n}:enter"));
                    p
                }));
                let ops = ast.child_of_kind(n, NodeKind::Condition).map_or(0, |c| short_circuit_ops(ast, c));
                for k in 0..ops {
                    out.push(vec![format!("{n}:bypass{k}")]);
                }
                out
            }
            _ => vec![Vec::new()],
        }
    }
    let paths = match ast.child_of_kind(ast.root(), NodeKind::Block) {
        Some(body) => stmt(ast, body),
        None => vec![Vec::new()],
    };
    paths.into_iter().collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Census {
    pub total: u64,
    pub operators: u64,
    pub literals: u64,
    pub identifiers: u64,
    pub keywords: u64,
    pub separators: u64,
}

/// Token kinds tallied from a fresh lex of the method text.
pub fn census(m: &MethodSource) -> Census {
    let mut c = Census::default();
    for t in lex(&m.text).expect("method text lexes") {
        c.total += 1;
        match t.kind {
            TokenKind::Operator => c.operators += 1,
            TokenKind::Identifier => c.identifiers += 1,
            TokenKind::Keyword => c.keywords += 1,
            TokenKind::Separator => c.separators += 1,
            _ => c.literals += 1,
        }
    }
    c
}

// -------------------------------------------------------------- data flow

type Access = (usize, bool, bool);

#[derive(Clone)]
struct Trace {
    events: Vec<Access>,
    returned: bool,
}

const MAX_TRACES: usize = 200_000;

/// Brute-force last-read / last-write analysis: every execution path is
/// spelled out as a sequence of variable accesses (loops unrolled up to
/// `max_iter` times, both sides of `?:`, the optional right operand of
/// `&&`/`||`), each path is replayed separately, and the resulting links
/// are unioned. A path ends at `return`; a `for` without condition is
/// left only through `return`.
pub type EdgeSet = BTreeSet<(usize, usize)>;

pub struct FlowOracle<'a> {
    ast: &'a Ast,
    vars: Vec<Option<Var>>,
    max_iter: usize,
}

fn concat(heads: Vec<Trace>, tails: impl Fn() -> Vec<Trace>) -> Vec<Trace> {
    let mut out = Vec::new();
    let mut cached: Option<Vec<Trace>> = None;
    for h in heads {
        if h.returned {
            out.push(h);
            continue;
        }
        let tails = cached.get_or_insert_with(&tails);
        for t in tails.iter() {
            let mut events = h.events.clone();
            events.extend_from_slice(&t.events);
            out.push(Trace { events, returned: t.returned });
        }
        assert!(out.len() <= MAX_TRACES, "path explosion");
    }
    out
}

fn empty() -> Vec<Trace> {
    vec![Trace { events: Vec::new(), returned: false }]
}

fn single(a: Access) -> Vec<Trace> {
    vec![Trace { events: vec![a], returned: false }]
}

impl<'a> FlowOracle<'a> {
    pub fn new(m: &'a MethodSource, max_iter: usize) -> Self {
        let fields: Vec<String> = m.class_fields.iter().map(|f| f.name.clone()).collect();
        FlowOracle { ast: &m.ast, vars: resolve_variables(&m.ast, &fields), max_iter }
    }

    fn is_var(&self, t: usize) -> bool {
        self.vars[t].is_some()
    }

    fn target(&self, lhs: usize) -> Option<usize> {
        let ast = self.ast;
        match ast.kind(lhs) {
            NodeKind::NameExpr | NodeKind::FieldAccess => ast.ident_child(lhs).filter(|&t| self.is_var(t)),
            NodeKind::Paren => self.target(ast.children(lhs)[1]),
            _ => None,
        }
    }

    fn seq(&self, nodes: &[usize], f: impl Fn(&Self, usize) -> Vec<Trace>) -> Vec<Trace> {
        nodes.iter().fold(empty(), |acc, &n| concat(acc, || f(self, n)))
    }

    fn operands(&self, n: usize) -> Vec<usize> {
        self.ast.children(n).iter().copied().filter(|&c| !self.ast.kind(c).is_terminal()).collect()
    }

    fn expr(&self, n: usize) -> Vec<Trace> {
        let ast = self.ast;
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::NameExpr => single((kids[0], true, false)),
            NodeKind::FieldAccess if ast.kind(kids[0]) == NodeKind::ThisExpr => single((kids[2], true, false)),
            NodeKind::FieldAccess => self.expr(kids[0]),
            NodeKind::Assignment => {
                let compound = ast.lexeme(kids[1]) != Some("=");
                match self.target(kids[0]) {
                    Some(t) => concat(self.expr(kids[2]), || single((t, compound, true))),
                    None => concat(self.expr(kids[0]), || self.expr(kids[2])),
                }
            }
            NodeKind::Unary | NodeKind::Postfix => {
                let (op, operand) = if ast.kind(n) == NodeKind::Unary { (kids[0], kids[1]) } else { (kids[1], kids[0]) };
                let step = matches!(ast.lexeme(op), Some("++" | "--"));
                match self.target(operand) {
                    Some(t) if step => single((t, true, true)),
                    _ => self.expr(operand),
                }
            }
            NodeKind::Binary => match ast.lexeme(kids[1]) {
                Some("&&" | "||") => concat(self.expr(kids[0]), || {
                    let mut alts = empty();
                    alts.extend(self.expr(kids[2]));
                    alts
                }),
                Some("instanceof") => self.expr(kids[0]),
                _ => concat(self.expr(kids[0]), || self.expr(kids[2])),
            },
            NodeKind::Conditional => concat(self.expr(kids[0]), || {
                let mut alts = self.expr(kids[2]);
                alts.extend(self.expr(kids[4]));
                alts
            }),
            NodeKind::Literal | NodeKind::ThisExpr | NodeKind::Type => empty(),
            _ => self.seq(&self.operands(n), Self::expr),
        }
    }

    fn condition(&self, cond: Option<usize>) -> Vec<Trace> {
        match cond {
            Some(c) => self.seq(&self.operands(c), Self::expr),
            None => empty(),
        }
    }

    /// `cond (body update cond)^k` for k in 0..=max_iter; normal exits
    /// only when there is a condition to fail.
    fn looped(&self, cond: Option<usize>, body: usize, update: Option<usize>) -> Vec<Trace> {
        let round = || {
            let b = self.stmt(body);
            let b = match update {
                Some(u) => concat(b, || self.seq(&self.operands(u), Self::expr)),
                None => b,
            };
            concat(b, || self.condition(cond))
        };
        let mut frontier = self.condition(cond);
        let mut out: Vec<Trace> = Vec::new();
        for k in 0..=self.max_iter {
            let (done, live): (Vec<Trace>, Vec<Trace>) = frontier.into_iter().partition(|t| t.returned);
            out.extend(done);
            if cond.is_some() {
                out.extend(live.iter().cloned());
            }
            if k == self.max_iter {
                break;
            }
            frontier = concat(live, round);
        }
        out
    }

    fn stmt(&self, n: usize) -> Vec<Trace> {
        let ast = self.ast;
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::Block => {
                let stmts: Vec<usize> = kids.iter().copied().filter(|&c| ast.kind(c).is_statement()).collect();
                self.seq(&stmts, Self::stmt)
            }
            NodeKind::LocalVarDecl => {
                let decls: Vec<usize> = ast.children_of_kind(n, NodeKind::VarDeclarator).collect();
                self.seq(&decls, |me, d| {
                    let dk = me.ast.children(d);
                    let init = if dk.len() >= 3 { me.expr(*dk.last().unwrap()) } else { empty() };
                    concat(init, || single((dk[0], false, true)))
                })
            }
            NodeKind::ExprStmt => self.expr(kids[0]),
            NodeKind::ReturnStmt => {
                let mut v = match kids.get(1).filter(|&&e| !ast.kind(e).is_terminal()) {
                    Some(&e) => self.expr(e),
                    None => empty(),
                };
                for t in &mut v {
                    t.returned = true;
                }
                v
            }
            NodeKind::IfStmt => concat(self.condition(Some(kids[1])), || {
                let mut alts = self.stmt(kids[2]);
                alts.extend(match kids.get(4) {
                    Some(&e) => self.stmt(e),
                    None => empty(),
                });
                alts
            }),
            NodeKind::WhileStmt => self.looped(Some(kids[1]), kids[2], None),
            NodeKind::ForStmt => {
                let init: Vec<usize> = ast
                    .child_of_kind(n, NodeKind::ForInit)
                    .map(|i| ast.children(i).iter().copied().filter(|&c| !ast.kind(c).is_terminal()).collect())
                    .unwrap_or_default();
                let init = self.seq(&init, |me, c| {
                    if me.ast.kind(c) == NodeKind::LocalVarDecl { me.stmt(c) } else { me.expr(c) }
                });
                let cond = ast.child_of_kind(n, NodeKind::Condition);
                let update = ast.child_of_kind(n, NodeKind::ForUpdate);
                concat(init, || self.looped(cond, *kids.last().unwrap(), update))
            }
            _ => empty(),
        }
    }

    /// `(LastRead, LastWrite)` edge sets. `field_defs` are the graph's
    /// synthetic field-definition nodes, which count as initial writes.
    pub fn edges(&self, field_defs: &BTreeMap<Var, usize>) -> (EdgeSet, EdgeSet) {
        let ast = self.ast;
        let mut prefix = Vec::new();
        if let Some(params) = ast.child_of_kind(ast.root(), NodeKind::Parameters) {
            for p in ast.children_of_kind(params, NodeKind::Parameter) {
                if let Some(id) = ast.ident_child(p) {
                    prefix.push((id, false, true));
                }
            }
        }
        let traces = match ast.child_of_kind(ast.root(), NodeKind::Block) {
            Some(b) => self.stmt(b),
            None => empty(),
        };
        let (mut reads, mut writes) = (BTreeSet::new(), BTreeSet::new());
        for tr in traces {
            let mut last: BTreeMap<&Var, (Option<usize>, Option<usize>)> =
                field_defs.iter().map(|(v, &n)| (v, (None, Some(n)))).collect();
            for &(t, r, w) in prefix.iter().chain(&tr.events) {
                let Some(var) = self.vars[t].as_ref() else { continue };
                let slot = last.entry(var).or_default();
                if let Some(p) = slot.0 {
                    reads.insert((t, p));
                }
                if let Some(p) = slot.1 {
                    writes.insert((t, p));
                }
                if r {
                    slot.0 = Some(t);
                }
                if w {
                    slot.1 = Some(t);
                }
            }
        }
        (reads, writes)
    }
}

pub fn has_loop(ast: &Ast) -> bool {
    ast.nodes.iter().any(|n| matches!(n.kind, NodeKind::WhileStmt | NodeKind::ForStmt))
}

pub fn field_defs(g: &FeatureGraph) -> BTreeMap<Var, usize> {
    g.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == NodeKind::FieldDef)
        .map(|(i, n)| (Var::Field(n.token.clone().expect("field name")), i))
        .collect()
}

pub fn edge_set(g: &FeatureGraph, ty: EdgeType) -> BTreeSet<(usize, usize)> {
    g.edges_of(ty).collect()
}

/// NextToken is one chain through every terminal in (line, col) order.
pub fn next_token_is_source_path(g: &FeatureGraph, ast: &Ast) -> Result<(), String> {
    let mut terms: Vec<usize> = (0..ast.len()).filter(|&n| ast.kind(n).is_terminal()).collect();
    terms.sort_by_key(|&n| (ast.nodes[n].line, ast.nodes[n].col));
    let edges = edge_set(g, EdgeType::NextToken);
    if edges.len() + 1 != terms.len().max(1) {
        return Err(format!("{} edges for {} terminals", edges.len(), terms.len()));
    }
    let mut out: BTreeMap<usize, usize> = BTreeMap::new();
    let mut indeg: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in &edges {
        if out.insert(a, b).is_some() {
            return Err(format!("node {a} has two successors"));
        }
        *indeg.entry(b).or_default() += 1;
    }
    if indeg.values().any(|&d| d > 1) {
        return Err("node with two predecessors".into());
    }
    let mut walk = vec![terms[0]];
    while let Some(&next) = out.get(walk.last().unwrap()) {
        walk.push(next);
    }
    if walk != terms {
        return Err("chain does not follow source order".into());
    }
    Ok(())
}

// ---------------------------------------------------------- path contexts

/// Every terminal pair joined by a breadth-first search over the undirected
/// tree, rendered as `(start, end, shape)` with `^` on the way up to the
/// shallowest node and `_` on the way down.
pub fn all_pairs_paths(ast: &Ast) -> Vec<(usize, usize, String)> {
    let n = ast.len();
    let mut adj = vec![Vec::new(); n];
    for (p, c) in ast.child_edges() {
        adj[p].push(c);
        adj[c].push(p);
    }
    let mut terms: Vec<usize> = (0..n).filter(|&x| ast.kind(x).is_terminal()).collect();
    terms.sort_by_key(|&x| (ast.nodes[x].line, ast.nodes[x].col));
    let depth = |x: usize| ast.depth(x);
    let mut out = Vec::new();
    for (i, &s) in terms.iter().enumerate() {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    q.push_back(y);
                }
            }
        }
        for &e in &terms[i + 1..] {
            let mut path = vec![e];
            while *path.last().unwrap() != s {
                path.push(prev[*path.last().unwrap()]);
            }
            path.reverse();
            let top = (0..path.len()).min_by_key(|&k| depth(path[k])).unwrap();
            let mut shape = String::new();
            for (k, &x) in path.iter().enumerate() {
                if k > top {
                    shape.push('_');
                }
                shape.push_str(ast.kind(x).as_str());
                if k < top {
                    shape.push('^');
                }
            }
            out.push((s, e, shape));
        }
    }
    out
}

// ------------------------------------------------------------ call graph

pub type CallRow = (String, String, &'static str, String, bool);

// (caller, callee name, type, resolved callee or "-", constructor call)
/// Hand-traced call sites of the demo, shapes and textutil projects.
pub const GROUND_TRUTH: &[(&str, &str, &str, &str, bool)] = &[
    ("A.main(String[])", "helper", "Local", "A.helper()", false),
    ("A.main(String[])", "util", "Package", "B.util()", false),
    ("A.main(String[])", "fmt", "Project", "C.fmt(String)", false),
    ("A.main(String[])", "format", "API", "-", false),
    ("C.fmt(String)", "pad", "Local", "C.pad(String,int)", false),
    ("C.pad(String,int)", "length", "API", "-", false),
    ("Shape.describe()", "format", "Local", "Shape.format(double)", false),
    ("Shape.describe()", "area", "Local", "Shape.area()", false),
    ("Shape.format(double)", "valueOf", "API", "-", false),
    ("Shape.format(int)", "toString", "API", "-", false),
    ("Circle.label()", "describe", "Package", "Shape.describe()", false),
    ("Square.sideText()", "format", "Package", "Shape.format(int)", false),
    ("Gallery.add(Shape)", "add", "API", "-", false),
    ("Gallery.fill(int)", "add", "Local", "Gallery.add(Shape)", false),
    ("Gallery.fill(int)", "Circle", "Package", "Circle.Circle(double)", true),
    ("Gallery.fill(int)", "add", "Local", "Gallery.add(Shape)", false),
    ("Gallery.fill(int)", "Square", "Package", "Square.Square(int)", true),
    ("Gallery.total()", "size", "API", "-", false),
    ("Gallery.total()", "get", "API", "-", false),
    ("Gallery.total()", "area", "Package", "Shape.area()", false),
    ("Gallery.report(Circle,Square)", "label", "Package", "Circle.label()", false),
    ("Gallery.report(Circle,Square)", "sideText", "Package", "Square.sideText()", false),
    ("Gallery.report(Circle,Square)", "format", "Package", "Shape.format(int)", false),
    ("Words.count(String)", "isEmpty", "API", "-", false),
    ("Words.count(String)", "length", "API", "-", false),
    ("Words.count(String)", "charAt", "API", "-", false),
    ("Words.join(String[])", "StringBuilder", "API", "-", true),
    ("Words.join(String[])", "append", "API", "-", false),
    ("Words.join(String[])", "append", "API", "-", false),
    ("Words.join(String[])", "toString", "API", "-", false),
    ("Words.capitalize(String)", "isEmpty", "API", "-", false),
    ("Words.capitalize(String)", "substring", "API", "-", false),
    ("Words.capitalize(String)", "toUpperCase", "API", "-", false),
    ("Words.capitalize(String)", "substring", "API", "-", false),
    ("Stats.add(String)", "length", "API", "-", false),
    ("Stats.summary(Words,String)", "count", "Package", "Words.count(String)", false),
    ("Stats.summary(Words,String)", "capitalize", "Package", "Words.capitalize(String)", false),
    ("Stats.summary(Words,String)", "pair", "Project", "Format.pair(String,int)", false),
    ("Stats.summary(Words,String)", "average", "Local", "Stats.average()", false),
];

pub fn ground_truth_rows() -> Vec<CallRow> {
    let mut want: Vec<CallRow> = GROUND_TRUTH
        .iter()
        .map(|&(a, n, t, b, k)| (a.to_string(), n.to_string(), t, b.to_string(), k))
        .collect();
    want.sort();
    want
}

/// Edges as sorted `(Class.signature, name, type, callee, constructor)` rows.
pub fn call_rows(catalog: &Catalog, g: &CallGraph) -> Vec<CallRow> {
    let classes: BTreeMap<EntityId, &str> = catalog.classes.iter().map(|k| (k.class_id, k.class_name.as_str())).collect();
    let names: BTreeMap<EntityId, String> = catalog
        .methods
        .iter()
        .map(|m| (m.method_id, format!("{}.{}", classes[&m.class_id], m.method_signature)))
        .collect();
    let mut rows: Vec<CallRow> = g
        .edges
        .iter()
        .map(|e| {
            (
                names[&e.caller].clone(),
                e.callee_name.clone(),
                e.call_type.as_str(),
                e.callee.map_or("-".to_string(), |id| names[&id].clone()),
                e.is_constructor,
            )
        })
        .collect();
    rows.sort();
    rows
}

// ------------------------------------------------------------- recounts

/// Call-type counts read back from the call-graph CSV text.
pub fn recount_call_types(csv_text: &str) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = ["Local", "Package", "Project", "API"].iter().map(|s| (s.to_string(), 0)).collect();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.expect("csv record");
        *counts.get_mut(&rec[3]).expect("known call type") += 1;
    }
    counts
}

/// Fraction of entities within each threshold, recomputed from the sizes
/// CSV text: `(granularity, tokenizer, threshold) -> (population, fit)`.
pub fn recount_fit(sizes_csv: &str, thresholds: &[u64]) -> BTreeMap<(String, String, u64), (usize, usize)> {
    let mut groups: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(sizes_csv.as_bytes());
    for rec in rdr.records() {
        let rec = rec.expect("csv record");
        groups.entry((rec[1].to_string(), rec[2].to_string())).or_default().push(rec[3].parse().unwrap());
    }
    let mut out = BTreeMap::new();
    for ((g, tag), sizes) in groups {
        for &t in thresholds {
            let fit = sizes.iter().filter(|&&s| s <= t).count();
            out.insert((g.clone(), tag.clone(), t), (sizes.len(), fit));
        }
    }
    out
}

/// Greedy BPE encoding straight from the ordered merge list: repeatedly
/// apply the earliest-ranked merge present anywhere in the sequence.
pub fn naive_bpe_encode(merges: &[(Vec<u8>, Vec<u8>)], text: &str) -> Vec<Vec<u8>> {
    let rank: BTreeMap<(&[u8], &[u8]), usize> =
        merges.iter().enumerate().map(|(i, (a, b))| ((a.as_slice(), b.as_slice()), i)).collect();
    let mut seq: Vec<Vec<u8>> = text.bytes().map(|b| vec![b]).collect();
    loop {
        let best = (0..seq.len().saturating_sub(1))
            .filter_map(|i| rank.get(&(seq[i].as_slice(), seq[i + 1].as_slice())).map(|&r| (r, i)))
            .min();
        let Some((r, _)) = best else { return seq };
        let (a, b) = &merges[r];
        let mut next = Vec::with_capacity(seq.len());
        let mut i = 0;
        while i < seq.len() {
            if i + 1 < seq.len() && seq[i] == *a && seq[i + 1] == *b {
                let mut m = a.clone();
                m.extend_from_slice(b);
                next.push(m);
                i += 2;
            } else {
                next.push(seq[i].clone());
                i += 1;
            }
        }
        seq = next;
    }
}

// -------------------------------------------------------------- pipeline

pub const SEED: u64 = 7;

/// A workspace over the fixture corpus with every stage already run.
pub fn pipeline() -> &'static corpuslab::workspace::Workspace {
    use corpuslab::taskgen::{Split, SplitFracs};
    use corpuslab::workspace::*;
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = fresh_dir();
        let root = write_corpus(&dir);
        let mut cfg = WorkspaceConfig::new(root, dir.join("ws"));
        cfg.seed = SEED;
        let ws = Workspace::new(cfg).expect("workspace");
        ws.catalog().expect("catalog");
        ws.repr(&ReprType::ALL, &ReprSettings::default()).expect("repr");
        ws.metrics().expect("metrics");
        ws.callgraph().expect("callgraph");
        let mask = TaskSpec::CallMask { include_constructors: false, context_hops: 0, exclude_masked: true };
        ws.taskgen(&mask, SplitFracs::default(), None).expect("call-mask");
        ws.taskgen(&TaskSpec::Mutation { p_mutate: 0.5 }, SplitFracs::default(), None).expect("mutation");
        let prop = TaskSpec::Property { key: "CMPX".into(), filters: Vec::new(), balance: true, repr: "TKNA".into() };
        ws.taskgen(&prop, SplitFracs::default(), None).expect("property");
        ws.tokenstats(&TokenStatsConfig::default()).expect("tokenstats");
        ws.report(&Study::Calls { include_constructors: true }).expect("calls");
        ws.report(&Study::Windows).expect("windows");
        ws.report(&Study::Bias { x_width: 5, y_width: 1 }).expect("bias");
        let eval = Study::Eval { task: "call-mask".into(), predictor: Predictor::MostFrequent, split: Split::Test };
        ws.report(&eval).expect("eval");
        ws
    })
}
