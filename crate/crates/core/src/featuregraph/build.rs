use std::collections::{BTreeMap, BTreeSet};

use super::{EdgeType, FeatureGraph, GraphNode};
use crate::lexparse::scope::{resolve_variables, Var};
use crate::lexparse::{Ast, MethodSource, NodeKind};
use crate::{Error, Result};

/// Supplies callee parameter names for call sites the caller can bind.
pub trait CallResolver {
    /// Formal parameter names of the callee invoked by `call` (a
    /// `MethodCall` or `ObjectCreation` node of `method.ast`).
    fn formal_params(&self, method: &MethodSource, call: usize) -> Option<Vec<String>>;
}

pub struct NoResolver;

impl CallResolver for NoResolver {
    fn formal_params(&self, _: &MethodSource, _: usize) -> Option<Vec<String>> {
        None
    }
}

pub fn build_feature_graph(m: &MethodSource, resolver: &dyn CallResolver) -> Result<FeatureGraph> {
    let ast = &m.ast;
    ast.validate().map_err(Error::InvalidArgument)?;
    if !matches!(ast.kind(ast.root()), NodeKind::MethodDecl | NodeKind::ConstructorDecl) {
        return Err(Error::InvalidArgument(format!("graph root is {}, not a method", ast.kind(ast.root()))));
    }
    let mut g = FeatureGraph::from_ast(ast);
    let terminals = ast.terminals();

    for w in terminals.windows(2) {
        g.add_edge(w[0], w[1], EdgeType::NextToken);
    }

    let field_names: Vec<String> = m.class_fields.iter().map(|f| f.name.clone()).collect();
    let vars = resolve_variables(ast, &field_names);

    // Synthetic definition nodes for the fields the method touches.
    let used_fields: BTreeSet<String> = vars
        .iter()
        .filter_map(|v| match v {
            Some(Var::Field(name)) => Some(name.clone()),
            _ => None,
        })
        .collect();
    let mut field_defs = BTreeMap::new();
    for name in used_fields {
        let idx = g.add_node(GraphNode {
            kind: NodeKind::FieldDef,
            token: Some(name.clone()),
            line: 0,
            col: 0,
        });
        field_defs.insert(Var::Field(name), idx);
    }

    let mut flow = DataFlow {
        ast,
        vars: &vars,
        edges: BTreeSet::new(),
    };
    let mut entry = FlowState::default();
    for (var, node) in &field_defs {
        entry.entry(var.clone()).or_default().writes.insert(*node);
    }
    let mut state = Some(entry);
    if let Some(params) = ast.child_of_kind(ast.root(), NodeKind::Parameters) {
        for p in ast.children_of_kind(params, NodeKind::Parameter) {
            if let Some(id) = ast.ident_child(p) {
                flow.access(id, false, true, &mut state);
            }
        }
    }
    if let Some(body) = ast.child_of_kind(ast.root(), NodeKind::Block) {
        flow.stmt(body, &mut state);
    }
    for (src, dst, ty) in flow.edges {
        g.add_edge(src, dst, ty);
    }

    computed_from(ast, &vars, &mut g);
    lexical_use(ast, &terminals, &mut g);
    guards(ast, &vars, &mut g);

    for &t in &terminals {
        if ast.kind(t) == NodeKind::Keyword && ast.lexeme(t) == Some("return") {
            g.add_edge(t, ast.root(), EdgeType::ReturnTo);
        }
    }

    formal_args(m, resolver, &mut g);
    Ok(g)
}

fn var_terminals_in<'a>(ast: &'a Ast, vars: &'a [Option<Var>], n: usize) -> impl Iterator<Item = usize> + 'a {
    ast.terminals_in(n).filter(move |&t| vars[t].is_some())
}

fn computed_from(ast: &Ast, vars: &[Option<Var>], g: &mut FeatureGraph) {
    for n in 0..ast.len() {
        let kids = ast.children(n);
        let (target, value) = match ast.kind(n) {
            NodeKind::Assignment => (assigned_terminal(ast, vars, kids[0]), kids[2]),
            NodeKind::VarDeclarator if kids.len() >= 3 => (Some(kids[0]), *kids.last().unwrap()),
            _ => continue,
        };
        if let Some(t) = target {
            for v in var_terminals_in(ast, vars, value) {
                g.add_edge(t, v, EdgeType::ComputedFrom);
            }
        }
    }
}

/// Variable terminal written by an assignment target, if it is one.
fn assigned_terminal(ast: &Ast, vars: &[Option<Var>], lhs: usize) -> Option<usize> {
    match ast.kind(lhs) {
        NodeKind::NameExpr | NodeKind::FieldAccess => ast.ident_child(lhs).filter(|&t| vars[t].is_some()),
        NodeKind::Paren => assigned_terminal(ast, vars, ast.children(lhs)[1]),
        _ => None,
    }
}

fn lexical_use(ast: &Ast, terminals: &[usize], g: &mut FeatureGraph) {
    let mut last: BTreeMap<&str, usize> = BTreeMap::new();
    for &t in terminals {
        if ast.kind(t) != NodeKind::Identifier {
            continue;
        }
        let lex = ast.lexeme(t).unwrap_or_default();
        if let Some(prev) = last.insert(lex, t) {
            g.add_edge(t, prev, EdgeType::LastLexicalUse);
        }
    }
}

fn guards(ast: &Ast, vars: &[Option<Var>], g: &mut FeatureGraph) {
    for n in 0..ast.len() {
        if ast.kind(n) != NodeKind::IfStmt {
            continue;
        }
        let kids = ast.children(n);
        let cond = kids[1];
        let in_cond: BTreeSet<&Var> = var_terminals_in(ast, vars, cond)
            .filter_map(|t| vars[t].as_ref())
            .collect();
        let mut link = |branch: usize, ty: EdgeType| {
            for t in var_terminals_in(ast, vars, branch) {
                if vars[t].as_ref().is_some_and(|v| in_cond.contains(v)) {
                    g.add_edge(t, cond, ty);
                }
            }
        };
        link(kids[2], EdgeType::GuardedBy);
        if let Some(&other) = kids.get(4) {
            link(other, EdgeType::GuardedByNegation);
        }
    }
}

fn formal_args(m: &MethodSource, resolver: &dyn CallResolver, g: &mut FeatureGraph) {
    let ast = &m.ast;
    for n in 0..ast.len() {
        if !matches!(ast.kind(n), NodeKind::MethodCall | NodeKind::ObjectCreation) {
            continue;
        }
        let Some(params) = resolver.formal_params(m, n) else {
            continue;
        };
        if params.is_empty() {
            continue;
        }
        let Some(args) = ast.child_of_kind(n, NodeKind::Arguments) else {
            continue;
        };
        let arg_roots: Vec<usize> = ast
            .children(args)
            .iter()
            .copied()
            .filter(|&c| !ast.kind(c).is_terminal())
            .collect();
        let mut synthetic: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, arg) in arg_roots.into_iter().enumerate() {
            let p = i.min(params.len() - 1);
            let target = *synthetic.entry(p).or_insert_with(|| {
                g.add_node(GraphNode {
                    kind: NodeKind::FormalArgName,
                    token: Some(params[p].clone()),
                    line: 0,
                    col: 0,
                })
            });
            g.add_edge(arg, target, EdgeType::FormalArgName);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Access {
    reads: BTreeSet<usize>,
    writes: BTreeSet<usize>,
}

type FlowState = BTreeMap<Var, Access>;

/// `None` marks unreachable code (after a return).
fn join(a: Option<FlowState>, b: Option<FlowState>) -> Option<FlowState> {
    match (a, b) {
        (None, s) | (s, None) => s,
        (Some(mut a), Some(b)) => {
            for (var, acc) in b {
                let e = a.entry(var).or_default();
                e.reads.extend(acc.reads);
                e.writes.extend(acc.writes);
            }
            Some(a)
        }
    }
}

/// Forward may-analysis of last reads and writes over the structured
/// control flow of a method body.
struct DataFlow<'a> {
    ast: &'a Ast,
    vars: &'a [Option<Var>],
    edges: BTreeSet<(usize, usize, EdgeType)>,
}

impl DataFlow<'_> {
    fn access(&mut self, t: usize, read: bool, write: bool, state: &mut Option<FlowState>) {
        let (Some(var), Some(s)) = (self.vars[t].as_ref(), state.as_mut()) else {
            return;
        };
        let acc = s.entry(var.clone()).or_default();
        for &r in &acc.reads {
            self.edges.insert((t, r, EdgeType::LastRead));
        }
        for &w in &acc.writes {
            self.edges.insert((t, w, EdgeType::LastWrite));
        }
        if read {
            acc.reads = BTreeSet::from([t]);
        }
        if write {
            acc.writes = BTreeSet::from([t]);
        }
    }

    fn stmt(&mut self, n: usize, state: &mut Option<FlowState>) {
        let ast = self.ast;
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::Block => {
                for &c in kids {
                    if ast.kind(c).is_statement() {
                        self.stmt(c, state);
                    }
                }
            }
            NodeKind::LocalVarDecl => {
                for d in ast.children_of_kind(n, NodeKind::VarDeclarator) {
                    self.declarator(d, state);
                }
            }
            NodeKind::ExprStmt => self.expr(kids[0], state),
            NodeKind::ReturnStmt => {
                if let Some(&e) = kids.get(1).filter(|&&e| !ast.kind(e).is_terminal()) {
                    self.expr(e, state);
                }
                *state = None;
            }
            NodeKind::IfStmt => {
                self.condition(kids[1], state);
                let mut then_state = state.clone();
                self.stmt(kids[2], &mut then_state);
                let mut else_state = state.take();
                if let Some(&other) = kids.get(4) {
                    self.stmt(other, &mut else_state);
                }
                *state = join(then_state, else_state);
            }
            NodeKind::WhileStmt => {
                let cond = kids[1];
                let body = kids[2];
                self.loop_fixpoint(Some(cond), body, None, state);
            }
            NodeKind::ForStmt => {
                if let Some(init) = ast.child_of_kind(n, NodeKind::ForInit) {
                    for &c in ast.children(init) {
                        match ast.kind(c) {
                            NodeKind::LocalVarDecl => self.stmt(c, state),
                            k if k.is_terminal() => {}
                            _ => self.expr(c, state),
                        }
                    }
                }
                let cond = ast.child_of_kind(n, NodeKind::Condition);
                let update = ast.child_of_kind(n, NodeKind::ForUpdate);
                let body = *kids.last().expect("for body");
                self.loop_fixpoint(cond, body, update, state);
            }
            _ => {}
        }
    }

    fn loop_fixpoint(
        &mut self,
        cond: Option<usize>,
        body: usize,
        update: Option<usize>,
        state: &mut Option<FlowState>,
    ) {
        let entry = state.take();
        let mut back: Option<FlowState> = None;
        loop {
            let head = join(entry.clone(), back.clone());
            let mut after_cond = head.clone();
            if let Some(c) = cond {
                self.condition(c, &mut after_cond);
            }
            let mut iter = after_cond.clone();
            self.stmt(body, &mut iter);
            if let Some(u) = update {
                for &e in self.ast.children(u) {
                    if !self.ast.kind(e).is_terminal() {
                        self.expr(e, &mut iter);
                    }
                }
            }
            let next_head = join(entry.clone(), iter.clone());
            if next_head == head {
                *state = if cond.is_some() { after_cond } else { None };
                return;
            }
            back = iter;
        }
    }

    fn condition(&mut self, cond: usize, state: &mut Option<FlowState>) {
        for &c in self.ast.children(cond) {
            if !self.ast.kind(c).is_terminal() {
                self.expr(c, state);
            }
        }
    }

    fn declarator(&mut self, d: usize, state: &mut Option<FlowState>) {
        let kids = self.ast.children(d);
        if kids.len() >= 3 {
            let init = *kids.last().unwrap();
            self.expr(init, state);
        }
        self.access(kids[0], false, true, state);
    }

    fn expr(&mut self, n: usize, state: &mut Option<FlowState>) {
        let ast = self.ast;
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::NameExpr => self.access(kids[0], true, false, state),
            NodeKind::FieldAccess => {
                if ast.kind(kids[0]) == NodeKind::ThisExpr {
                    self.access(kids[2], true, false, state);
                } else {
                    self.expr(kids[0], state);
                }
            }
            NodeKind::Assignment => {
                let (lhs, op, rhs) = (kids[0], kids[1], kids[2]);
                let compound = ast.lexeme(op) != Some("=");
                match assigned_terminal(ast, self.vars, lhs) {
                    Some(t) => {
                        self.expr(rhs, state);
                        self.access(t, compound, true, state);
                    }
                    None => {
                        self.expr(lhs, state);
                        self.expr(rhs, state);
                    }
                }
            }
            NodeKind::Unary | NodeKind::Postfix => {
                let (op, operand) = if ast.kind(n) == NodeKind::Unary {
                    (kids[0], kids[1])
                } else {
                    (kids[1], kids[0])
                };
                let step = matches!(ast.lexeme(op), Some("++" | "--"));
                match assigned_terminal(ast, self.vars, operand).filter(|_| step) {
                    Some(t) => self.access(t, true, true, state),
                    None => self.expr(operand, state),
                }
            }
            NodeKind::Binary => {
                let op = ast.lexeme(kids[1]).unwrap_or_default();
                self.expr(kids[0], state);
                match op {
                    "&&" | "||" => {
                        let skipped = state.clone();
                        self.expr(kids[2], state);
                        *state = join(state.take(), skipped);
                    }
                    "instanceof" => {}
                    _ => self.expr(kids[2], state),
                }
            }
            NodeKind::Conditional => {
                self.expr(kids[0], state);
                let mut other = state.clone();
                self.expr(kids[2], state);
                self.expr(kids[4], &mut other);
                *state = join(state.take(), other);
            }
            NodeKind::Literal | NodeKind::ThisExpr | NodeKind::Type => {}
            NodeKind::ArrayInit => {
                for &c in kids {
                    if !ast.kind(c).is_terminal() {
                        self.expr(c, state);
                    }
                }
            }
            // Paren, ArrayAccess, MethodCall, Arguments, ObjectCreation,
            // ArrayCreation: operands left to right.
            _ => {
                for &c in kids {
                    if !ast.kind(c).is_terminal() {
                        self.expr(c, state);
                    }
                }
            }
        }
    }
}
