//! Per-method code metrics and the binned property-correlation table.

mod correlation;

pub use correlation::{property_correlation_report, BinnedTable};

use std::collections::BTreeSet;

use crate::corpus::{EntityId, PropertyKey, PropertyValue};
use crate::lexparse::{Ast, MethodSource, NodeKind, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricRecord {
    pub method_id: EntityId,
    pub tloc: u64,
    pub sloc: u64,
    pub cmpx: u64,
    pub mxin: u64,
    pub npth: u64,
    pub nmtk: u64,
    pub nmpr: u64,
    pub nuid: u64,
    pub nmop: u64,
    pub nmlt: u64,
    pub nmrt: u64,
    pub name: String,
}

impl MetricRecord {
    /// `(code, value)` pairs in property-table order.
    pub fn values(&self) -> Vec<(&'static str, PropertyValue)> {
        let int = |v: u64| PropertyValue::Integer(v as i64);
        vec![
            ("TLOC", int(self.tloc)),
            ("SLOC", int(self.sloc)),
            ("CMPX", int(self.cmpx)),
            ("MXIN", int(self.mxin)),
            ("NPTH", int(self.npth)),
            ("NMTK", int(self.nmtk)),
            ("NMPR", int(self.nmpr)),
            ("NUID", int(self.nuid)),
            ("NMOP", int(self.nmop)),
            ("NMLT", int(self.nmlt)),
            ("NMRT", int(self.nmrt)),
            ("NAME", PropertyValue::Text(self.name.clone())),
        ]
    }
}

/// Regroups metric records into one row list per property key.
pub fn metric_tables(records: &[MetricRecord]) -> Vec<(PropertyKey, Vec<(EntityId, PropertyValue)>)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    first
        .values()
        .iter()
        .enumerate()
        .map(|(i, (code, _))| {
            let key = PropertyKey::new(code).expect("builtin key");
            let rows = records
                .iter()
                .map(|r| (r.method_id, r.values().swap_remove(i).1))
                .collect();
            (key, rows)
        })
        .collect()
}

pub fn compute_metrics(m: &MethodSource) -> MetricRecord {
    let ast = &m.ast;
    let tokens = &ast.tokens;
    let count_kind = |k: TokenKind| tokens.iter().filter(|t| t.kind == k).count() as u64;
    let lines: BTreeSet<u32> = tokens.iter().map(|t| t.line).collect();
    let identifiers: BTreeSet<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.lexeme.as_str())
        .collect();
    MetricRecord {
        method_id: m.method_id,
        tloc: u64::from(m.end_line - m.start_line + 1),
        sloc: lines.len() as u64,
        cmpx: cyclomatic(ast),
        mxin: max_nesting(ast),
        npth: npath(ast),
        nmtk: tokens.len() as u64,
        nmpr: m.params.len() as u64,
        nuid: identifiers.len() as u64,
        nmop: count_kind(TokenKind::Operator),
        nmlt: tokens.iter().filter(|t| t.kind.is_literal()).count() as u64,
        nmrt: ast.nodes.iter().filter(|n| n.kind == NodeKind::ReturnStmt).count() as u64,
        name: m.name.clone(),
    }
}

fn is_short_circuit(ast: &Ast, n: usize) -> bool {
    ast.kind(n) == NodeKind::Binary
        && ast
            .children(n)
            .get(1)
            .and_then(|&op| ast.lexeme(op))
            .is_some_and(|op| op == "&&" || op == "||")
}

/// 1 + branch points: if, while, for, `&&`, `||`, `?:`.
pub fn cyclomatic(ast: &Ast) -> u64 {
    1 + (0..ast.len())
        .filter(|&n| {
            matches!(
                ast.kind(n),
                NodeKind::IfStmt | NodeKind::WhileStmt | NodeKind::ForStmt | NodeKind::Conditional
            ) || is_short_circuit(ast, n)
        })
        .count() as u64
}

/// Deepest block below the body block (which is depth 0).
pub fn max_nesting(ast: &Ast) -> u64 {
    (0..ast.len())
        .filter(|&n| ast.kind(n) == NodeKind::Block)
        .map(|n| {
            let mut depth = 0u64;
            let mut cur = ast.parent[n];
            while let Some(p) = cur {
                if ast.kind(p) == NodeKind::Block {
                    depth += 1;
                }
                cur = ast.parent[p];
            }
            depth
        })
        .max()
        .unwrap_or(0)
}

fn short_circuits_in(ast: &Ast, n: usize) -> u64 {
    (n..ast.subtree_end(n)).filter(|&i| is_short_circuit(ast, i)).count() as u64
}

/// Acyclic path count of the method by structural recurrence.
pub fn npath(ast: &Ast) -> u64 {
    match ast.child_of_kind(ast.root(), NodeKind::Block) {
        Some(body) => npath_stmt(ast, body),
        None => 1,
    }
}

fn npath_stmt(ast: &Ast, n: usize) -> u64 {
    let kids = ast.children(n);
    match ast.kind(n) {
        NodeKind::Block => kids
            .iter()
            .filter(|&&c| ast.kind(c).is_statement())
            .fold(1u64, |acc, &c| acc.saturating_mul(npath_stmt(ast, c))),
        NodeKind::IfStmt => {
            let cond = short_circuits_in(ast, kids[1]);
            let then = npath_stmt(ast, kids[2]);
            match kids.get(4) {
                Some(&other) => then.saturating_add(npath_stmt(ast, other)).saturating_add(cond),
                None => then.saturating_add(1).saturating_add(cond),
            }
        }
        NodeKind::WhileStmt | NodeKind::ForStmt => {
            let cond = ast
                .child_of_kind(n, NodeKind::Condition)
                .map_or(0, |c| short_circuits_in(ast, c));
            let body = *kids.last().expect("loop body");
            npath_stmt(ast, body).saturating_add(1).saturating_add(cond)
        }
        _ => 1,
    }
}
