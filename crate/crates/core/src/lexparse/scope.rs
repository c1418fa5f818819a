use std::collections::HashMap;

use super::ast::{Ast, NodeKind};

/// What a variable occurrence refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Local or parameter, identified by its declaring terminal.
    Local(usize),
    /// Field of the enclosing class.
    Field(String),
}

/// Resolves every identifier terminal of a method tree that names a variable.
/// The result is indexed by node; non-variable nodes map to `None`.
pub fn resolve_variables(ast: &Ast, field_names: &[String]) -> Vec<Option<Var>> {
    let mut out = vec![None; ast.len()];
    let mut scopes: Vec<HashMap<String, usize>> = vec![HashMap::new()];
    walk(ast, ast.root(), field_names, &mut scopes, &mut out);
    out
}

fn walk(
    ast: &Ast,
    n: usize,
    fields: &[String],
    scopes: &mut Vec<HashMap<String, usize>>,
    out: &mut [Option<Var>],
) {
    match ast.kind(n) {
        NodeKind::Type | NodeKind::Modifiers => {}
        NodeKind::Block | NodeKind::ForStmt => {
            scopes.push(HashMap::new());
            for &c in ast.children(n) {
                walk(ast, c, fields, scopes, out);
            }
            scopes.pop();
        }
        NodeKind::Parameter | NodeKind::VarDeclarator => {
            if let Some(id) = ast.ident_child(n) {
                let name = ast.lexeme(id).unwrap_or_default().to_string();
                scopes.last_mut().expect("scope").insert(name, id);
                out[id] = Some(Var::Local(id));
            }
            for &c in ast.children(n) {
                walk(ast, c, fields, scopes, out);
            }
        }
        NodeKind::NameExpr => {
            if let Some(id) = ast.ident_child(n) {
                let name = ast.lexeme(id).unwrap_or_default();
                let local = scopes.iter().rev().find_map(|s| s.get(name).copied());
                out[id] = match local {
                    Some(decl) => Some(Var::Local(decl)),
                    None if fields.iter().any(|f| f == name) => Some(Var::Field(name.to_string())),
                    None => None,
                };
            }
        }
        NodeKind::FieldAccess => {
            let kids = ast.children(n);
            if ast.kind(kids[0]) == NodeKind::ThisExpr {
                if let Some(id) = ast.ident_child(n) {
                    out[id] = Some(Var::Field(ast.lexeme(id).unwrap_or_default().to_string()));
                }
            } else {
                walk(ast, kids[0], fields, scopes, out);
            }
        }
        _ => {
            for &c in ast.children(n) {
                walk(ast, c, fields, scopes, out);
            }
        }
    }
}
