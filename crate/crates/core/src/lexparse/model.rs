use serde::{Deserialize, Serialize};

use super::ast::{Ast, NodeKind};
use crate::corpus::ids::{assign_id, method_key, EntityId, EntityKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub path: String,
    pub wildcard: bool,
    pub is_static: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodModel {
    pub name: String,
    pub node: usize,
    pub is_constructor: bool,
    pub params: Vec<Param>,
    pub return_type: String,
    pub start_line: u32,
    pub end_line: u32,
}

impl MethodModel {
    pub fn signature(&self) -> String {
        format_signature(&self.name, self.params.iter().map(|p| p.ty.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassModel {
    pub name: String,
    pub node: usize,
    pub is_interface: bool,
    pub superclass: Option<String>,
    pub fields: Vec<Param>,
    pub methods: Vec<MethodModel>,
}

/// Declarations of one parsed compilation unit. Only top-level types are
/// modelled; member classes are parsed but not catalogued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileModel {
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub classes: Vec<ClassModel>,
}

/// One method or constructor with everything the downstream analyses need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSource {
    pub method_id: EntityId,
    pub name: String,
    pub signature: String,
    pub class_name: String,
    pub is_constructor: bool,
    pub params: Vec<Param>,
    pub return_type: String,
    pub class_fields: Vec<Param>,
    pub start_line: u32,
    pub end_line: u32,
    /// Raw source lines `start_line..=end_line`, comments included.
    pub text: String,
    /// Subtree rooted at the declaration; its tokens are the method's tokens.
    pub ast: Ast,
}

pub fn format_signature<'a>(name: &str, types: impl IntoIterator<Item = &'a str>) -> String {
    let types: Vec<&str> = types.into_iter().collect();
    format!("{name}({})", types.join(","))
}

/// Splits `name(T1,T2)` back into its name and parameter types.
pub fn parse_signature(sig: &str) -> Result<(String, Vec<String>)> {
    let bad = || Error::InvalidArgument(format!("malformed signature `{sig}`"));
    let open = sig.find('(').ok_or_else(bad)?;
    if !sig.ends_with(')') || open == 0 {
        return Err(bad());
    }
    let name = &sig[..open];
    let inner = &sig[open + 1..sig.len() - 1];
    let types = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::to_string).collect()
    };
    if types.iter().any(|t| t.is_empty()) {
        return Err(bad());
    }
    Ok((name.to_string(), types))
}

/// Erased type text: identifiers, dots and array brackets, no type arguments.
pub fn type_name(ast: &Ast, ty: usize) -> String {
    let mut out = String::new();
    let mut skip_until = 0;
    for i in ty + 1..ast.subtree_end(ty) {
        if i < skip_until {
            continue;
        }
        if ast.kind(i) == NodeKind::TypeArguments {
            skip_until = ast.subtree_end(i);
            continue;
        }
        if let Some(lex) = ast.lexeme(i) {
            out.push_str(lex);
        }
    }
    out
}

fn qualified(ast: &Ast, n: usize) -> String {
    ast.terminals_in(n).filter_map(|t| ast.lexeme(t)).collect()
}

fn last_line(ast: &Ast, n: usize) -> u32 {
    ast.terminals_in(n)
        .last()
        .and_then(|t| ast.token(t))
        .map_or(ast.nodes[n].line, |t| t.line)
}

pub fn params_of(ast: &Ast, decl: usize) -> Vec<Param> {
    let Some(params) = ast.child_of_kind(decl, NodeKind::Parameters) else {
        return Vec::new();
    };
    ast.children_of_kind(params, NodeKind::Parameter)
        .map(|p| {
            let ty_node = ast.child_of_kind(p, NodeKind::Type).expect("parameter type");
            let mut ty = type_name(ast, ty_node);
            if ast.children(p).iter().any(|&c| ast.lexeme(c) == Some("...")) {
                ty.push_str("[]");
            }
            let name = ast
                .ident_child(p)
                .and_then(|i| ast.lexeme(i))
                .unwrap_or_default()
                .to_string();
            Param { name, ty }
        })
        .collect()
}

fn method_model(ast: &Ast, decl: usize) -> MethodModel {
    let is_constructor = ast.kind(decl) == NodeKind::ConstructorDecl;
    let name_node = ast.ident_child(decl).expect("declaration name");
    let return_type = if is_constructor {
        String::new()
    } else {
        type_name(ast, ast.child_of_kind(decl, NodeKind::Type).expect("return type"))
    };
    MethodModel {
        name: ast.lexeme(name_node).unwrap_or_default().to_string(),
        node: decl,
        is_constructor,
        params: params_of(ast, decl),
        return_type,
        start_line: ast.nodes[decl].line,
        end_line: last_line(ast, decl),
    }
}

fn class_model(ast: &Ast, decl: usize) -> ClassModel {
    let name = ast
        .ident_child(decl)
        .and_then(|i| ast.lexeme(i))
        .unwrap_or_default()
        .to_string();
    let is_interface = ast.kind(decl) == NodeKind::InterfaceDecl;
    let superclass = if is_interface {
        None
    } else {
        ast.child_of_kind(decl, NodeKind::ExtendsClause)
            .and_then(|e| ast.child_of_kind(e, NodeKind::Type))
            .map(|t| type_name(ast, t))
    };
    let body = ast.child_of_kind(decl, NodeKind::ClassBody).expect("class body");
    let mut fields = Vec::new();
    let mut methods = Vec::new();
    for &m in ast.children(body) {
        match ast.kind(m) {
            NodeKind::FieldDecl => {
                let ty = type_name(ast, ast.child_of_kind(m, NodeKind::Type).expect("field type"));
                for d in ast.children_of_kind(m, NodeKind::VarDeclarator) {
                    let name = ast.ident_child(d).and_then(|i| ast.lexeme(i)).unwrap_or_default();
                    fields.push(Param {
                        name: name.to_string(),
                        ty: ty.clone(),
                    });
                }
            }
            NodeKind::MethodDecl | NodeKind::ConstructorDecl => methods.push(method_model(ast, m)),
            _ => {}
        }
    }
    ClassModel {
        name,
        node: decl,
        is_interface,
        superclass,
        fields,
        methods,
    }
}

pub fn file_model(ast: &Ast) -> FileModel {
    let root = ast.root();
    let package = ast
        .child_of_kind(root, NodeKind::PackageDecl)
        .and_then(|p| ast.child_of_kind(p, NodeKind::QualifiedName))
        .map(|q| qualified(ast, q));
    let imports = ast
        .children_of_kind(root, NodeKind::ImportDecl)
        .map(|i| {
            let q = ast.child_of_kind(i, NodeKind::QualifiedName).expect("import name");
            Import {
                path: qualified(ast, q),
                wildcard: ast.children(i).iter().any(|&c| ast.lexeme(c) == Some("*")),
                is_static: ast.children(i).iter().any(|&c| ast.lexeme(c) == Some("static")),
            }
        })
        .collect();
    let classes = ast
        .children(root)
        .iter()
        .copied()
        .filter(|&c| matches!(ast.kind(c), NodeKind::ClassDecl | NodeKind::InterfaceDecl))
        .map(|c| class_model(ast, c))
        .collect();
    FileModel {
        package,
        imports,
        classes,
    }
}

/// Bytes of lines `start..=end` (1-based), without the final line break.
pub fn slice_lines(source: &str, start: u32, end: u32) -> &str {
    let mut line = 1u32;
    let mut begin = if start <= 1 { Some(0) } else { None };
    for (i, b) in source.bytes().enumerate() {
        if b == b'\n' {
            if line == end {
                let s = begin.unwrap_or(i);
                let stop = if i > s && source.as_bytes()[i - 1] == b'\r' { i - 1 } else { i };
                return &source[s..stop];
            }
            line += 1;
            if line == start {
                begin = Some(i + 1);
            }
        }
    }
    &source[begin.unwrap_or(source.len())..]
}

/// One [`MethodSource`] per method/constructor of every top-level class.
pub fn extract_methods(ast: &Ast, model: &FileModel, file_rel: &str, source: &str) -> Result<Vec<MethodSource>> {
    let mut out = Vec::new();
    for class in &model.classes {
        for m in &class.methods {
            let signature = m.signature();
            let method_id = assign_id(EntityKind::Method, &method_key(file_rel, &signature, m.start_line))?;
            out.push(MethodSource {
                method_id,
                name: m.name.clone(),
                signature,
                class_name: class.name.clone(),
                is_constructor: m.is_constructor,
                params: m.params.clone(),
                return_type: m.return_type.clone(),
                class_fields: class.fields.clone(),
                start_line: m.start_line,
                end_line: m.end_line,
                text: slice_lines(source, m.start_line, m.end_line).to_string(),
                ast: ast.subtree(m.node),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexparse::{lex, parse};

    const SRC: &str = r#"package app.core;
import java.util.List;
import lib.*;

public class Shape extends Base {
    private int sides;
    List<String> names, tags;

    Shape(int sides) { this.sides = sides; }

    @Override
    public int area(int w, String... labels) {
        // comment stays in TEXT
        return w * sides;
    }
    void f(int a) {}
    void f(String a) {}
}
"#;

    #[test]
    fn models_declarations() {
        let ast = parse(SRC).unwrap();
        let m = file_model(&ast);
        assert_eq!(m.package.as_deref(), Some("app.core"));
        assert_eq!(m.imports.len(), 2);
        assert!(m.imports[1].wildcard);
        let c = &m.classes[0];
        assert_eq!(c.superclass.as_deref(), Some("Base"));
        assert_eq!(
            c.fields.iter().map(|f| (f.name.as_str(), f.ty.as_str())).collect::<Vec<_>>(),
            [("sides", "int"), ("names", "List"), ("tags", "List")]
        );
        let sigs: Vec<_> = c.methods.iter().map(|m| m.signature()).collect();
        assert_eq!(sigs, ["Shape(int)", "area(int,String[])", "f(int)", "f(String)"]);
    }

    #[test]
    fn spans_include_annotations_and_slice_exactly() {
        let ast = parse(SRC).unwrap();
        let model = file_model(&ast);
        let methods = extract_methods(&ast, &model, "p/Shape.java", SRC).unwrap();
        let area = &methods[1];
        assert_eq!((area.start_line, area.end_line), (11, 15));
        assert!(area.text.starts_with("    @Override\n"));
        assert!(area.text.contains("// comment stays in TEXT"));
        assert_eq!(area.text, slice_lines(SRC, 11, 15));
        // leaves of the method subtree reproduce lex(text)
        let leaves: Vec<_> = area.ast.terminals().iter().map(|&t| area.ast.lexeme(t).unwrap().to_string()).collect();
        let lexed: Vec<_> = lex(&area.text).unwrap().into_iter().map(|t| t.lexeme).collect();
        assert_eq!(leaves, lexed);
        area.ast.validate().unwrap();
    }

    #[test]
    fn overloads_get_distinct_ids() {
        let ast = parse(SRC).unwrap();
        let methods = extract_methods(&ast, &file_model(&ast), "p/Shape.java", SRC).unwrap();
        let f: Vec<_> = methods.iter().filter(|m| m.name == "f").collect();
        assert_eq!(f.len(), 2);
        assert_ne!(f[0].signature, f[1].signature);
        assert_ne!(f[0].method_id, f[1].method_id);
    }

    #[test]
    fn empty_method_single_line_span() {
        let src = "class A {\n  void f() {}\n}\n";
        let ast = parse(src).unwrap();
        let methods = extract_methods(&ast, &file_model(&ast), "A.java", src).unwrap();
        assert_eq!((methods[0].start_line, methods[0].end_line), (2, 2));
        assert_eq!(methods[0].text, "  void f() {}");
    }

    #[test]
    fn signature_round_trip() {
        assert_eq!(parse_signature("f(int,String)").unwrap(), ("f".into(), vec!["int".into(), "String".into()]));
        assert_eq!(parse_signature("g()").unwrap(), ("g".into(), vec![]));
        assert!(parse_signature("g(").is_err());
        assert!(parse_signature("(int)").is_err());
        assert!(parse_signature("h(int,)").is_err());
    }
}
