use std::collections::{BTreeSet, HashMap};

use crate::corpus::catalog::{ParsedFile, ProjectParse};
use crate::corpus::EntityId;
use crate::featuregraph::CallResolver;
use crate::lexparse::model::{type_name, ClassModel, MethodModel};
use crate::lexparse::scope::{resolve_variables, Var};
use crate::lexparse::{Ast, MethodSource, NodeKind, TokenKind};

/// Outcome of resolving one call site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub callee: Option<EntityId>,
    pub signature: String,
    pub name: String,
    pub is_constructor: bool,
    /// Callee name token inside the caller's tree.
    pub name_node: usize,
}

#[derive(Debug)]
struct ClassEntry<'a> {
    file: usize,
    model: &'a ClassModel,
    qualified: String,
    methods: Vec<usize>,
}

#[derive(Debug)]
struct MethodEntry<'a> {
    id: EntityId,
    class: usize,
    model: &'a MethodModel,
    signature: String,
}

/// Declarations of one project, indexed for static call resolution.
#[derive(Debug)]
pub struct ProjectIndex<'a> {
    files: &'a [ParsedFile],
    classes: Vec<ClassEntry<'a>>,
    methods: Vec<MethodEntry<'a>>,
    by_qualified: HashMap<String, usize>,
    by_id: HashMap<EntityId, usize>,
}

const NUMERIC: [&str; 7] = ["byte", "short", "char", "int", "long", "float", "double"];
const BOXES: [(&str, &str); 8] = [
    ("byte", "Byte"),
    ("short", "Short"),
    ("char", "Character"),
    ("int", "Integer"),
    ("long", "Long"),
    ("float", "Float"),
    ("double", "Double"),
    ("boolean", "Boolean"),
];

fn is_primitive(ty: &str) -> bool {
    NUMERIC.contains(&ty) || ty == "boolean"
}

fn simple(ty: &str) -> &str {
    ty.rsplit('.').next().unwrap_or(ty)
}

fn widens(from: &str, to: &str) -> bool {
    let rank = |t: &str| match t {
        "byte" => Some(0),
        "short" => Some(1),
        "int" => Some(2),
        "long" => Some(3),
        "float" => Some(4),
        "double" => Some(5),
        _ => None,
    };
    if from == "char" {
        return matches!(to, "int" | "long" | "float" | "double");
    }
    match (rank(from), rank(to)) {
        (Some(a), Some(b)) => a < b && !(from != "byte" && to == "short"),
        _ => false,
    }
}

fn promote(a: &str, b: &str) -> Option<String> {
    for t in ["double", "float", "long"] {
        if a == t || b == t {
            return Some(t.to_string());
        }
    }
    (NUMERIC.contains(&a) && NUMERIC.contains(&b)).then(|| "int".to_string())
}

fn literal_type(kind: NodeKind, lexeme: &str) -> &'static str {
    match kind {
        NodeKind::StringLiteral => "String",
        NodeKind::CharLiteral => "char",
        NodeKind::BoolLiteral => "boolean",
        NodeKind::NullLiteral => "null",
        _ => {
            let lower = lexeme.to_ascii_lowercase();
            let hex = lower.starts_with("0x");
            if lower.ends_with('l') {
                "long"
            } else if !hex && lower.ends_with('f') {
                "float"
            } else if !hex && (lower.ends_with('d') || lower.contains('.') || lower.contains('e')) {
                "double"
            } else {
                "int"
            }
        }
    }
}

/// Per-method state used while resolving its call sites.
struct Scope<'m> {
    method: &'m MethodSource,
    file: usize,
    class: usize,
    vars: Vec<Option<Var>>,
}

impl<'a> ProjectIndex<'a> {
    pub fn new(project: &'a ProjectParse) -> Self {
        let mut index = ProjectIndex {
            files: &project.files,
            classes: Vec::new(),
            methods: Vec::new(),
            by_qualified: HashMap::new(),
            by_id: HashMap::new(),
        };
        for (fi, file) in project.files.iter().enumerate() {
            let package = file.model.package.clone().unwrap_or_default();
            let mut flat = file.methods.iter();
            for class in &file.model.classes {
                let ci = index.classes.len();
                let qualified = if package.is_empty() {
                    class.name.clone()
                } else {
                    format!("{package}.{}", class.name)
                };
                let mut methods = Vec::new();
                for m in &class.methods {
                    let src = flat.next().expect("one source per modelled method");
                    let mi = index.methods.len();
                    index.by_id.insert(src.method_id, mi);
                    index.methods.push(MethodEntry {
                        id: src.method_id,
                        class: ci,
                        model: m,
                        signature: src.signature.clone(),
                    });
                    methods.push(mi);
                }
                // first declaration wins on duplicate qualified names
                index.by_qualified.entry(qualified.clone()).or_insert(ci);
                index.classes.push(ClassEntry {
                    file: fi,
                    model: class,
                    qualified,
                    methods,
                });
            }
        }
        index
    }

    pub fn contains(&self, method: &EntityId) -> bool {
        self.by_id.contains_key(method)
    }

    pub fn method_name(&self, id: &EntityId) -> Option<&str> {
        self.by_id.get(id).map(|&i| self.methods[i].model.name.as_str())
    }

    pub fn param_names(&self, id: &EntityId) -> Option<Vec<String>> {
        self.by_id
            .get(id)
            .map(|&i| self.methods[i].model.params.iter().map(|p| p.name.clone()).collect())
    }

    fn scope<'m>(&self, m: &'m MethodSource) -> Option<Scope<'m>> {
        let mi = *self.by_id.get(&m.method_id)?;
        let class = self.methods[mi].class;
        let fields: Vec<String> = m.class_fields.iter().map(|f| f.name.clone()).collect();
        Some(Scope {
            method: m,
            file: self.classes[class].file,
            class,
            vars: resolve_variables(&m.ast, &fields),
        })
    }

    /// Resolves every call site of `m` in pre-order.
    pub fn resolve_method(&self, m: &MethodSource) -> Vec<Resolution> {
        let Some(scope) = self.scope(m) else {
            return Vec::new();
        };
        (0..m.ast.len())
            .filter(|&n| matches!(m.ast.kind(n), NodeKind::MethodCall | NodeKind::ObjectCreation))
            .map(|n| self.resolve_call(&scope, n))
            .collect()
    }

    pub fn resolve_site(&self, m: &MethodSource, call: usize) -> Option<Resolution> {
        let scope = self.scope(m)?;
        matches!(m.ast.kind(call), NodeKind::MethodCall | NodeKind::ObjectCreation)
            .then(|| self.resolve_call(&scope, call))
    }

    // ---- type lookup -------------------------------------------------------

    fn resolve_type(&self, file: usize, name: &str) -> Option<usize> {
        if name.is_empty() || name.ends_with(']') {
            return None;
        }
        if name.contains('.') {
            return self.by_qualified.get(name).copied();
        }
        let model = &self.files[file].model;
        let package = model.package.clone().unwrap_or_default();
        let local = self
            .classes
            .iter()
            .position(|c| c.file == file && c.model.name == name);
        if local.is_some() {
            return local;
        }
        let suffix = format!(".{name}");
        for imp in model.imports.iter().filter(|i| !i.wildcard && !i.is_static) {
            if imp.path.ends_with(&suffix) || imp.path == name {
                return self.by_qualified.get(&imp.path).copied();
            }
        }
        let same_package = if package.is_empty() {
            name.to_string()
        } else {
            format!("{package}.{name}")
        };
        if let Some(&c) = self.by_qualified.get(&same_package) {
            return Some(c);
        }
        model
            .imports
            .iter()
            .filter(|i| i.wildcard && !i.is_static)
            .find_map(|i| self.by_qualified.get(&format!("{}.{name}", i.path)).copied())
    }

    fn superclass(&self, class: usize) -> Option<usize> {
        let c = &self.classes[class];
        c.model.superclass.as_deref().and_then(|s| self.resolve_type(c.file, s))
    }

    /// `class` followed by its superclasses inside the project.
    fn chain(&self, class: usize) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut cur = Some(class);
        while let Some(c) = cur {
            if !seen.insert(c) {
                break;
            }
            out.push(c);
            cur = self.superclass(c);
        }
        out
    }

    fn is_subclass(&self, sub: usize, sup: usize) -> bool {
        self.chain(sub).contains(&sup)
    }

    fn field_type(&self, class: usize, name: &str) -> Option<String> {
        self.chain(class).into_iter().find_map(|c| {
            let entry = &self.classes[c];
            entry
                .model
                .fields
                .iter()
                .find(|f| f.name == name)
                .map(|f| self.qualify(entry.file, &f.ty))
        })
    }

    /// Rewrites a corpus class type to its qualified name; other types pass.
    fn qualify(&self, file: usize, ty: &str) -> String {
        match self.resolve_type(file, ty) {
            Some(c) => self.classes[c].qualified.clone(),
            None => ty.to_string(),
        }
    }

    // ---- overloads ---------------------------------------------------------

    /// Scores an argument against a parameter: 2 exact, 1 convertible,
    /// `None` incompatible. Unknown argument types are neutral.
    fn compat(&self, file: usize, arg: Option<&str>, param_file: usize, param: &str) -> Option<u32> {
        let Some(arg) = arg else { return Some(0) };
        let param_q = self.qualify(param_file, param);
        if arg == param_q || simple(arg) == simple(&param_q) {
            return Some(2);
        }
        if arg == "null" {
            return (!is_primitive(param)).then_some(1);
        }
        if widens(arg, param) {
            return Some(1);
        }
        if BOXES.iter().any(|&(p, b)| (arg == p && simple(param) == b) || (simple(arg) == b && param == p)) {
            return Some(1);
        }
        if simple(param) == "Object" && !is_primitive(arg) {
            return Some(1);
        }
        let (a, p) = (self.resolve_type(file, arg), self.resolve_type(param_file, param));
        match (a, p) {
            (Some(a), Some(p)) if self.is_subclass(a, p) => Some(1),
            _ => None,
        }
    }

    fn pick_overload(&self, file: usize, class: usize, name: &str, ctor: bool, args: &[Option<String>]) -> Option<usize> {
        let class_file = self.classes[class].file;
        let mut best: Option<(u32, usize)> = None;
        for &mi in &self.classes[class].methods {
            let m = self.methods[mi].model;
            if m.is_constructor != ctor || (!ctor && m.name != name) || m.params.len() != args.len() {
                continue;
            }
            let score = args.iter().zip(&m.params).try_fold(0, |acc, (a, p)| {
                self.compat(file, a.as_deref(), class_file, &p.ty).map(|s| acc + s)
            });
            if let Some(s) = score {
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, mi));
                }
            }
        }
        best.map(|(_, mi)| mi)
    }

    fn lookup_method(&self, file: usize, class: usize, name: &str, args: &[Option<String>]) -> Option<usize> {
        self.chain(class)
            .into_iter()
            .find_map(|c| self.pick_overload(file, c, name, false, args))
    }

    // ---- expression types --------------------------------------------------

    fn local_type(&self, s: &Scope, decl: usize) -> Option<String> {
        let ast = &s.method.ast;
        let owner = ast.parent[decl]?;
        let ty = match ast.kind(owner) {
            NodeKind::Parameter => {
                let name = ast.lexeme(decl)?;
                return s.method.params.iter().find(|p| p.name == name).map(|p| self.qualify(s.file, &p.ty));
            }
            NodeKind::VarDeclarator => {
                let decl_stmt = ast.parent[owner]?;
                let mut ty = type_name(ast, ast.child_of_kind(decl_stmt, NodeKind::Type)?);
                let dims = ast
                    .children(owner)
                    .iter()
                    .take_while(|&&c| ast.lexeme(c) != Some("="))
                    .filter(|&&c| ast.lexeme(c) == Some("["))
                    .count();
                ty.push_str(&"[]".repeat(dims));
                ty
            }
            _ => return None,
        };
        Some(self.qualify(s.file, &ty))
    }

    fn var_type(&self, s: &Scope, ident: usize) -> Option<String> {
        match s.vars[ident].as_ref() {
            Some(Var::Local(decl)) => self.local_type(s, *decl),
            Some(Var::Field(name)) => self.field_type(s.class, name),
            None => None,
        }
    }

    fn expr_type(&self, s: &Scope, n: usize) -> Option<String> {
        let ast = &s.method.ast;
        let kids = ast.children(n);
        match ast.kind(n) {
            NodeKind::Literal => {
                let t = kids[0];
                Some(literal_type(ast.kind(t), ast.lexeme(t)?).to_string())
            }
            NodeKind::NameExpr => {
                let id = kids[0];
                self.var_type(s, id)
                    .or_else(|| self.field_type(s.class, ast.lexeme(id)?))
            }
            NodeKind::ThisExpr => Some(self.classes[s.class].qualified.clone()),
            NodeKind::Paren => self.expr_type(s, kids[1]),
            NodeKind::FieldAccess => {
                if ast.kind(kids[0]) == NodeKind::ThisExpr {
                    return self.field_type(s.class, ast.lexeme(kids[2])?);
                }
                let recv = self.receiver_class(s, kids[0])?;
                self.field_type(recv.0, ast.lexeme(kids[2])?)
            }
            NodeKind::ArrayAccess => self.expr_type(s, kids[0])?.strip_suffix("[]").map(str::to_string),
            NodeKind::MethodCall => {
                let r = self.resolve_call(s, n);
                let mi = *self.by_id.get(&r.callee?)?;
                let m = &self.methods[mi];
                Some(self.qualify(self.classes[m.class].file, &m.model.return_type))
            }
            NodeKind::ObjectCreation => Some(self.qualify(s.file, &type_name(ast, kids[1]))),
            NodeKind::ArrayCreation => {
                let base = self.qualify(s.file, &type_name(ast, kids[1]));
                let dims = kids.iter().filter(|&&c| ast.lexeme(c) == Some("[")).count();
                Some(format!("{base}{}", "[]".repeat(dims)))
            }
            NodeKind::Assignment => self.expr_type(s, kids[0]),
            NodeKind::Conditional => self.expr_type(s, kids[2]).or_else(|| self.expr_type(s, kids[4])),
            NodeKind::Postfix => self.expr_type(s, kids[0]),
            NodeKind::Unary => {
                let op = ast.lexeme(kids[0])?;
                let inner = self.expr_type(s, kids[1])?;
                match op {
                    "!" => Some("boolean".into()),
                    "++" | "--" => Some(inner),
                    _ => promote(&inner, "int"),
                }
            }
            NodeKind::Binary => {
                let op = ast.lexeme(kids[1])?;
                match op {
                    "==" | "!=" | "<" | ">" | "<=" | ">=" | "&&" | "||" | "instanceof" => Some("boolean".into()),
                    _ => {
                        let (a, b) = (self.expr_type(s, kids[0])?, self.expr_type(s, kids[2])?);
                        if op == "+" && (simple(&a) == "String" || simple(&b) == "String") {
                            Some("String".into())
                        } else if a == "boolean" && b == "boolean" {
                            Some("boolean".into())
                        } else if matches!(op, "<<" | ">>" | ">>>") {
                            promote(&a, "int")
                        } else {
                            promote(&a, &b)
                        }
                    }
                }
            }
            _ => None,
        }
    }

    /// Dotted identifier text of a `NameExpr`/`FieldAccess` chain.
    fn dotted(ast: &Ast, n: usize) -> Option<String> {
        let mut out = String::new();
        for t in ast.terminals_in(n) {
            let tok = ast.token(t)?;
            match tok.kind {
                TokenKind::Identifier => out.push_str(&tok.lexeme),
                TokenKind::Separator if tok.lexeme == "." => out.push('.'),
                _ => return None,
            }
        }
        Some(out)
    }

    /// Corpus class a receiver expression denotes, and whether it names the
    /// type itself (a static reference) rather than a value of it.
    fn receiver_class(&self, s: &Scope, recv: usize) -> Option<(usize, bool)> {
        let ast = &s.method.ast;
        match ast.kind(recv) {
            NodeKind::ThisExpr => Some((s.class, false)),
            NodeKind::NameExpr => {
                let id = ast.children(recv)[0];
                if let Some(ty) = self.expr_type(s, recv) {
                    return self.resolve_type(s.file, &ty).map(|c| (c, false));
                }
                self.resolve_type(s.file, ast.lexeme(id)?).map(|c| (c, true))
            }
            NodeKind::FieldAccess => {
                if let Some(ty) = self.expr_type(s, recv) {
                    return self.resolve_type(s.file, &ty).map(|c| (c, false));
                }
                let text = Self::dotted(ast, recv)?;
                self.resolve_type(s.file, &text).map(|c| (c, true))
            }
            _ => {
                let ty = self.expr_type(s, recv)?;
                self.resolve_type(s.file, &ty).map(|c| (c, false))
            }
        }
    }

    fn arg_types(&self, s: &Scope, args: usize) -> Vec<Option<String>> {
        let ast = &s.method.ast;
        ast.children(args)
            .iter()
            .filter(|&&c| !ast.kind(c).is_terminal())
            .map(|&c| self.expr_type(s, c))
            .collect()
    }

    fn external_signature(qualifier: Option<&str>, name: &str, args: &[Option<String>]) -> String {
        let args: Vec<&str> = args.iter().map(|a| a.as_deref().map_or("?", simple)).collect();
        match qualifier {
            Some(q) => format!("{q}.{name}({})", args.join(",")),
            None => format!("{name}({})", args.join(",")),
        }
    }

    fn resolve_call(&self, s: &Scope, n: usize) -> Resolution {
        let ast = &s.method.ast;
        let kids = ast.children(n);
        let args_node = *kids.last().expect("call arguments");
        let args = self.arg_types(s, args_node);

        if ast.kind(n) == NodeKind::ObjectCreation {
            let ty_node = kids[1];
            let ty = type_name(ast, ty_node);
            let name_node = ast
                .terminals_in(ty_node)
                .filter(|&t| ast.kind(t) == NodeKind::Identifier)
                .last()
                .unwrap_or(ty_node);
            let name = simple(&ty).to_string();
            if let Some(c) = self.resolve_type(s.file, &ty) {
                if let Some(mi) = self.pick_overload(s.file, c, &name, true, &args) {
                    return self.resolved(mi, name_node, true);
                }
            }
            return Resolution {
                callee: None,
                signature: format!("new {}", Self::external_signature(None, &ty, &args)),
                name,
                is_constructor: true,
                name_node,
            };
        }

        let (recv, name_node) = if kids.len() == 4 { (Some(kids[0]), kids[2]) } else { (None, kids[0]) };
        let name = ast.lexeme(name_node).unwrap_or_default().to_string();
        let found = match recv {
            None => self.lookup_method(s.file, s.class, &name, &args).or_else(|| self.static_import(s, &name, &args)),
            Some(r) => self
                .receiver_class(s, r)
                .and_then(|(c, _)| self.lookup_method(s.file, c, &name, &args)),
        };
        if let Some(mi) = found {
            return self.resolved(mi, name_node, false);
        }
        let qualifier = recv.and_then(|r| {
            self.expr_type(s, r)
                .map(|t| simple(&t).to_string())
                .or_else(|| Self::dotted(ast, r))
                .or_else(|| Some(ast.text_of(r)))
        });
        Resolution {
            callee: None,
            signature: Self::external_signature(qualifier.as_deref(), &name, &args),
            name,
            is_constructor: false,
            name_node,
        }
    }

    fn static_import(&self, s: &Scope, name: &str, args: &[Option<String>]) -> Option<usize> {
        let model = &self.files[s.file].model;
        model.imports.iter().filter(|i| i.is_static).find_map(|i| {
            let class_path = if i.wildcard {
                i.path.as_str()
            } else {
                let (owner, member) = i.path.rsplit_once('.')?;
                if member != name {
                    return None;
                }
                owner
            };
            let c = *self.by_qualified.get(class_path)?;
            self.lookup_method(s.file, c, name, args)
        })
    }

    fn resolved(&self, mi: usize, name_node: usize, is_constructor: bool) -> Resolution {
        let m = &self.methods[mi];
        Resolution {
            callee: Some(m.id),
            signature: m.signature.clone(),
            name: m.model.name.clone(),
            is_constructor,
            name_node,
        }
    }
}

impl CallResolver for ProjectIndex<'_> {
    fn formal_params(&self, method: &MethodSource, call: usize) -> Option<Vec<String>> {
        let callee = self.resolve_site(method, call)?.callee?;
        self.param_names(&callee)
    }
}
