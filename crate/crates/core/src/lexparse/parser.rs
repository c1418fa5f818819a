//! Recursive-descent parser for the supported Java-like subset.
//!
//! Unsupported constructs (lambdas, anonymous classes, try/catch, switch,
//! break/continue, enhanced for, casts, shift-right) produce a syntax error.
//! Generic type arguments are kept as terminals under `TypeArguments` so the
//! leaves still reproduce the token stream; they are erased from type names.

use super::ast::{Ast, AstNode, NodeKind};
use super::lexer::lex;
use super::token::{Token, TokenKind, PRIMITIVE_TYPES};
use crate::error::{Error, Result};

const MODIFIERS: &[&str] = &[
    "public", "protected", "private", "static", "final", "abstract", "synchronized", "native",
    "transient", "volatile", "strictfp", "default",
];

const UNSUPPORTED_STATEMENTS: &[&str] = &[
    "switch", "try", "do", "throw", "break", "continue", "synchronized", "assert", "class",
    "interface", "enum", "case", "catch", "finally",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<="];

const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">=", "instanceof"],
    &["<<"],
    &["+", "-"],
    &["*", "/", "%"],
];

#[derive(Debug)]
struct Tree {
    kind: NodeKind,
    token: Option<usize>,
    children: Vec<Tree>,
}

impl Tree {
    fn new(kind: NodeKind) -> Self {
        Tree {
            kind,
            token: None,
            children: Vec::new(),
        }
    }

    fn with(kind: NodeKind, children: Vec<Tree>) -> Self {
        Tree {
            kind,
            token: None,
            children,
        }
    }

    fn push(&mut self, child: Tree) {
        self.children.push(child);
    }
}

/// Lexes and parses a compilation unit.
pub fn parse(source: &str) -> Result<Ast> {
    let tokens = lex(source)?;
    parse_tokens(tokens)
}

pub fn parse_tokens(tokens: Vec<Token>) -> Result<Ast> {
    let mut p = Parser { toks: &tokens, pos: 0 };
    let tree = p.compilation_unit()?;
    Ok(flatten(tree, tokens))
}

/// Parses a single statement; handy for inspecting small fragments.
pub fn parse_statement(source: &str) -> Result<Ast> {
    let tokens = lex(source)?;
    let mut p = Parser { toks: &tokens, pos: 0 };
    let tree = p.statement()?;
    p.expect_eof()?;
    Ok(flatten(tree, tokens))
}

fn flatten(tree: Tree, tokens: Vec<Token>) -> Ast {
    let mut nodes = Vec::new();
    let mut parent = Vec::new();
    let mut stack = vec![(tree, None::<usize>)];
    while let Some((t, par)) = stack.pop() {
        let idx = nodes.len();
        nodes.push(AstNode {
            kind: t.kind,
            token: t.token,
            line: 0,
            col: 0,
        });
        parent.push(par);
        for child in t.children.into_iter().rev() {
            stack.push((child, Some(idx)));
        }
    }
    // Nonterminals take the position of their first terminal.
    let mut first: Vec<Option<(u32, u32)>> = vec![None; nodes.len()];
    for i in (0..nodes.len()).rev() {
        if let Some(t) = nodes[i].token {
            first[i] = Some((tokens[t].line, tokens[t].col));
        }
        if let (Some(pos), Some(p)) = (first[i], parent[i]) {
            first[p] = Some(match first[p] {
                Some(q) if q < pos => q,
                _ => pos,
            });
        }
    }
    for (node, pos) in nodes.iter_mut().zip(first) {
        let (line, col) = pos.unwrap_or((0, 0));
        node.line = line;
        node.col = col;
    }
    Ast::from_parts(nodes, parent, tokens)
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + n)
    }

    fn at_sep(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_sep(s))
    }

    fn at_op(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(s))
    }

    fn at_kw(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(s))
    }

    fn at_kind(&self, k: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == k)
    }

    fn error(&self, expected: &str) -> Error {
        match self.peek() {
            Some(t) => Error::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected {expected}, found `{}`", t.lexeme),
            },
            None => {
                let (line, col) = self.toks.last().map(|t| (t.line, t.col)).unwrap_or((1, 1));
                Error::Syntax {
                    line,
                    col,
                    message: format!("expected {expected}, found end of input"),
                }
            }
        }
    }

    fn unsupported(&self, what: &str) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.map_or(1, |t| t.line),
            col: t.map_or(1, |t| t.col),
            message: format!("unsupported construct: {what}"),
        }
    }

    fn leaf(&mut self) -> Tree {
        let t = &self.toks[self.pos];
        let tree = Tree {
            kind: NodeKind::terminal(t.kind),
            token: Some(self.pos),
            children: Vec::new(),
        };
        self.pos += 1;
        tree
    }

    fn expect_sep(&mut self, s: &str) -> Result<Tree> {
        if self.at_sep(s) {
            Ok(self.leaf())
        } else {
            Err(self.error(&format!("`{s}`")))
        }
    }

    fn expect_op(&mut self, s: &str) -> Result<Tree> {
        if self.at_op(s) {
            Ok(self.leaf())
        } else {
            Err(self.error(&format!("`{s}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<Tree> {
        if self.at_kind(TokenKind::Identifier) {
            Ok(self.leaf())
        } else {
            Err(self.error("identifier"))
        }
    }

    fn expect_eof(&self) -> Result<()> {
        if self.peek().is_some() {
            Err(self.error("end of input"))
        } else {
            Ok(())
        }
    }

    // ---- declarations ------------------------------------------------------

    fn compilation_unit(&mut self) -> Result<Tree> {
        let mut unit = Tree::new(NodeKind::CompilationUnit);
        if self.at_kw("package") {
            let mut decl = Tree::with(NodeKind::PackageDecl, vec![self.leaf()]);
            decl.push(self.qualified_name()?);
            decl.push(self.expect_sep(";")?);
            unit.push(decl);
        }
        while self.at_kw("import") {
            let mut decl = Tree::with(NodeKind::ImportDecl, vec![self.leaf()]);
            if self.at_kw("static") {
                decl.push(self.leaf());
            }
            decl.push(self.qualified_name()?);
            if self.at_sep(".") && self.peek_at(1).is_some_and(|t| t.is_op("*")) {
                decl.push(self.leaf());
                decl.push(self.leaf());
            }
            decl.push(self.expect_sep(";")?);
            unit.push(decl);
        }
        while self.peek().is_some() {
            if self.at_sep(";") {
                unit.push(self.leaf());
                continue;
            }
            let modifiers = self.modifiers()?;
            unit.push(self.type_decl(modifiers)?);
        }
        Ok(unit)
    }

    fn qualified_name(&mut self) -> Result<Tree> {
        let mut name = Tree::with(NodeKind::QualifiedName, vec![self.expect_ident()?]);
        while self.at_sep(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            name.push(self.leaf());
            name.push(self.leaf());
        }
        Ok(name)
    }

    fn modifiers(&mut self) -> Result<Option<Tree>> {
        let mut mods = Tree::new(NodeKind::Modifiers);
        loop {
            if self.at_sep("@") && !self.peek_at(1).is_some_and(|t| t.is_keyword("interface")) {
                let mut ann = Tree::with(NodeKind::Annotation, vec![self.leaf()]);
                ann.push(self.qualified_name()?);
                if self.at_sep("(") {
                    ann.push(self.arguments()?);
                }
                mods.push(ann);
            } else if self
                .peek()
                .is_some_and(|t| t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.lexeme.as_str()))
            {
                mods.push(self.leaf());
            } else {
                break;
            }
        }
        Ok((!mods.children.is_empty()).then_some(mods))
    }

    fn type_decl(&mut self, modifiers: Option<Tree>) -> Result<Tree> {
        let kind = if self.at_kw("class") {
            NodeKind::ClassDecl
        } else if self.at_kw("interface") {
            NodeKind::InterfaceDecl
        } else if self.at_kw("enum") || self.at_sep("@") {
            return Err(self.unsupported("enum or annotation type"));
        } else {
            return Err(self.error("`class` or `interface`"));
        };
        let mut decl = Tree::new(kind);
        decl.children.extend(modifiers);
        decl.push(self.leaf());
        let name = self.expect_ident()?;
        let class_name = self.toks[name.token.unwrap()].lexeme.clone();
        decl.push(name);
        if self.at_op("<") {
            decl.push(self.type_parameters()?);
        }
        if self.at_kw("extends") {
            let mut ext = Tree::with(NodeKind::ExtendsClause, vec![self.leaf()]);
            ext.push(self.ty()?);
            while kind == NodeKind::InterfaceDecl && self.at_sep(",") {
                ext.push(self.leaf());
                ext.push(self.ty()?);
            }
            decl.push(ext);
        }
        if self.at_kw("implements") {
            let mut imp = Tree::with(NodeKind::ImplementsClause, vec![self.leaf()]);
            imp.push(self.ty()?);
            while self.at_sep(",") {
                imp.push(self.leaf());
                imp.push(self.ty()?);
            }
            decl.push(imp);
        }
        decl.push(self.class_body(&class_name)?);
        Ok(decl)
    }

    fn class_body(&mut self, class_name: &str) -> Result<Tree> {
        let mut body = Tree::with(NodeKind::ClassBody, vec![self.expect_sep("{")?]);
        loop {
            if self.at_sep("}") {
                body.push(self.leaf());
                return Ok(body);
            }
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            if self.at_sep(";") {
                body.push(self.leaf());
                continue;
            }
            let modifiers = self.modifiers()?;
            body.push(self.member(modifiers, class_name)?);
        }
    }

    fn member(&mut self, modifiers: Option<Tree>, class_name: &str) -> Result<Tree> {
        if self.at_kw("class") || self.at_kw("interface") || self.at_kw("enum") {
            return self.type_decl(modifiers);
        }
        if self.at_sep("{") {
            return Err(self.unsupported("initializer block"));
        }
        let type_params = if self.at_op("<") {
            Some(self.type_parameters()?)
        } else {
            None
        };
        // Constructor: Name '('
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier && t.lexeme == class_name)
            && self.peek_at(1).is_some_and(|t| t.is_sep("("))
        {
            let mut ctor = Tree::new(NodeKind::ConstructorDecl);
            ctor.children.extend(modifiers);
            ctor.children.extend(type_params);
            ctor.push(self.leaf());
            ctor.push(self.parameters()?);
            if self.at_kw("throws") {
                ctor.push(self.throws()?);
            }
            ctor.push(self.block()?);
            return Ok(ctor);
        }
        let ty = if self.at_kw("void") {
            Tree::with(NodeKind::Type, vec![self.leaf()])
        } else {
            self.ty()?
        };
        let name = self.expect_ident()?;
        if self.at_sep("(") {
            let mut method = Tree::new(NodeKind::MethodDecl);
            method.children.extend(modifiers);
            method.children.extend(type_params);
            method.push(ty);
            method.push(name);
            method.push(self.parameters()?);
            if self.at_kw("throws") {
                method.push(self.throws()?);
            }
            if self.at_sep(";") {
                method.push(self.leaf());
            } else {
                method.push(self.block()?);
            }
            return Ok(method);
        }
        if type_params.is_some() {
            return Err(self.error("`(`"));
        }
        let mut field = Tree::new(NodeKind::FieldDecl);
        field.children.extend(modifiers);
        field.push(ty);
        field.push(self.var_declarator_rest(name)?);
        while self.at_sep(",") {
            field.push(self.leaf());
            let name = self.expect_ident()?;
            field.push(self.var_declarator_rest(name)?);
        }
        field.push(self.expect_sep(";")?);
        Ok(field)
    }

    fn parameters(&mut self) -> Result<Tree> {
        let mut params = Tree::with(NodeKind::Parameters, vec![self.expect_sep("(")?]);
        if !self.at_sep(")") {
            loop {
                let mut param = Tree::new(NodeKind::Parameter);
                param.children.extend(self.modifiers()?);
                param.push(self.ty()?);
                if self.at_sep("...") {
                    param.push(self.leaf());
                }
                param.push(self.expect_ident()?);
                params.push(param);
                if self.at_sep(",") {
                    params.push(self.leaf());
                } else {
                    break;
                }
            }
        }
        params.push(self.expect_sep(")")?);
        Ok(params)
    }

    fn throws(&mut self) -> Result<Tree> {
        let mut t = Tree::with(NodeKind::Throws, vec![self.leaf()]);
        t.push(self.ty()?);
        while self.at_sep(",") {
            t.push(self.leaf());
            t.push(self.ty()?);
        }
        Ok(t)
    }

    fn type_parameters(&mut self) -> Result<Tree> {
        let mut tp = Tree::with(NodeKind::TypeParameters, vec![self.expect_op("<")?]);
        loop {
            let mut param = Tree::with(NodeKind::TypeParameter, vec![self.expect_ident()?]);
            if self.at_kw("extends") {
                param.push(self.leaf());
                param.push(self.ty()?);
                while self.at_op("&") {
                    param.push(self.leaf());
                    param.push(self.ty()?);
                }
            }
            tp.push(param);
            if self.at_sep(",") {
                tp.push(self.leaf());
            } else {
                break;
            }
        }
        tp.push(self.expect_op(">")?);
        Ok(tp)
    }

    fn ty(&mut self) -> Result<Tree> {
        let mut ty = Tree::new(NodeKind::Type);
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && PRIMITIVE_TYPES.contains(&t.lexeme.as_str()))
        {
            ty.push(self.leaf());
        } else {
            ty.push(self.expect_ident()?);
            if self.at_op("<") {
                ty.push(self.type_arguments()?);
            }
            while self.at_sep(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
                ty.push(self.leaf());
                ty.push(self.leaf());
                if self.at_op("<") {
                    ty.push(self.type_arguments()?);
                }
            }
        }
        while self.at_sep("[") && self.peek_at(1).is_some_and(|t| t.is_sep("]")) {
            ty.push(self.leaf());
            ty.push(self.leaf());
        }
        Ok(ty)
    }

    fn type_arguments(&mut self) -> Result<Tree> {
        let mut args = Tree::with(NodeKind::TypeArguments, vec![self.expect_op("<")?]);
        if self.at_op(">") {
            args.push(self.leaf());
            return Ok(args);
        }
        loop {
            if self.at_op("?") {
                args.push(self.leaf());
                if self.at_kw("extends") || self.at_kw("super") {
                    args.push(self.leaf());
                    args.push(self.ty()?);
                }
            } else {
                args.push(self.ty()?);
            }
            if self.at_sep(",") {
                args.push(self.leaf());
            } else {
                break;
            }
        }
        args.push(self.expect_op(">")?);
        Ok(args)
    }

    fn var_declarator_rest(&mut self, name: Tree) -> Result<Tree> {
        let mut decl = Tree::with(NodeKind::VarDeclarator, vec![name]);
        while self.at_sep("[") && self.peek_at(1).is_some_and(|t| t.is_sep("]")) {
            decl.push(self.leaf());
            decl.push(self.leaf());
        }
        if self.at_op("=") {
            decl.push(self.leaf());
            if self.at_sep("{") {
                decl.push(self.array_init()?);
            } else {
                decl.push(self.expression()?);
            }
        }
        Ok(decl)
    }

    fn array_init(&mut self) -> Result<Tree> {
        let mut init = Tree::with(NodeKind::ArrayInit, vec![self.expect_sep("{")?]);
        while !self.at_sep("}") {
            if self.at_sep("{") {
                init.push(self.array_init()?);
            } else {
                init.push(self.expression()?);
            }
            if self.at_sep(",") {
                init.push(self.leaf());
            } else {
                break;
            }
        }
        init.push(self.expect_sep("}")?);
        Ok(init)
    }

    // ---- statements --------------------------------------------------------

    fn block(&mut self) -> Result<Tree> {
        let mut block = Tree::with(NodeKind::Block, vec![self.expect_sep("{")?]);
        loop {
            if self.at_sep("}") {
                block.push(self.leaf());
                return Ok(block);
            }
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            block.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Tree> {
        let Some(tok) = self.peek() else {
            return Err(self.error("statement"));
        };
        if tok.is_sep("{") {
            return self.block();
        }
        if tok.is_sep(";") {
            return Ok(Tree::with(NodeKind::EmptyStmt, vec![self.leaf()]));
        }
        if tok.kind == TokenKind::Keyword {
            match tok.lexeme.as_str() {
                "if" => {
                    let mut stmt = Tree::with(NodeKind::IfStmt, vec![self.leaf()]);
                    stmt.push(self.paren_condition()?);
                    stmt.push(self.statement()?);
                    if self.at_kw("else") {
                        stmt.push(self.leaf());
                        stmt.push(self.statement()?);
                    }
                    return Ok(stmt);
                }
                "while" => {
                    let mut stmt = Tree::with(NodeKind::WhileStmt, vec![self.leaf()]);
                    stmt.push(self.paren_condition()?);
                    stmt.push(self.statement()?);
                    return Ok(stmt);
                }
                "for" => return self.for_statement(),
                "return" => {
                    let mut stmt = Tree::with(NodeKind::ReturnStmt, vec![self.leaf()]);
                    if !self.at_sep(";") {
                        stmt.push(self.expression()?);
                    }
                    stmt.push(self.expect_sep(";")?);
                    return Ok(stmt);
                }
                kw if UNSUPPORTED_STATEMENTS.contains(&kw) => {
                    return Err(self.unsupported(&format!("`{kw}` statement")));
                }
                _ => {}
            }
        }
        if let Some(decl) = self.try_local_decl()? {
            let mut decl = decl;
            decl.push(self.expect_sep(";")?);
            return Ok(decl);
        }
        let expr = self.expression()?;
        let semi = self.expect_sep(";")?;
        Ok(Tree::with(NodeKind::ExprStmt, vec![expr, semi]))
    }

    fn paren_condition(&mut self) -> Result<Tree> {
        let open = self.expect_sep("(")?;
        let expr = self.expression()?;
        let close = self.expect_sep(")")?;
        Ok(Tree::with(NodeKind::Condition, vec![open, expr, close]))
    }

    fn for_statement(&mut self) -> Result<Tree> {
        let mut stmt = Tree::with(NodeKind::ForStmt, vec![self.leaf()]);
        stmt.push(self.expect_sep("(")?);
        if !self.at_sep(";") {
            let mut init = Tree::new(NodeKind::ForInit);
            if let Some(decl) = self.try_local_decl()? {
                if self.at_op(":") {
                    return Err(self.unsupported("enhanced for loop"));
                }
                init.push(decl);
            } else {
                init.push(self.expression()?);
                while self.at_sep(",") {
                    init.push(self.leaf());
                    init.push(self.expression()?);
                }
            }
            stmt.push(init);
        }
        stmt.push(self.expect_sep(";")?);
        if !self.at_sep(";") {
            stmt.push(Tree::with(NodeKind::Condition, vec![self.expression()?]));
        }
        stmt.push(self.expect_sep(";")?);
        if !self.at_sep(")") {
            let mut update = Tree::with(NodeKind::ForUpdate, vec![self.expression()?]);
            while self.at_sep(",") {
                update.push(self.leaf());
                update.push(self.expression()?);
            }
            stmt.push(update);
        }
        stmt.push(self.expect_sep(")")?);
        stmt.push(self.statement()?);
        Ok(stmt)
    }

    /// Speculatively parses `[mods] Type name ...` without the trailing `;`.
    fn try_local_decl(&mut self) -> Result<Option<Tree>> {
        let start = self.pos;
        let modifiers = self.modifiers()?;
        let starts_type = self.peek().is_some_and(|t| {
            t.kind == TokenKind::Identifier
                || (t.kind == TokenKind::Keyword && PRIMITIVE_TYPES.contains(&t.lexeme.as_str()))
        });
        if starts_type {
            if let Ok(ty) = self.ty() {
                let is_decl = self.at_kind(TokenKind::Identifier)
                    && self.peek_at(1).is_some_and(|t| {
                        t.is_op("=") || t.is_sep(";") || t.is_sep(",") || t.is_sep("[") || t.is_op(":")
                    });
                if is_decl {
                    let mut decl = Tree::new(NodeKind::LocalVarDecl);
                    decl.children.extend(modifiers);
                    decl.push(ty);
                    let name = self.expect_ident()?;
                    if self.at_op(":") {
                        return Ok(Some(decl));
                    }
                    decl.push(self.var_declarator_rest(name)?);
                    while self.at_sep(",") {
                        decl.push(self.leaf());
                        let name = self.expect_ident()?;
                        decl.push(self.var_declarator_rest(name)?);
                    }
                    return Ok(Some(decl));
                }
            }
        }
        if modifiers.is_some() {
            return Err(self.error("local variable declaration"));
        }
        self.pos = start;
        Ok(None)
    }

    // ---- expressions -------------------------------------------------------

    fn expression(&mut self) -> Result<Tree> {
        let lhs = self.conditional()?;
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Operator && ASSIGN_OPS.contains(&t.lexeme.as_str()))
        {
            if !matches!(
                lhs.kind,
                NodeKind::NameExpr | NodeKind::FieldAccess | NodeKind::ArrayAccess
            ) {
                return Err(self.error("assignable expression"));
            }
            let op = self.leaf();
            let rhs = self.expression()?;
            return Ok(Tree::with(NodeKind::Assignment, vec![lhs, op, rhs]));
        }
        if self.at_op("->") {
            return Err(self.unsupported("lambda expression"));
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> Result<Tree> {
        let cond = self.binary(0)?;
        if self.at_op("?") {
            let q = self.leaf();
            let then = self.expression()?;
            let colon = self.expect_op(":")?;
            let other = self.conditional()?;
            return Ok(Tree::with(NodeKind::Conditional, vec![cond, q, then, colon, other]));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> Result<Tree> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(t) = self.peek() {
            let matches = BINARY_LEVELS[level].contains(&t.lexeme.as_str())
                && (t.kind == TokenKind::Operator || t.is_keyword("instanceof"));
            if !matches {
                break;
            }
            // `a > > b` would be a split shift-right.
            if t.is_op(">") && self.peek_at(1).is_some_and(|n| n.is_op(">")) {
                return Err(self.unsupported("shift-right operator"));
            }
            let is_instanceof = t.is_keyword("instanceof");
            let op = self.leaf();
            let rhs = if is_instanceof {
                self.ty()?
            } else {
                self.binary(level + 1)?
            };
            lhs = Tree::with(NodeKind::Binary, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Tree> {
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Operator && ["+", "-", "!", "~", "++", "--"].contains(&t.lexeme.as_str()))
        {
            let op = self.leaf();
            let operand = self.unary()?;
            return Ok(Tree::with(NodeKind::Unary, vec![op, operand]));
        }
        let mut expr = self.primary()?;
        loop {
            if self.at_sep(".") {
                let dot = self.leaf();
                if self.at_op("<") {
                    return Err(self.unsupported("explicit generic invocation"));
                }
                let name = self.expect_ident()?;
                if self.at_sep("(") {
                    let args = self.arguments()?;
                    expr = Tree::with(NodeKind::MethodCall, vec![expr, dot, name, args]);
                } else {
                    expr = Tree::with(NodeKind::FieldAccess, vec![expr, dot, name]);
                }
            } else if self.at_sep("[") {
                let open = self.leaf();
                let index = self.expression()?;
                let close = self.expect_sep("]")?;
                expr = Tree::with(NodeKind::ArrayAccess, vec![expr, open, index, close]);
            } else if self.at_op("++") || self.at_op("--") {
                let op = self.leaf();
                expr = Tree::with(NodeKind::Postfix, vec![expr, op]);
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> Result<Tree> {
        let Some(t) = self.peek() else {
            return Err(self.error("expression"));
        };
        match t.kind {
            k if k.is_literal() => Ok(Tree::with(NodeKind::Literal, vec![self.leaf()])),
            TokenKind::Identifier => {
                let name = self.leaf();
                if self.at_sep("(") {
                    let args = self.arguments()?;
                    Ok(Tree::with(NodeKind::MethodCall, vec![name, args]))
                } else if self.at_op("->") {
                    Err(self.unsupported("lambda expression"))
                } else {
                    Ok(Tree::with(NodeKind::NameExpr, vec![name]))
                }
            }
            TokenKind::Keyword if t.lexeme == "this" => {
                if self.peek_at(1).is_some_and(|n| n.is_sep("(")) {
                    return Err(self.unsupported("explicit constructor invocation"));
                }
                Ok(Tree::with(NodeKind::ThisExpr, vec![self.leaf()]))
            }
            TokenKind::Keyword if t.lexeme == "new" => self.creation(),
            TokenKind::Keyword if t.lexeme == "super" => Err(self.unsupported("`super`")),
            TokenKind::Separator if t.lexeme == "(" => {
                let open = self.leaf();
                let inner = self.expression()?;
                let close = self.expect_sep(")")?;
                if self.peek().is_some_and(|n| {
                    matches!(n.kind, TokenKind::Identifier) || n.kind.is_literal() || n.is_sep("(")
                }) {
                    return Err(self.unsupported("cast expression"));
                }
                Ok(Tree::with(NodeKind::Paren, vec![open, inner, close]))
            }
            _ => Err(self.error("expression")),
        }
    }

    fn creation(&mut self) -> Result<Tree> {
        let new_kw = self.leaf();
        let ty = self.ty_without_dims()?;
        if self.at_sep("(") {
            let args = self.arguments()?;
            if self.at_sep("{") {
                return Err(self.unsupported("anonymous class"));
            }
            return Ok(Tree::with(NodeKind::ObjectCreation, vec![new_kw, ty, args]));
        }
        if self.at_sep("[") {
            let mut arr = Tree::with(NodeKind::ArrayCreation, vec![new_kw, ty]);
            let mut sized = false;
            while self.at_sep("[") {
                arr.push(self.leaf());
                if !self.at_sep("]") {
                    arr.push(self.expression()?);
                    sized = true;
                }
                arr.push(self.expect_sep("]")?);
            }
            if !sized {
                arr.push(self.array_init()?);
            }
            return Ok(arr);
        }
        Err(self.error("`(` or `[`"))
    }

    fn ty_without_dims(&mut self) -> Result<Tree> {
        let mut ty = Tree::new(NodeKind::Type);
        if self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && PRIMITIVE_TYPES.contains(&t.lexeme.as_str()))
        {
            ty.push(self.leaf());
            return Ok(ty);
        }
        ty.push(self.expect_ident()?);
        if self.at_op("<") {
            ty.push(self.type_arguments()?);
        }
        while self.at_sep(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            ty.push(self.leaf());
            ty.push(self.leaf());
            if self.at_op("<") {
                ty.push(self.type_arguments()?);
            }
        }
        Ok(ty)
    }

    fn arguments(&mut self) -> Result<Tree> {
        let mut args = Tree::with(NodeKind::Arguments, vec![self.expect_sep("(")?]);
        if !self.at_sep(")") {
            loop {
                args.push(self.expression()?);
                if self.at_sep(",") {
                    args.push(self.leaf());
                } else {
                    break;
                }
            }
        }
        args.push(self.expect_sep(")")?);
        Ok(args)
    }
}
