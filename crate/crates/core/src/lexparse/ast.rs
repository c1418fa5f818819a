use std::fmt;
use std::str::FromStr;

use super::token::{Token, TokenKind};
use crate::error::Error;

macro_rules! node_kinds {
    ($($variant:ident),* $(,)?) => {
        /// Node vocabulary of the supported grammar. Terminal variants mirror
        /// [`TokenKind`]; the rest are nonterminals.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeKind {
            $($variant),*
        }

        impl NodeKind {
            pub const ALL: &'static [NodeKind] = &[$(NodeKind::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$variant => stringify!($variant)),*
                }
            }
        }

        impl FromStr for NodeKind {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s {
                    $(stringify!($variant) => Ok(NodeKind::$variant),)*
                    _ => Err(Error::InvalidArgument(format!("unknown node type `{s}`"))),
                }
            }
        }
    };
}

node_kinds! {
    // terminals
    Keyword, Identifier, IntLiteral, StringLiteral, CharLiteral, BoolLiteral, NullLiteral,
    Operator, Separator,
    // declarations
    CompilationUnit, PackageDecl, ImportDecl, QualifiedName, ClassDecl, InterfaceDecl,
    Modifiers, Annotation, ExtendsClause, ImplementsClause, ClassBody, FieldDecl, MethodDecl,
    ConstructorDecl, Parameters, Parameter, Throws, Type, TypeArguments, TypeParameters,
    TypeParameter, VarDeclarator, ArrayInit,
    // statements
    Block, LocalVarDecl, IfStmt, WhileStmt, ForStmt, ForInit, ForUpdate, Condition, ReturnStmt,
    ExprStmt, EmptyStmt,
    // expressions
    Assignment, Conditional, Binary, Unary, Postfix, Paren, Literal, NameExpr, ThisExpr,
    FieldAccess, ArrayAccess, MethodCall, Arguments, ObjectCreation, ArrayCreation,
    // feature-graph only
    FormalArgName, FieldDef,
}

impl NodeKind {
    pub fn terminal(kind: TokenKind) -> NodeKind {
        match kind {
            TokenKind::Keyword => NodeKind::Keyword,
            TokenKind::Identifier => NodeKind::Identifier,
            TokenKind::IntLiteral => NodeKind::IntLiteral,
            TokenKind::StringLiteral => NodeKind::StringLiteral,
            TokenKind::CharLiteral => NodeKind::CharLiteral,
            TokenKind::BoolLiteral => NodeKind::BoolLiteral,
            TokenKind::NullLiteral => NodeKind::NullLiteral,
            TokenKind::Operator => NodeKind::Operator,
            TokenKind::Separator => NodeKind::Separator,
        }
    }

    pub fn is_terminal(self) -> bool {
        (self as usize) <= (NodeKind::Separator as usize)
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Block
                | NodeKind::LocalVarDecl
                | NodeKind::IfStmt
                | NodeKind::WhileStmt
                | NodeKind::ForStmt
                | NodeKind::ReturnStmt
                | NodeKind::ExprStmt
                | NodeKind::EmptyStmt
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    /// Index into [`Ast::tokens`] for terminals.
    pub token: Option<usize>,
    pub line: u32,
    pub col: u32,
}

/// Pre-order indexed syntax tree. Node 0 is the root; every subtree occupies
/// a contiguous index range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub nodes: Vec<AstNode>,
    pub parent: Vec<Option<usize>>,
    pub tokens: Vec<Token>,
    children: Vec<Vec<usize>>,
    subtree_end: Vec<usize>,
}

impl Ast {
    pub fn from_parts(nodes: Vec<AstNode>, parent: Vec<Option<usize>>, tokens: Vec<Token>) -> Self {
        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let mut subtree_end: Vec<usize> = (0..n).map(|i| i + 1).collect();
        for i in (0..n).rev() {
            if let Some(p) = parent[i] {
                subtree_end[p] = subtree_end[p].max(subtree_end[i]);
            }
        }
        Ast {
            nodes,
            parent,
            tokens,
            children,
            subtree_end,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn kind(&self, n: usize) -> NodeKind {
        self.nodes[n].kind
    }

    pub fn children(&self, n: usize) -> &[usize] {
        &self.children[n]
    }

    /// Index one past the last node of the subtree rooted at `n`.
    pub fn subtree_end(&self, n: usize) -> usize {
        self.subtree_end[n]
    }

    pub fn contains(&self, ancestor: usize, n: usize) -> bool {
        ancestor <= n && n < self.subtree_end[ancestor]
    }

    pub fn token(&self, n: usize) -> Option<&Token> {
        self.nodes[n].token.map(|t| &self.tokens[t])
    }

    pub fn lexeme(&self, n: usize) -> Option<&str> {
        self.token(n).map(|t| t.lexeme.as_str())
    }

    pub fn child_of_kind(&self, n: usize, kind: NodeKind) -> Option<usize> {
        self.children[n].iter().copied().find(|&c| self.kind(c) == kind)
    }

    pub fn children_of_kind(&self, n: usize, kind: NodeKind) -> impl Iterator<Item = usize> + '_ {
        self.children[n].iter().copied().filter(move |&c| self.kind(c) == kind)
    }

    /// First identifier terminal that is a direct child of `n`.
    pub fn ident_child(&self, n: usize) -> Option<usize> {
        self.child_of_kind(n, NodeKind::Identifier)
    }

    /// Terminal node indices in source order.
    pub fn terminals(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].token.is_some()).collect()
    }

    /// Terminals inside the subtree of `n`.
    pub fn terminals_in(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (n..self.subtree_end[n]).filter(|&i| self.nodes[i].token.is_some())
    }

    /// Lexemes of the subtree joined by single spaces.
    pub fn text_of(&self, n: usize) -> String {
        self.terminals_in(n)
            .filter_map(|t| self.lexeme(t))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Edges `(parent, child)` in index order.
    pub fn child_edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i)))
            .collect()
    }

    pub fn depth(&self, mut n: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[n] {
            d += 1;
            n = p;
        }
        d
    }

    /// Copies the subtree rooted at `n` into a standalone tree whose tokens
    /// are exactly the subtree's token range.
    pub fn subtree(&self, n: usize) -> Ast {
        let end = self.subtree_end[n];
        let first_tok = (n..end).find_map(|i| self.nodes[i].token).unwrap_or(0);
        let last_tok = (n..end).rev().find_map(|i| self.nodes[i].token).unwrap_or(0);
        let tokens = if (n..end).any(|i| self.nodes[i].token.is_some()) {
            self.tokens[first_tok..=last_tok].to_vec()
        } else {
            Vec::new()
        };
        let nodes = self.nodes[n..end]
            .iter()
            .map(|node| AstNode {
                token: node.token.map(|t| t - first_tok),
                ..node.clone()
            })
            .collect();
        let parent = (n..end)
            .map(|i| if i == n { None } else { self.parent[i].map(|p| p - n) })
            .collect();
        Ast::from_parts(nodes, parent, tokens)
    }

    /// Checks the structural invariants: single root, parents precede
    /// children, and terminal leaves reproduce the token list in order.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        if self.parent[0].is_some() {
            return Err("root has a parent".into());
        }
        for i in 1..self.len() {
            match self.parent[i] {
                Some(p) if p < i => {}
                _ => return Err(format!("node {i} has no valid parent")),
            }
        }
        let mut next = 0;
        for i in 0..self.len() {
            if let Some(t) = self.nodes[i].token {
                if !self.children[i].is_empty() {
                    return Err(format!("terminal {i} has children"));
                }
                if t != next {
                    return Err(format!("terminal {i} out of order"));
                }
                next += 1;
            }
        }
        if next != self.tokens.len() {
            return Err("leaves do not cover the token list".into());
        }
        Ok(())
    }
}
