//! Lexing, parsing and the plain-text/token representations.

pub mod ast;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod repr;
pub mod scope;
pub mod token;

pub use ast::{Ast, AstNode, NodeKind};
pub use lexer::lex;
pub use model::{
    extract_methods, file_model, format_signature, parse_signature, slice_lines, FileModel,
    MethodSource, Param,
};
pub use parser::{parse, parse_statement, parse_tokens};
pub use repr::{decode_tknb, split_tknb, tokens_tkna, tokens_tknb};
pub use token::{Token, TokenKind};

/// Space-separated tokens of a method.
pub fn method_tkna(m: &MethodSource) -> String {
    tokens_tkna(&m.ast.tokens)
}

/// Comma-separated tokens of a method.
pub fn method_tknb(m: &MethodSource) -> String {
    tokens_tknb(&m.ast.tokens)
}
