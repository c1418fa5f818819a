//! Token-sequence representations of a method.

use super::token::{Token, TokenKind};

pub const LITCOMMA: &str = "<LITCOMMA>";
const QUOTED_COMMA: &str = "\",\"";

/// Lexemes joined by single spaces. Literals that contain spaces keep them.
pub fn tokens_tkna(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.lexeme.as_str()).collect::<Vec<_>>().join(" ")
}

/// Comma-joined lexemes. Commas inside literals become `<LITCOMMA>`; a
/// separator comma is written as the quoted item `","`.
pub fn tokens_tknb(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| {
            if t.kind == TokenKind::Separator && t.lexeme == "," {
                QUOTED_COMMA.to_string()
            } else if t.kind.is_literal() {
                t.lexeme.replace(',', LITCOMMA)
            } else {
                t.lexeme.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Splits a TKNB payload into items on unquoted commas.
pub fn split_tknb(payload: &str) -> Vec<&str> {
    if payload.is_empty() {
        return Vec::new();
    }
    let mut items = Vec::new();
    let mut rest = payload;
    loop {
        let quoted = rest.starts_with(QUOTED_COMMA)
            && (rest.len() == QUOTED_COMMA.len() || rest[QUOTED_COMMA.len()..].starts_with(','));
        let end = if quoted {
            QUOTED_COMMA.len()
        } else {
            rest.find(',').unwrap_or(rest.len())
        };
        items.push(&rest[..end]);
        if end == rest.len() {
            return items;
        }
        rest = &rest[end + 1..];
    }
}

/// Recovers the original lexemes from a TKNB payload.
pub fn decode_tknb(payload: &str) -> Vec<String> {
    split_tknb(payload)
        .into_iter()
        .map(|item| {
            if item == QUOTED_COMMA {
                ",".to_string()
            } else {
                item.replace(LITCOMMA, ",")
            }
        })
        .collect()
}
