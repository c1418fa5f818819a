use super::token::{Token, TokenKind, KEYWORDS};
use crate::error::{Error, Result};

// Longest match first. `>` is never combined with a following `>` so that
// nested type arguments close one bracket per token; shift-right is outside
// the supported subset.
const OPERATORS: &[&str] = &[
    "<<=", "&&", "||", "++", "--", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "<<", "->", "=", "+", "-", "*", "/", "%", "!", "~", "&", "|", "^", "<", ">", "?",
    ":",
];

const SEPARATORS: &[&str] = &["...", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@"];

/// Splits `source` into tokens. Whitespace and comments are consumed.
pub fn lex(source: &str) -> Result<Vec<Token>> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
            out: Vec::new(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: u32, col: u32, message: impl Into<String>) -> Error {
        Error::Lex {
            line,
            col,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let (line, col) = (self.line, self.col);
            if self.rest().starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if self.rest().starts_with("/*") {
                self.bump();
                self.bump();
                loop {
                    if self.rest().starts_with("*/") {
                        self.bump();
                        self.bump();
                        break;
                    }
                    if self.bump().is_none() {
                        return Err(self.err(line, col, "unterminated block comment"));
                    }
                }
                continue;
            }
            let start = self.pos;
            let kind = if c.is_alphabetic() || c == '_' || c == '$' {
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_' || c == '$') {
                    self.bump();
                }
                match &self.src[start..self.pos] {
                    "true" | "false" => TokenKind::BoolLiteral,
                    "null" => TokenKind::NullLiteral,
                    w if KEYWORDS.contains(&w) => TokenKind::Keyword,
                    _ => TokenKind::Identifier,
                }
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.number();
                TokenKind::IntLiteral
            } else if c == '"' {
                self.quoted('"', line, col)?;
                TokenKind::StringLiteral
            } else if c == '\'' {
                self.quoted('\'', line, col)?;
                TokenKind::CharLiteral
            } else if let Some(sep) = SEPARATORS.iter().find(|s| self.rest().starts_with(**s)) {
                for _ in 0..sep.len() {
                    self.bump();
                }
                TokenKind::Separator
            } else if let Some(op) = OPERATORS.iter().find(|s| self.rest().starts_with(**s)) {
                for _ in 0..op.len() {
                    self.bump();
                }
                TokenKind::Operator
            } else {
                return Err(self.err(line, col, format!("illegal character {c:?}")));
            };
            self.out.push(Token {
                kind,
                lexeme: self.src[start..self.pos].to_string(),
                line,
                col,
            });
        }
        Ok(self.out)
    }

    fn number(&mut self) {
        if self.rest().starts_with("0x") || self.rest().starts_with("0X") {
            self.bump();
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit() || c == '_') {
                self.bump();
            }
        } else {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
                self.bump();
            }
            if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                self.bump();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
                    self.bump();
                }
            }
            if matches!(self.peek(), Some('e' | 'E')) {
                let sign = matches!(self.peek_at(1), Some('+' | '-'));
                let digit_at = if sign { 2 } else { 1 };
                if self.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                    for _ in 0..=digit_at {
                        self.bump();
                    }
                    while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        self.bump();
                    }
                }
            }
        }
        if matches!(self.peek(), Some('l' | 'L' | 'f' | 'F' | 'd' | 'D')) {
            self.bump();
        }
    }

    fn quoted(&mut self, quote: char, line: u32, col: u32) -> Result<()> {
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.err(line, col, "unterminated literal"));
                }
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.err(line, col, "unterminated literal"));
                    }
                }
                Some(c) if c == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }
}
