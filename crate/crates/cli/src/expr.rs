//! Arithmetic on real literals and `pi`, for angles written as `"7pi/4"`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor | implicit)*
//! implicit:= primary            (juxtaposition, as in `3pi` or `2(pi+1)`)
//! factor  := ('+' | '-') factor | primary
//! primary := number | "pi" | "tau" | '(' expr ')'
//! ```

use std::f64::consts::{PI, TAU};

use thiserror::Error;

pub const MAX_LEN: usize = 256;
const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("expression is empty")]
    Empty,
    #[error("expression longer than {MAX_LEN} bytes")]
    TooLong,
    #[error("unexpected {found} at byte {at}")]
    Unexpected { found: String, at: usize },
    #[error("bad number {0:?}")]
    BadNumber(String),
    #[error("parentheses nested deeper than {MAX_DEPTH}")]
    TooDeep,
    #[error("expression evaluates to {0}")]
    NotFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Const(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'(' => Token::Open,
            b')' => Token::Close,
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent, only when digits follow.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value = text
                    .parse::<f64>()
                    .map_err(|_| ExprError::BadNumber(text.to_string()))?;
                out.push((start, Token::Num(value)));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let value = match src[start..i].to_ascii_lowercase().as_str() {
                    "pi" => PI,
                    "tau" => TAU,
                    other => {
                        return Err(ExprError::Unexpected {
                            found: format!("name {other:?}"),
                            at: start,
                        })
                    }
                };
                out.push((start, Token::Const(value)));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ExprError::Unexpected {
                    found: format!("{ch:?}"),
                    at: i,
                });
            }
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    depth: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    fn unexpected(&self) -> ExprError {
        match self.tokens.get(self.pos) {
            Some(&(at, tok)) => ExprError::Unexpected {
                found: format!("{tok:?}"),
                at,
            },
            None => ExprError::Unexpected {
                found: "end of input".into(),
                at: self.len,
            },
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    value += self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut value = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    value *= self.factor()?;
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    value /= self.factor()?;
                }
                Some(Token::Num(_) | Token::Const(_) | Token::Open) => value *= self.primary()?,
                _ => return Ok(value),
            }
        }
    }

    fn factor(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(Token::Plus) | Some(Token::Minus) => {
                let negate = self.peek() == Some(Token::Minus);
                self.enter()?;
                self.pos += 1;
                let v = self.factor()?;
                self.depth -= 1;
                Ok(if negate { -v } else { v })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(Token::Num(v)) | Some(Token::Const(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Token::Open) => {
                self.enter()?;
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(Token::Close) {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                self.depth -= 1;
                Ok(v)
            }
            _ => Err(self.unexpected()),
        }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(ExprError::TooDeep)
        } else {
            Ok(())
        }
    }
}

/// Evaluate an angle expression such as `"7pi/4"`, `"-pi/2"` or `"1.5"`.
pub fn parse_angle(src: &str) -> Result<f64, ExprError> {
    if src.len() > MAX_LEN {
        return Err(ExprError::TooLong);
    }
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(ExprError::Empty);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
        len: src.len(),
    };
    let value = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.unexpected());
    }
    if !value.is_finite() {
        return Err(ExprError::NotFinite(value));
    }
    Ok(value)
}
