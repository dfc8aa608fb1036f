use thiserror::Error;

use super::{BinOp, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid variable list: {0}")]
    Variables(String),
}

impl ParseError {
    /// Byte offset of the error in the source, when it has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::Variables(_) => None,
        }
    }
}

fn is_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(super) fn validate_variables(variables: &[&str]) -> Result<Vec<String>, ParseError> {
    if variables.is_empty() {
        return Err(ParseError::Variables("at least one variable is required".into()));
    }
    let mut out: Vec<String> = Vec::with_capacity(variables.len());
    for &name in variables {
        if !is_ident(name) {
            return Err(ParseError::Variables(format!("`{name}` is not an identifier")));
        }
        if Func::from_name(name).is_some() {
            return Err(ParseError::Variables(format!("`{name}` is a reserved function name")));
        }
        if out.iter().any(|v| v == name) {
            return Err(ParseError::Variables(format!("`{name}` is declared twice")));
        }
        out.push(name.to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            tokens.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut digits = 0;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
                digits += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                    digits += 1;
                }
            }
            if digits == 0 {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                let exp_start = j;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j == exp_start {
                    return Err(ParseError::Syntax {
                        offset: i,
                        message: "exponent has no digits".into(),
                    });
                }
                i = j;
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("number `{text}` is out of range"),
                });
            }
            tokens.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    tokens.push((Tok::Eof, src.len()));
    Ok(tokens)
}

pub(super) struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    cursor: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &str, vars: &'a [String]) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(src)?,
            cursor: 0,
            vars,
        })
    }

    pub(super) fn parse(mut self) -> Result<Node, ParseError> {
        let node = self.expr()?;
        match self.peek() {
            Tok::Eof => Ok(node),
            tok => Err(self.unexpected(tok.clone(), "expected operator or end of input")),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.cursor].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let tok = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        tok
    }

    fn unexpected(&self, tok: Tok, what: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("{what}, found {}", tok.describe()),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let base = self.unary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::Num(value) => {
                self.bump();
                Ok(Node::Const(value))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, offset) = self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        name: name.clone(),
                        offset,
                    })?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect_rparen()?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name,
                            offset,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    Ok(Node::Call(func, args))
                } else if let Some(index) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(index))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError::Syntax {
                        offset: self.offset(),
                        message: format!("expected `(` after function `{name}`"),
                    })
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset })
                }
            }
            tok => Err(self.unexpected(tok, "expected operand")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            tok => Err(self.unexpected(tok.clone(), "expected `)` or `,`")),
        }
    }
}
