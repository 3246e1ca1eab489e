//! Recursive-descent parser for the field expression grammar. Errors carry
//! the byte offset into the source plus the derived line and column.

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken { found: String, expected: String },
    BadNumber(String),
    UnknownIdentifier(String),
    VariableOutOfRange { index: usize, dim: usize },
    WrongArity { func: String, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column} (byte {offset}): {}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character {c:?}"),
        ParseErrorKind::UnexpectedEnd => "unexpected end of input".into(),
        ParseErrorKind::UnexpectedToken { found, expected } => {
            format!("expected {expected}, found {found}")
        }
        ParseErrorKind::BadNumber(text) => format!("malformed number {text:?}"),
        ParseErrorKind::UnknownIdentifier(name) => format!("unknown identifier {name:?}"),
        ParseErrorKind::VariableOutOfRange { index, dim } => {
            format!("variable x{index} exceeds the declared dimension {dim}")
        }
        ParseErrorKind::WrongArity {
            func,
            expected,
            got,
        } => format!("{func} takes {expected} argument(s), got {got}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(name) => format!("identifier {name:?}"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Comma => "','".into(),
        }
    }
}

/// Parses `source` as an expression over variables `x1 .. x<dim>` and `t`.
pub fn parse(source: &str, dim: usize) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        source,
        tokens,
        pos: 0,
        dim,
    };
    let expr = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        let (token, offset) = &parser.tokens[parser.pos];
        return Err(parser.error_at(
            *offset,
            ParseErrorKind::UnexpectedToken {
                found: token.describe(),
                expected: "end of input".into(),
            },
        ));
    }
    Ok(expr)
}

fn lex(source: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                tokens.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            ',' => {
                tokens.push((Token::Comma, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // exponent part
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| {
                    at(source, start, ParseErrorKind::BadNumber(text.to_string()))
                })?;
                tokens.push((Token::Number(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(source[start..i].to_string()), start));
            }
            other => return Err(at(source, i, ParseErrorKind::UnexpectedChar(other))),
        }
    }
    Ok(tokens)
}

fn at(source: &str, offset: usize, kind: ParseErrorKind) -> ParseError {
    let mut line = 1;
    let mut column = 1;
    for (k, c) in source.char_indices() {
        if k >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    ParseError {
        kind,
        offset,
        line,
        column,
    }
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn error_at(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        at(self.source, offset, kind)
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let offset = self
            .tokens
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.source.len());
        self.error_at(offset, kind)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn advance(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn expect(&mut self, token: Token) -> Result<(), ParseError> {
        match self.peek() {
            Some(found) if *found == token => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(self.error_here(ParseErrorKind::UnexpectedToken {
                found: found.describe(),
                expected: token.describe(),
            })),
            None => Err(self.error_here(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            // exponent parses as unary so `2^-3` and `2^3^2` both work
            let exponent = self.unary()?;
            return Ok(Expr::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self
            .tokens
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.source.len());
        match self.advance() {
            Some(Token::Number(value)) => Ok(Expr::Literal(value)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => self.ident(&name, offset),
            Some(token) => Err(self.error_at(
                offset,
                ParseErrorKind::UnexpectedToken {
                    found: token.describe(),
                    expected: "a number, variable, function call, or '('".into(),
                },
            )),
            None => Err(self.error_at(offset, ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        if name == "t" {
            return Ok(Expr::Time);
        }
        if let Some(index_text) = name.strip_prefix('x') {
            if !index_text.is_empty() && index_text.chars().all(|c| c.is_ascii_digit()) {
                let index: usize = index_text.parse().map_err(|_| {
                    self.error_at(offset, ParseErrorKind::BadNumber(index_text.to_string()))
                })?;
                if index == 0 || index > self.dim {
                    return Err(self.error_at(
                        offset,
                        ParseErrorKind::VariableOutOfRange {
                            index,
                            dim: self.dim,
                        },
                    ));
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        if let Some(func) = Func::from_name(name) {
            self.expect(Token::LParen)?;
            let mut args = vec![self.expr()?];
            while matches!(self.peek(), Some(Token::Comma)) {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(Token::RParen)?;
            if args.len() != func.arity() {
                return Err(self.error_at(
                    offset,
                    ParseErrorKind::WrongArity {
                        func: func.name().into(),
                        expected: func.arity(),
                        got: args.len(),
                    },
                ));
            }
            return Ok(Expr::Call(func, args));
        }
        Err(self.error_at(offset, ParseErrorKind::UnknownIdentifier(name.to_string())))
    }
}
