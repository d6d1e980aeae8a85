//! Recursive-descent parser. See `docs/grammar.md` for the accepted language.

use std::f64::consts::PI;

use thiserror::Error;

use super::{Expr, Func, Jet};

/// Parameter names accepted without declaration.
pub const DEFAULT_PARAMS: &[&str] = &[
    "eta", "alpha", "A", "B", "Q", "lambda", "xi", "zeta", "tau", "delta", "gamma", "nu", "beta", "T", "l",
    "gamma_im", "sigma", "epsilon", "kappa", "mu", "k", "C", "p", "q", "c",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Parse with the default parameter set.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &[])
}

/// Parse, additionally accepting the identifiers in `extra_params` as parameters.
pub fn parse_with(text: &str, extra_params: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, extra: extra_params };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    extra: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(Expr::Neg(self.term()?.into()));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Add(terms.into()) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = match acc {
                    Expr::Mul(xs) => {
                        let mut v = xs.to_vec();
                        v.push(rhs);
                        Expr::Mul(v.into())
                    }
                    a => Expr::Mul(vec![a, rhs].into()),
                };
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = Expr::Div(acc.into(), rhs.into());
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(self.unary()?.into()));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut is_float = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            is_float = true;
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            } else {
                is_float = true;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if !is_float {
            if let Ok(n) = text.parse::<i64>() {
                return Ok(Expr::int(n));
            }
        }
        text.parse::<f64>()
            .map(Expr::Float)
            .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            return self.call(name, start);
        }
        match name {
            "x" => return Ok(Expr::x()),
            "t" => return Ok(Expr::t()),
            "pi" => return Ok(Expr::Float(PI)),
            _ => {}
        }
        if let Some(j) = jet_name(name) {
            return Ok(Expr::jet(j));
        }
        if DEFAULT_PARAMS.contains(&name) || self.extra.contains(&name) {
            return Ok(Expr::param(name));
        }
        Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
    }

    fn call(&mut self, name: &str, start: usize) -> Result<Expr, ParseError> {
        self.pos += 1; // '('
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.err("expected `)`"));
        }
        if let Some(f) = Func::from_name(name) {
            return Ok(Expr::func(f, arg));
        }
        let a = || arg.clone();
        Ok(match name {
            "ln" => a().log(),
            "atan" => a().arctan(),
            "cot" => Expr::Div(a().cos().into(), a().sin().into()),
            "tanh" => Expr::Div(a().sinh().into(), a().cosh().into()),
            "coth" => Expr::Div(a().cosh().into(), a().sinh().into()),
            "sec" => Expr::Div(Expr::one().into(), a().cos().into()),
            "csc" => Expr::Div(Expr::one().into(), a().sin().into()),
            "sech" => Expr::Div(Expr::one().into(), a().cosh().into()),
            _ => return Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() }),
        })
    }
}

fn jet_name(name: &str) -> Option<Jet> {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some(rest) = name.strip_prefix('z') {
        if digits(rest) {
            return rest.parse().ok().map(Jet::z);
        }
    }
    if let Some(rest) = name.strip_prefix('w') {
        if digits(rest) {
            return rest.parse().ok().map(Jet::w);
        }
    }
    if let Some(rest) = name.strip_prefix('u') {
        let (a, b) = rest.split_once('_')?;
        if digits(a) && digits(b) {
            return Some(Jet { x: a.parse().ok()?, t: b.parse().ok()? });
        }
    }
    None
}
