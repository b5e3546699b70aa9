//! Closed-form coefficient expressions.
//!
//! The grammar covers numeric constants, `pi`, the state coordinates
//! `x1, x2, ...` (plain `x` is an alias for `x1`), the operators `+ - * / ^`,
//! `exp(.)`, `abs(.)`, `clamp(v, lo, hi)` and absolute-value bars. Inside bars
//! the bare symbol `x` denotes the Euclidean norm of the whole state, so
//! `1 + |x|^2` reads the same in every dimension.
//!
//! ```
//! use feller_core::expr::Expr;
//! let e: Expr = "1 + |x|^1.5".parse().unwrap();
//! assert_eq!(e.eval(&[-4.0]), 9.0);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Norm,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Abs(Box<Node>),
    Clamp(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Node::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => {
                let base = a.eval(x);
                let e = b.eval(x);
                if e.fract() == 0.0 && e.abs() < 64.0 {
                    base.powi(e as i32)
                } else {
                    base.powf(e)
                }
            }
            Node::Exp(a) => a.eval(x).exp(),
            Node::Abs(a) => a.eval(x).abs(),
            Node::Clamp(v, lo, hi) => {
                let (v, lo, hi) = (v.eval(x), lo.eval(x), hi.eval(x));
                v.max(lo).min(hi)
            }
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) | Node::Norm => None,
            Node::Neg(a) | Node::Exp(a) | Node::Abs(a) => a.max_var(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.max_var().max(b.max_var()),
            Node::Clamp(a, b, c) => a.max_var().max(b.max_var()).max(c.max_var()),
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Node::Const(_) => true,
            Node::Var(_) | Node::Norm => false,
            Node::Neg(a) | Node::Exp(a) | Node::Abs(a) => a.is_constant(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.is_constant() && b.is_constant(),
            Node::Clamp(a, b, c) => a.is_constant() && b.is_constant() && c.is_constant(),
        }
    }
}

/// A parsed coefficient expression. Keeps its source text so configs
/// serialize back to exactly what was written.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            bar_depth: 0,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            let (off, _) = p.tokens[p.pos];
            return Err(Error::Expr {
                offset: off,
                message: "unexpected trailing input".into(),
            });
        }
        Ok(Expr {
            source: src.to_string(),
            root,
        })
    }

    pub fn constant(c: f64) -> Self {
        Expr {
            source: format!("{c}"),
            root: Node::Const(c),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the expression does not reference the state.
    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// Fails if the expression references a coordinate beyond `dim`.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        match self.root.max_var() {
            Some(i) if i >= dim => Err(Error::Config(format!(
                "expression `{}` references x{} but the state has dimension {dim}",
                self.source,
                i + 1
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl TryFrom<String> for Expr {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Expr::parse(&s)
    }
}

impl From<Expr> for String {
    fn from(e: Expr) -> String {
        e.source
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part: 1e-3, 2.5E+4
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let text = &src[chars[start].0..end];
            let v: f64 = text.parse().map_err(|_| Error::Expr {
                offset: off,
                message: format!("bad number `{text}`"),
            })?;
            out.push((off, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            out.push((off, Tok::Ident(src[chars[start].0..end].to_string())));
        } else if "+-*/^(),|".contains(c) {
            out.push((off, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Expr {
                offset: off,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    bar_depth: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or_else(|| self.tokens.last().map_or(0, |t| t.0 + 1), |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expr {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let saved = std::mem::replace(&mut self.bar_depth, 0);
                let inner = self.expr()?;
                self.bar_depth = saved;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op('|') => {
                if self.bar_depth > 0 {
                    return self.err("nested absolute value bars need parentheses");
                }
                self.pos += 1;
                // |x| is the Euclidean norm of the state
                if self.peek() == Some(&Tok::Ident("x".into()))
                    && self.tokens.get(self.pos + 1).map(|t| &t.1) == Some(&Tok::Op('|'))
                {
                    self.pos += 2;
                    return Ok(Node::Norm);
                }
                self.bar_depth += 1;
                let inner = self.expr()?;
                self.bar_depth -= 1;
                self.expect('|')?;
                Ok(Node::Abs(Box::new(inner)))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                self.ident(&name)
            }
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
        }
    }

    fn args(&mut self, n: usize, name: &str) -> Result<Vec<Node>> {
        self.expect('(')?;
        let saved = std::mem::replace(&mut self.bar_depth, 0);
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.bar_depth = saved;
        self.expect(')')?;
        if out.len() != n {
            return self.err(format!("`{name}` takes {n} argument(s), got {}", out.len()));
        }
        Ok(out)
    }

    fn ident(&mut self, name: &str) -> Result<Node> {
        match name {
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "x" => Ok(Node::Var(0)),
            "exp" => {
                let mut a = self.args(1, name)?;
                Ok(Node::Exp(Box::new(a.remove(0))))
            }
            "abs" => {
                let mut a = self.args(1, name)?;
                Ok(Node::Abs(Box::new(a.remove(0))))
            }
            "clamp" => {
                let mut a = self.args(3, name)?.into_iter();
                let v = a.next().unwrap();
                let lo = a.next().unwrap();
                let hi = a.next().unwrap();
                Ok(Node::Clamp(Box::new(v), Box::new(lo), Box::new(hi)))
            }
            _ => {
                if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                    if idx == 0 {
                        return self.err("coordinates are numbered from x1");
                    }
                    Ok(Node::Var(idx - 1))
                } else {
                    self.err(format!("unknown identifier `{name}`"))
                }
            }
        }
    }
}
