//! Coordinate expressions.
//!
//! A small formula language over the chart variables `x1..xn` (base) and
//! `y1..yn` (fiber): literals, `+ - * /`, unary minus, `sqrt(...)`, and `^`
//! with a numeric-literal exponent. Expressions evaluate over any [`Scalar`],
//! so the same tree produces plain values or full derivative jets.
//!
//! Precedence, tightest first: `^`, unary `-`, `* /`, `+ -`. So `-x1^2`
//! means `-(x1^2)` and `2*y1^2` means `2*(y1^2)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Scalar;

/// Which half of the chart a variable lives in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Axis {
    X,
    Y,
}

/// Expression tree. `Var` indices are zero-based internally; display and the
/// parser use the one-based names `x1..`, `y1..`.
#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    Num(f64),
    Var { axis: Axis, idx: usize },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sqrt(Box<Expr>),
}

impl Expr {
    /// Evaluate over any scalar kind. `x` and `y` each hold `dim` values; a
    /// prototype for manufacturing constants is taken from `x[0]`.
    pub fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> Result<T> {
        let proto = x
            .first()
            .or_else(|| y.first())
            .expect("evaluation needs at least one seeded variable");
        self.eval_inner(x, y, proto)
    }

    fn eval_inner<T: Scalar>(&self, x: &[T], y: &[T], proto: &T) -> Result<T> {
        let attach = |e: Error| e.annotate(|| self.to_string());
        match self {
            Expr::Num(v) => Ok(proto.constant_like(*v)),
            Expr::Var { axis, idx } => {
                let bank = match axis {
                    Axis::X => x,
                    Axis::Y => y,
                };
                bank.get(*idx)
                    .cloned()
                    .ok_or_else(|| Error::IndexOutOfRange {
                        what: format!("variable {self} with only {} components seeded", bank.len()),
                    })
            }
            Expr::Neg(a) => Ok(a.eval_inner(x, y, proto)?.neg()),
            Expr::Add(a, b) => Ok(a.eval_inner(x, y, proto)?.add(&b.eval_inner(x, y, proto)?)),
            Expr::Sub(a, b) => Ok(a.eval_inner(x, y, proto)?.sub(&b.eval_inner(x, y, proto)?)),
            Expr::Mul(a, b) => Ok(a.eval_inner(x, y, proto)?.mul(&b.eval_inner(x, y, proto)?)),
            Expr::Div(a, b) => a
                .eval_inner(x, y, proto)?
                .div(&b.eval_inner(x, y, proto)?)
                .map_err(attach),
            Expr::Pow(a, p) => a.eval_inner(x, y, proto)?.pow_real(*p).map_err(attach),
            Expr::Sqrt(a) => a.eval_inner(x, y, proto)?.sqrt().map_err(attach),
        }
    }

    /// Collect which variables occur, as `(axis, idx)` pairs.
    pub fn vars_used(&self) -> Vec<(Axis, usize)> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_by_key(|&(a, i)| (a == Axis::Y, i));
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<(Axis, usize)>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var { axis, idx } => out.push((*axis, *idx)),
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn uses_axis(&self, axis: Axis) -> bool {
        self.vars_used().iter().any(|&(a, _)| a == axis)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var { .. } | Expr::Sqrt(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let me = self.precedence();
        let parens = me < ctx;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var { axis, idx } => {
                let tag = match axis {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                };
                write!(f, "{tag}{}", idx + 1)?;
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(a, p) => {
                a.fmt_prec(f, 5)?;
                if *p < 0.0 {
                    write!(f, "^(-{})", -p)?;
                } else {
                    write!(f, "^{p}")?;
                }
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parse a formula over an `dim`-dimensional chart. Variable indices outside
/// `1..=dim` are unknown identifiers.
pub fn parse(input: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
        dim,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Syntax {
            offset: p.pos,
            message: format!("unexpected `{}`", p.peek_char()),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        self.peek().map(|b| b as char).unwrap_or(' ')
    }

    fn skip_ws(&mut self) {
        while matches!(
            self.peek(),
            Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r')
        ) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        loop {
            self.skip_ws();
            if self.eat(b'^') {
                let p = self.exponent()?;
                base = Expr::Pow(Box::new(base), p);
            } else {
                return Ok(base);
            }
        }
    }

    /// An exponent is a numeric literal, optionally negated, optionally in
    /// parentheses. Anything else is reported as a non-literal exponent.
    fn exponent(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let parens = self.eat(b'(');
        self.skip_ws();
        let negative = self.eat(b'-');
        self.skip_ws();
        if !matches!(self.peek(), Some(b'0'..=b'9') | Some(b'.')) {
            return Err(Error::NonLiteralExponent { offset: start });
        }
        let v = self.number()?;
        if parens {
            self.skip_ws();
            if !self.eat(b')') {
                return Err(Error::NonLiteralExponent { offset: start });
            }
        }
        Ok(if negative { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: "expected `)`".to_string(),
                    });
                }
                Ok(e)
            }
            Some(b'0'..=b'9') | Some(b'.') => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(Error::Syntax {
                offset: self.pos,
                message: if self.pos == self.src.len() {
                    "unexpected end of input".to_string()
                } else {
                    format!("unexpected `{}`", self.peek_char())
                },
            }),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                // not an exponent suffix after all (e.g. an identifier follows)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("bad numeric literal `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if name == "sqrt" {
            self.skip_ws();
            if !self.eat(b'(') {
                return Err(Error::Syntax {
                    offset: self.pos,
                    message: "expected `(` after sqrt".to_string(),
                });
            }
            let inner = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(Error::Syntax {
                    offset: self.pos,
                    message: "expected `)`".to_string(),
                });
            }
            return Ok(Expr::Sqrt(Box::new(inner)));
        }
        let axis = match name.as_bytes().first() {
            Some(b'x') => Some(Axis::X),
            Some(b'y') => Some(Axis::Y),
            _ => None,
        };
        if let Some(axis) = axis {
            if let Ok(k) = name[1..].parse::<usize>() {
                if k >= 1 && k <= self.dim {
                    return Ok(Expr::Var { axis, idx: k - 1 });
                }
            }
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}
