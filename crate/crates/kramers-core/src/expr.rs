//! Landscape expression language: parsing, evaluation and exact differentiation.
//!
//! Variables are `x1..xd`, with the aliases `x`, `y`, `z` when `d <= 3`.
//! Exponents must be integer literals, which keeps the derivative of every
//! expression inside the grammar.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { name: String, offset: usize },
    #[error("variable `{name}` out of range for dimension {dim}")]
    VarOutOfRange { name: String, dim: usize },
    #[error("dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("point has length {got}, expected {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of nonpositive value {0}")]
    LogDomain(f64),
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        match s {
            "exp" => Some(Func::Exp),
            "log" | "ln" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

/// Expression tree. `a - b` is represented as `Add(a, Neg(b))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

pub fn constant(c: f64) -> Expr {
    Expr::Const(c)
}

pub fn var(i: usize) -> Expr {
    Expr::Var(i)
}

impl Expr {
    pub fn is_const(&self, c: f64) -> bool {
        matches!(self, Expr::Const(v) if *v == c)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.arity().max(b.arity()),
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => 1 + a.node_count() + b.node_count(),
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
        }
    }
}

// Smart constructors: constant folding and 0/1 absorption only.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ if a.is_const(0.0) => b,
        _ if b.is_const(0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    add(a, neg(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ if a.is_const(0.0) || b.is_const(0.0) => Expr::Const(0.0),
        _ if a.is_const(1.0) => b,
        _ if b.is_const(1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
        _ if a.is_const(0.0) => Expr::Const(0.0),
        _ if b.is_const(1.0) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn powi(a: Expr, n: i32) -> Expr {
    match (&a, n) {
        (_, 0) => Expr::Const(1.0),
        (_, 1) => a,
        (Expr::Const(x), _) => Expr::Const(x.powi(n)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match (&a, f) {
        (Expr::Const(x), Func::Exp) => Expr::Const(x.exp()),
        (Expr::Const(x), Func::Sin) => Expr::Const(x.sin()),
        (Expr::Const(x), Func::Cos) => Expr::Const(x.cos()),
        (Expr::Const(x), Func::Log) if *x > 0.0 => Expr::Const(x.ln()),
        _ => Expr::Call(f, Box::new(a)),
    }
}

// ---------------------------------------------------------------- parsing

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
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", src[start..].chars().next().unwrap_or('?')),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(neg(rhs)));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let paren = *self.peek() == Tok::LParen;
        if paren {
            self.bump();
        }
        let sign = if *self.peek() == Tok::Minus {
            self.bump();
            -1
        } else {
            1
        };
        let at = self.offset();
        let n = match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => sign * v as i32,
            Tok::Num(_) => {
                return Err(ExprError::Syntax { offset: at, message: "exponent must be an integer".into() })
            }
            _ => return Err(ExprError::Syntax { offset: at, message: "expected integer exponent".into() }),
        };
        if paren {
            if *self.peek() != Tok::RParen {
                return self.err("expected `)`");
            }
            self.bump();
        }
        Ok(n)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.err("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return self.err("expected `)`");
                    }
                    self.bump();
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                self.variable(&name, at)
            }
            Tok::End => Err(ExprError::Syntax { offset: at, message: "unexpected end of input".into() }),
            t => Err(ExprError::Syntax { offset: at, message: format!("unexpected token {t:?}") }),
        }
    }

    fn variable(&self, name: &str, at: usize) -> Result<Expr, ExprError> {
        let idx = match name {
            "x" if self.dim <= 3 => Some(0),
            "y" if self.dim <= 3 => Some(1),
            "z" if self.dim <= 3 => Some(2),
            _ => name
                .strip_prefix('x')
                .and_then(|rest| rest.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(|k| k - 1),
        };
        match idx {
            Some(i) if i < self.dim => Ok(Expr::Var(i)),
            Some(_) => Err(ExprError::VarOutOfRange { name: name.to_string(), dim: self.dim }),
            None => Err(ExprError::UnknownIdent { name: name.to_string(), offset: at }),
        }
    }
}

pub fn parse(text: &str, dimension: usize) -> Result<Expr, ExprError> {
    if dimension < 2 {
        return Err(ExprError::BadDimension(dimension));
    }
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, dim: dimension, _src: text };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

// ---------------------------------------------------------------- printing

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => 3,
        _ => 5,
    }
}

struct Printer<'a> {
    e: &'a Expr,
    dim: usize,
}

impl Printer<'_> {
    fn sub<'b>(&self, e: &'b Expr) -> Printer<'b> {
        Printer { e, dim: self.dim }
    }

    fn wrap(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        if prec(e) < min_prec {
            write!(f, "({})", self.sub(e))
        } else {
            write!(f, "{}", self.sub(e))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(i) => {
                if self.dim <= 3 {
                    write!(f, "{}", ["x", "y", "z"][*i])
                } else {
                    write!(f, "x{}", i + 1)
                }
            }
            Expr::Add(a, b) => {
                self.wrap(f, a, 1)?;
                match b.as_ref() {
                    Expr::Neg(inner) => {
                        write!(f, " - ")?;
                        self.wrap(f, inner, 2)
                    }
                    Expr::Const(c) if c.is_sign_negative() => write!(f, " - {}", -c),
                    _ => {
                        write!(f, " + ")?;
                        self.wrap(f, b, 2)
                    }
                }
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self.e, Expr::Mul(..)) { "*" } else { "/" };
                self.wrap(f, a, 2)?;
                write!(f, " {op} ")?;
                self.wrap(f, b, 3)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                // `-(-2)` must not collapse to `--2`, which would reparse as a folded constant
                if matches!(a.as_ref(), Expr::Const(c) if c.is_sign_negative()) {
                    write!(f, "({})", self.sub(a))
                } else {
                    self.wrap(f, a, 3)
                }
            }
            Expr::Pow(a, n) => {
                self.wrap(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), self.sub(a)),
        }
    }
}

impl Expr {
    /// Pretty-print using variable names valid for dimension `dim`.
    pub fn to_string_dim(&self, dim: usize) -> String {
        Printer { e: self, dim }.to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dim = self.arity().max(2);
        write!(f, "{}", Printer { e: self, dim })
    }
}

// ---------------------------------------------------------------- evaluation

impl Expr {
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        let v = self.eval_inner(point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    fn eval_inner(&self, p: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *p.get(*i).ok_or(ExprError::PointLength { got: p.len(), expected: i + 1 })?,
            Expr::Add(a, b) => a.eval_inner(p)? + b.eval_inner(p)?,
            Expr::Mul(a, b) => a.eval_inner(p)? * b.eval_inner(p)?,
            Expr::Div(a, b) => {
                let den = b.eval_inner(p)?;
                if den == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                a.eval_inner(p)? / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval_inner(p)?;
                if base == 0.0 && *n < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Neg(a) => -a.eval_inner(p)?,
            Expr::Call(f, a) => {
                let x = a.eval_inner(p)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(ExprError::LogDomain(x));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        })
    }

    /// Evaluate at a point of dimension `dim`, checking the point length.
    pub fn eval_checked(&self, point: &[f64], dim: usize) -> Result<f64, ExprError> {
        if point.len() != dim {
            return Err(ExprError::PointLength { got: point.len(), expected: dim });
        }
        self.eval(point)
    }
}

// ---------------------------------------------------------------- differentiation

impl Expr {
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Const(_) => constant(0.0),
            Expr::Var(i) => constant(if *i == v { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num, powi((**b).clone(), 2))
            }
            Expr::Pow(a, n) => {
                let da = a.diff(v);
                mul(mul(constant(*n as f64), powi((**a).clone(), n - 1)), da)
            }
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Call(f, a) => {
                let da = a.diff(v);
                let outer = match f {
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Log => div(constant(1.0), (**a).clone()),
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                };
                mul(outer, da)
            }
        }
    }
}

pub fn differentiate(e: &Expr, var: usize) -> Expr {
    e.diff(var)
}

pub fn gradient(e: &Expr, dim: usize) -> Vec<Expr> {
    (0..dim).map(|i| e.diff(i)).collect()
}

/// Row-major symbolic Hessian, symmetric by construction (upper triangle mirrored).
pub fn hessian(e: &Expr, dim: usize) -> Vec<Vec<Expr>> {
    let grad = gradient(e, dim);
    let mut h = vec![vec![constant(0.0); dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let d = grad[i].diff(j);
            h[j][i] = d.clone();
            h[i][j] = d;
        }
    }
    h
}

// ---------------------------------------------------------------- compiled form

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Add,
    Mul,
    Div,
    Pow(i32),
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
}

/// Postfix form of an [`Expr`] for tight evaluation loops.
///
/// Skips the domain checks of [`Expr::eval`]; non-finite values propagate.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    depth: usize,
}

impl Compiled {
    pub fn new(e: &Expr) -> Compiled {
        let mut ops = Vec::with_capacity(e.node_count());
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Add | Op::Mul | Op::Div => depth -= 1,
                _ => {}
            }
            max = max.max(depth);
        }
        Compiled { ops, depth: max }
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        const STACK: usize = 32;
        if self.depth > STACK {
            return self.eval_heap(p);
        }
        let mut st = [0.0f64; STACK];
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    st[sp] = c;
                    sp += 1;
                }
                Op::Var(i) => {
                    st[sp] = p[i];
                    sp += 1;
                }
                Op::Add => {
                    sp -= 1;
                    st[sp - 1] += st[sp];
                }
                Op::Mul => {
                    sp -= 1;
                    st[sp - 1] *= st[sp];
                }
                Op::Div => {
                    sp -= 1;
                    st[sp - 1] /= st[sp];
                }
                Op::Pow(n) => st[sp - 1] = st[sp - 1].powi(n),
                Op::Neg => st[sp - 1] = -st[sp - 1],
                Op::Exp => st[sp - 1] = st[sp - 1].exp(),
                Op::Log => st[sp - 1] = st[sp - 1].ln(),
                Op::Sin => st[sp - 1] = st[sp - 1].sin(),
                Op::Cos => st[sp - 1] = st[sp - 1].cos(),
            }
        }
        st[0]
    }

    fn eval_heap(&self, p: &[f64]) -> f64 {
        let mut st: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => st.push(c),
                Op::Var(i) => st.push(p[i]),
                Op::Add | Op::Mul | Op::Div => {
                    let b = st.pop().unwrap_or(f64::NAN);
                    let a = st.last_mut().expect("stack underflow");
                    match *op {
                        Op::Add => *a += b,
                        Op::Mul => *a *= b,
                        _ => *a /= b,
                    }
                }
                _ => {
                    let a = st.last_mut().expect("stack underflow");
                    *a = match *op {
                        Op::Pow(n) => a.powi(n),
                        Op::Neg => -*a,
                        Op::Exp => a.exp(),
                        Op::Log => a.ln(),
                        Op::Sin => a.sin(),
                        _ => a.cos(),
                    };
                }
            }
        }
        st[0]
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(i) => ops.push(Op::Var(*i)),
        Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Expr::Pow(a, n) => {
            emit(a, ops);
            ops.push(Op::Pow(*n));
        }
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(match f {
                Func::Exp => Op::Exp,
                Func::Log => Op::Log,
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s, 2).unwrap()
    }

    #[test]
    fn double_well_root_is_sum() {
        let e = p("(x^2-1)^2 + y^2");
        assert!(matches!(e, Expr::Add(..)));
        assert_eq!(e.eval(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn syntax_error_offset() {
        match parse("x1 + (", 2) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_variable() {
        assert!(matches!(parse("z^2", 2), Err(ExprError::VarOutOfRange { .. })));
        assert!(matches!(parse("x3", 2), Err(ExprError::VarOutOfRange { .. })));
        assert!(matches!(parse("foo + 1", 2), Err(ExprError::UnknownIdent { .. })));
        assert!(parse("x4 + x1", 4).is_ok());
    }

    #[test]
    fn precedence() {
        // unary minus binds looser than ^
        assert_eq!(p("-x^2").eval(&[3.0, 0.0]).unwrap(), -9.0);
        assert_eq!(p("2*-x").eval(&[3.0, 0.0]).unwrap(), -6.0);
        assert_eq!(p("8/2/2").eval(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(p("1-2-3").eval(&[0.0, 0.0]).unwrap(), -4.0);
        assert_eq!(p("x^-1").eval(&[4.0, 0.0]).unwrap(), 0.25);
        assert!(parse("x^1.5", 2).is_err());
    }

    #[test]
    fn eval_errors() {
        assert_eq!(p("exp(x)").eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(p("1/x").eval(&[0.0, 1.0]), Err(ExprError::DivisionByZero));
        assert!(matches!(p("log(x)").eval(&[-1.0, 1.0]), Err(ExprError::LogDomain(_))));
        assert!(matches!(p("x").eval_checked(&[1.0], 2), Err(ExprError::PointLength { .. })));
    }

    #[test]
    fn derivatives() {
        assert_eq!(p("x^2").diff(0).eval(&[3.0, 0.0]).unwrap(), 6.0);
        assert_eq!(p("x^2").diff(1), Expr::Const(0.0));
        let d2 = p("(x^2-1)^2").diff(0).diff(0);
        assert!((d2.eval(&[0.0, 0.0]).unwrap() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn roundtrip_examples() {
        for s in [
            "(x^2-1)^2 + y^2",
            "x - -y",
            "-(-2)",
            "x*-2 - 3",
            "(x+y)*(x-y)/(1+x^2)",
            "exp(-x^2/2)*sin(y) - cos(x)^(-2)",
            "x - (y - 1)",
            "(-2)^2",
            "x/(y*x)",
            "- -x",
        ] {
            let a = p(s);
            let printed = a.to_string_dim(2);
            let b = parse(&printed, 2).unwrap_or_else(|e| panic!("{s} -> {printed}: {e}"));
            assert_eq!(a, b, "{s} -> {printed}");
        }
    }

    #[test]
    fn compiled_matches_tree() {
        let e = p("exp(-x^2/2)*sin(y) - cos(x)^(-2) + (x*y - 1)^3/(2 + y^2)");
        let c = Compiled::new(&e);
        for &(x, y) in &[(0.3, -0.7), (1.2, 2.5), (-2.0, 0.1)] {
            let a = e.eval(&[x, y]).unwrap();
            let b = c.eval(&[x, y]);
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }
}
