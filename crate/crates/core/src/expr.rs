//! Expression language for immersion components.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ['^' ['-'] integer]
//! atom   := number | var | func '(' expr ')' | '(' expr ')'
//! var    := 'x1' .. 'x9' | 't'          (t is an alias of x1)
//! func   := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`. Exponents are
//! integer literals; `^` does not chain.
//!
//! `Display` prints a fully parenthesised form that parses back to the same
//! tree.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{Jet, JetError};

pub const MAX_DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index: `x1` is `Var(0)`.
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("non-integer exponent at {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("variable `{name}` not available in dimension {dim}")]
    UnknownVariable { name: String, dim: usize },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integral: bool },
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

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut integral = true;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                    integral = false;
                    i = j;
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num { value, integral }, start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        return Err(ParseError::Syntax {
            pos: start,
            msg: format!("unexpected character `{c}`"),
        });
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::End => "end of input".into(),
            Tok::Num { value, .. } => format!("number {value}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.at(),
            msg: format!("expected {wanted}, found {}", Self::describe(self.peek())),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.at();
        match self.bump() {
            Tok::Num {
                value,
                integral: true,
            } if value <= i32::MAX as f64 => {
                let e = value as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -e } else { e }))
            }
            Tok::Num { .. } | Tok::Ident(_) | Tok::LParen => {
                Err(ParseError::NonIntegerExponent { pos })
            }
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected integer exponent, found {}", Self::describe(&other)),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.at();
        match self.peek().clone() {
            Tok::Num { value, .. } => {
                self.bump();
                Ok(Expr::Const(value))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let func = match name.as_str() {
                    "sin" => Some(UnaryOp::Sin),
                    "cos" => Some(UnaryOp::Cos),
                    "exp" => Some(UnaryOp::Exp),
                    "sqrt" => Some(UnaryOp::Sqrt),
                    _ => None,
                };
                if let Some(op) = func {
                    if *self.peek() != Tok::LParen {
                        return Err(self.unexpected("`(` after function name"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return Err(self.unexpected("`)`"));
                    }
                    self.bump();
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                match var_index(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError::UnknownIdentifier { name, pos }),
                }
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }
}

fn var_index(name: &str) -> Option<usize> {
    if name == "t" {
        return Some(0);
    }
    let digits = name.strip_prefix('x')?;
    if digits.len() != 1 {
        return None;
    }
    let k = digits.parse::<usize>().ok()?;
    (1..=MAX_DIM).contains(&k).then(|| k - 1)
}

/// Parses a single expression over `x1..x9` (and `t`).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

/// Parses and checks every variable against the declared dimension.
pub fn parse_expr_in(src: &str, dim: usize) -> Result<Expr, ParseError> {
    let e = parse_expr(src)?;
    if let Some(v) = e.max_var() {
        if v >= dim {
            return Err(ParseError::UnknownVariable {
                name: format!("x{}", v + 1),
                dim,
            });
        }
    }
    Ok(e)
}

impl Expr {
    /// Largest variable index referenced.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Plain floating-point evaluation; domain violations are errors.
    pub fn eval(&self, x: &[f64]) -> Result<f64, JetError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(JetError::IndexOutOfRange {
                index: *i,
                d: x.len(),
            })?,
            Expr::Unary(op, a) => {
                let v = a.eval(x)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Sqrt => {
                        if !(v > 0.0) {
                            return Err(JetError::Domain {
                                func: "sqrt",
                                value: v,
                            });
                        }
                        v.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinaryOp::Add => u + v,
                    BinaryOp::Sub => u - v,
                    BinaryOp::Mul => u * v,
                    BinaryOp::Div => {
                        if v == 0.0 {
                            return Err(JetError::DivisionByZero);
                        }
                        u / v
                    }
                }
            }
            Expr::Pow(a, n) => {
                let v = a.eval(x)?;
                if *n < 0 && v == 0.0 {
                    return Err(JetError::Domain {
                        func: "pow",
                        value: v,
                    });
                }
                v.powi(*n)
            }
        })
    }

    /// Evaluation in the jet ring; `vars[i]` is the jet substituted for `x_{i+1}`.
    pub fn eval_jet(&self, vars: &[Jet]) -> Result<Jet, JetError> {
        let proto = vars.first().ok_or(JetError::IndexOutOfRange { index: 0, d: 0 })?;
        self.eval_jet_with(vars, proto)
    }

    fn eval_jet_with(&self, vars: &[Jet], proto: &Jet) -> Result<Jet, JetError> {
        Ok(match self {
            Expr::Const(c) => proto.constant_like(*c),
            Expr::Var(i) => vars
                .get(*i)
                .ok_or(JetError::IndexOutOfRange {
                    index: *i,
                    d: vars.len(),
                })?
                .clone(),
            Expr::Unary(op, a) => {
                let v = a.eval_jet_with(vars, proto)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Sqrt => v.sqrt()?,
                }
            }
            Expr::Binary(op, a, b) => {
                let u = a.eval_jet_with(vars, proto)?;
                let v = b.eval_jet_with(vars, proto)?;
                match op {
                    BinaryOp::Add => u.try_add(&v)?,
                    BinaryOp::Sub => u.try_sub(&v)?,
                    BinaryOp::Mul => u.try_mul(&v)?,
                    BinaryOp::Div => u.try_div(&v)?,
                }
            }
            Expr::Pow(a, n) => a.eval_jet_with(vars, proto)?.powi(*n)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Unary(op, a) => match op {
                UnaryOp::Neg => write!(f, "(-{a})"),
                UnaryOp::Sin => write!(f, "sin({a})"),
                UnaryOp::Cos => write!(f, "cos({a})"),
                UnaryOp::Exp => write!(f, "exp({a})"),
                UnaryOp::Sqrt => write!(f, "sqrt({a})"),
            },
            Expr::Binary(op, a, b) => {
                let s = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
        }
    }
}

/// A map `R^dim_in → R^dim_out` given componentwise by expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMap {
    dim_in: usize,
    components: Vec<Expr>,
}

impl ExprMap {
    pub fn new(dim_in: usize, components: Vec<Expr>) -> Result<ExprMap, ParseError> {
        for c in &components {
            if let Some(v) = c.max_var() {
                if v >= dim_in {
                    return Err(ParseError::UnknownVariable {
                        name: format!("x{}", v + 1),
                        dim: dim_in,
                    });
                }
            }
        }
        Ok(ExprMap { dim_in, components })
    }

    pub fn parse<S: AsRef<str>>(dim_in: usize, sources: &[S]) -> Result<ExprMap, ParseError> {
        let components = sources
            .iter()
            .map(|s| parse_expr_in(s.as_ref(), dim_in))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExprMap { dim_in, components })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, JetError> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Order-`k` jets of every component at `base`.
    pub fn eval_jet(&self, base: &[f64], k: usize) -> Result<Vec<Jet>, JetError> {
        if base.len() != self.dim_in {
            return Err(JetError::SystemShape(format!(
                "point has {} coordinates, map expects {}",
                base.len(),
                self.dim_in
            )));
        }
        let vars = base
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(i, v, self.dim_in, k))
            .collect::<Result<Vec<_>, _>>()?;
        self.eval_jets(&vars)
    }

    /// Components evaluated at arbitrary jet arguments (composition).
    pub fn eval_jets(&self, vars: &[Jet]) -> Result<Vec<Jet>, JetError> {
        if vars.len() != self.dim_in {
            return Err(JetError::SystemShape(format!(
                "{} arguments for a map of {} variables",
                vars.len(),
                self.dim_in
            )));
        }
        self.components.iter().map(|c| c.eval_jet(vars)).collect()
    }
}

impl fmt::Display for ExprMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
