//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] in `d` variables of order `K` stores the Taylor coefficients
//! `∂^α g / α!` of a scalar function at a base point for every multi-index
//! `|α| ≤ K`. Multi-indices are enumerated graded-lexicographically: first by
//! total degree, then lexicographically descending within a degree. For
//! `d = 2, K = 2` the order is
//!
//! ```text
//! (0,0) (1,0) (0,1) (2,0) (1,1) (0,2)
//! ```
//!
//! Truncating a jet to a lower order is therefore a prefix of its coefficients.
//!
//! Products are exact through order `K` (Leibniz convolution on Taylor
//! coefficients needs no binomial factors). Elementary functions are composed
//! with their one-variable Taylor series around the value part.
//!
//! Mixing jets of different shapes is an error; there is no implicit
//! truncation or promotion.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// Highest supported jet order.
pub const MAX_ORDER: usize = 4;

/// Largest number of jet variables accepted.
pub const MAX_VARS: usize = 32;

/// Relative pivot threshold below which a value-part matrix counts as singular.
pub const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order {0} outside [0, {MAX_ORDER}]")]
    OrderOutOfRange(usize),
    #[error("jet variable count {0} outside [1, {MAX_VARS}]")]
    VarsOutOfRange(usize),
    #[error("variable index {index} out of range for {d} variables")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("jet shape mismatch: ({d1} vars, order {k1}) vs ({d2} vars, order {k2})")]
    ShapeMismatch {
        d1: usize,
        k1: usize,
        d2: usize,
        k2: usize,
    },
    #[error("division by a jet with zero value part")]
    DivisionByZero,
    #[error("{func} undefined at value {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("cannot differentiate an order-0 jet")]
    OrderExhausted,
    #[error("cannot raise order {from} jet to order {to}")]
    Promotion { from: usize, to: usize },
    #[error("value-part matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("linear system dimension mismatch: {0}")]
    SystemShape(String),
}

/// Multi-index table and product/derivative plans for one `(d, K)` shape.
#[derive(Debug)]
pub struct Layout {
    d: usize,
    k: usize,
    alphas: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(a, b, target)` triples with `|α_a| + |α_b| ≤ K`.
    products: Vec<(u32, u32, u32)>,
    /// Start offset of each total degree `0..=K+1`.
    degree_start: Vec<usize>,
    /// `shift[pos * d + i]`: position of `α_pos + e_i`, or `u32::MAX` past order `K`.
    shift: Vec<u32>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of coefficients of a jet in `d` variables of order `k`.
pub fn coeff_len(d: usize, k: usize) -> usize {
    binomial(d + k, k)
}

fn push_degree(d: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == d - 1 {
        cur[pos] = left as u8;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e as u8;
        push_degree(d, pos + 1, left - e, cur, out);
    }
    cur[pos] = 0;
}

impl Layout {
    fn build(d: usize, k: usize) -> Layout {
        let mut alphas = Vec::with_capacity(coeff_len(d, k));
        let mut degree_start = Vec::with_capacity(k + 2);
        let mut cur = vec![0u8; d];
        for deg in 0..=k {
            degree_start.push(alphas.len());
            push_degree(d, 0, deg, &mut cur, &mut alphas);
        }
        degree_start.push(alphas.len());
        let index: HashMap<Vec<u8>, usize> = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut products = Vec::new();
        let mut sum = vec![0u8; d];
        for (ia, a) in alphas.iter().enumerate() {
            let da = degree_of(a);
            for (ib, b) in alphas.iter().enumerate() {
                if da + degree_of(b) > k {
                    // alphas are sorted by degree, nothing further fits
                    break;
                }
                for v in 0..d {
                    sum[v] = a[v] + b[v];
                }
                products.push((ia as u32, ib as u32, index[&sum] as u32));
            }
        }
        let mut shift = vec![u32::MAX; alphas.len() * d];
        for (pos, a) in alphas.iter().enumerate() {
            for v in 0..d {
                sum.copy_from_slice(a);
                sum[v] += 1;
                if let Some(&t) = index.get(&sum) {
                    shift[pos * d + v] = t as u32;
                }
            }
        }
        Layout {
            d,
            k,
            alphas,
            index,
            products,
            degree_start,
            shift,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.alphas
    }

    /// Storage position of a multi-index, if it is within the order.
    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Range of storage positions holding total degree `deg`.
    pub fn degree_range(&self, deg: usize) -> std::ops::Range<usize> {
        self.degree_start[deg]..self.degree_start[deg + 1]
    }
}

fn degree_of(a: &[u8]) -> usize {
    a.iter().map(|&e| e as usize).sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn layout(d: usize, k: usize) -> Result<Arc<Layout>, JetError> {
    if k > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(k));
    }
    if d == 0 || d > MAX_VARS {
        return Err(JetError::VarsOutOfRange(d));
    }
    static CACHE: [OnceLock<Arc<Layout>>; MAX_VARS * (MAX_ORDER + 1)] =
        [const { OnceLock::new() }; MAX_VARS * (MAX_ORDER + 1)];
    Ok(CACHE[(d - 1) * (MAX_ORDER + 1) + k]
        .get_or_init(|| Arc::new(Layout::build(d, k)))
        .clone())
}

/// Shared layout for `d` variables at order `k`.
pub fn layout_for(d: usize, k: usize) -> Result<Arc<Layout>, JetError> {
    layout(d, k)
}

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("d", &self.layout.d)
            .field("order", &self.layout.k)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// The zero jet.
    pub fn zero(d: usize, k: usize) -> Result<Jet, JetError> {
        let layout = layout(d, k)?;
        let coeffs = vec![0.0; layout.len()];
        Ok(Jet { layout, coeffs })
    }

    /// A constant function.
    pub fn constant(value: f64, d: usize, k: usize) -> Result<Jet, JetError> {
        let mut j = Jet::zero(d, k)?;
        j.coeffs[0] = value;
        Ok(j)
    }

    /// The coordinate function `x_index` at a base point where it equals `value`.
    pub fn variable(index: usize, value: f64, d: usize, k: usize) -> Result<Jet, JetError> {
        if index >= d {
            return Err(JetError::IndexOutOfRange { index, d });
        }
        let mut j = Jet::constant(value, d, k)?;
        if k >= 1 {
            j.coeffs[1 + index] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from raw Taylor coefficients in storage order.
    pub fn from_coeffs(d: usize, k: usize, coeffs: Vec<f64>) -> Result<Jet, JetError> {
        let layout = layout(d, k)?;
        if coeffs.len() != layout.len() {
            return Err(JetError::SystemShape(format!(
                "expected {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout, coeffs })
    }

    /// A zero jet with the same shape as `self`.
    pub fn zero_like(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    /// A constant jet with the same shape as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut j = self.zero_like();
        j.coeffs[0] = value;
        j
    }

    pub fn num_vars(&self) -> usize {
        self.layout.d
    }

    pub fn order(&self) -> usize {
        self.layout.k
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `∂^α g / α!`; zero beyond the order.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.layout
            .position(alpha)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    /// Raw partial derivative `∂^α g` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        let scale: f64 = alpha.iter().map(|&e| factorial(e as usize)).product();
        self.coeff(alpha) * scale
    }

    /// First partial `∂g/∂x_i` at the base point.
    pub fn d1(&self, i: usize) -> f64 {
        if self.layout.k == 0 {
            return 0.0;
        }
        self.coeffs[1 + i]
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout)
            || (self.layout.d == other.layout.d && self.layout.k == other.layout.k)
    }

    fn check(&self, other: &Jet) -> Result<(), JetError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch {
                d1: self.layout.d,
                k1: self.layout.k,
                d2: other.layout.d,
                k2: other.layout.k,
            })
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            layout: self.layout.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            layout: self.layout.clone(),
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let mut out = vec![0.0; self.coeffs.len()];
        for &(a, b, t) in &self.layout.products {
            out[t as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Ok(Jet {
            layout: self.layout.clone(),
            coeffs: out,
        })
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        self.try_mul(&other.recip()?)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        assert!(self.same_shape(other), "jet shape mismatch in axpy");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// Composes with a one-variable series `Σ c_k (a − a₀)^k`.
    fn compose(&self, series: &[f64]) -> Jet {
        let k = self.layout.k;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut r = self.constant_like(series[k]);
        for c in series[..k].iter().rev() {
            r = &r * &delta;
            r.coeffs[0] += c;
        }
        r
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.order())
            .map(|i| cycle[i % 4] / factorial(i))
            .collect();
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.order())
            .map(|i| cycle[i % 4] / factorial(i))
            .collect();
        self.compose(&series)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<f64> = (0..=self.order()).map(|i| e / factorial(i)).collect();
        self.compose(&series)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(JetError::Domain {
                func: "sqrt",
                value: a0,
            });
        }
        // binom(1/2, i) a0^(1/2 - i)
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for i in 0..=self.order() {
            if i > 0 {
                binom *= (0.5 - (i - 1) as f64) / i as f64;
            }
            series.push(binom * a0.powf(0.5 - i as f64));
        }
        Ok(self.compose(&series))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let inv = 1.0 / a0;
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            series.push(term);
            term *= -inv;
        }
        Ok(self.compose(&series))
    }

    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        if n < 0 {
            if self.value() == 0.0 {
                return Err(JetError::Domain {
                    func: "pow",
                    value: 0.0,
                });
            }
            return self.powi(-n)?.recip();
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// `∂/∂x_i` as a jet of order `K − 1`.
    pub fn derivative(&self, i: usize) -> Result<Jet, JetError> {
        let d = self.layout.d;
        if i >= d {
            return Err(JetError::IndexOutOfRange { index: i, d });
        }
        if self.layout.k == 0 {
            return Err(JetError::OrderExhausted);
        }
        let lower = layout(d, self.layout.k - 1)?;
        // lower-order storage is a prefix of this layout's storage
        let coeffs = lower
            .alphas
            .iter()
            .enumerate()
            .map(|(pos, alpha)| {
                let src = self.layout.shift[pos * d + i] as usize;
                (alpha[i] as f64 + 1.0) * self.coeffs[src]
            })
            .collect();
        Ok(Jet {
            layout: lower,
            coeffs,
        })
    }

    /// Drops every coefficient above order `k`.
    pub fn truncate(&self, k: usize) -> Result<Jet, JetError> {
        if k > self.layout.k {
            return Err(JetError::Promotion {
                from: self.layout.k,
                to: k,
            });
        }
        let l = layout(self.layout.d, k)?;
        let coeffs = self.coeffs[..l.len()].to_vec();
        Ok(Jet { layout: l, coeffs })
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Binary jet operation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Negates `a`; `b` is only shape-checked.
    Neg,
}

pub fn jet_arith(op: ArithOp, a: &Jet, b: &Jet) -> Result<Jet, JetError> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
        ArithOp::Div => a.try_div(b),
        ArithOp::Neg => {
            a.check(b)?;
            Ok(-a)
        }
    }
}

/// Elementary function selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Sqrt,
    PowInt(i32),
}

pub fn jet_elementary(func: Elementary, a: &Jet) -> Result<Jet, JetError> {
    match func {
        Elementary::Sin => Ok(a.sin()),
        Elementary::Cos => Ok(a.cos()),
        Elementary::Exp => Ok(a.exp()),
        Elementary::Sqrt => a.sqrt(),
        Elementary::PowInt(n) => a.powi(n),
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            /// Panics on shape mismatch; use the `try_` form for checked arithmetic.
            fn $m(self, rhs: &Jet) -> Jet {
                self.$try(rhs).expect("jet shape mismatch")
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$try(&rhs).expect("jet shape mismatch")
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$try(rhs).expect("jet shape mismatch")
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$try(&rhs).expect("jet shape mismatch")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a, I: IntoIterator<Item = &'a Jet>>(it: I) -> Option<Jet> {
    let mut it = it.into_iter();
    let mut acc = it.next()?.clone();
    for j in it {
        acc.axpy(1.0, j);
    }
    Some(acc)
}

/// LU factorisation of a square jet matrix, pivoting on value parts.
#[derive(Debug, Clone)]
pub struct JetLu {
    n: usize,
    lu: Vec<Vec<Jet>>,
    perm: Vec<usize>,
}

impl JetLu {
    pub fn factor(a: &[Vec<Jet>]) -> Result<JetLu, JetError> {
        let n = a.len();
        if n == 0 || a.iter().any(|row| row.len() != n) {
            return Err(JetError::SystemShape(format!(
                "matrix must be square and nonempty, got {n} rows"
            )));
        }
        let proto = &a[0][0];
        for row in a {
            for e in row {
                proto.check(e)?;
            }
        }
        let scale = a
            .iter()
            .flatten()
            .fold(0.0f64, |m, e| m.max(e.value().abs()));
        let mut lu: Vec<Vec<Jet>> = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, pval) = (col..n)
                .map(|r| (r, lu[r][col].value().abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > PIVOT_EPS * scale) || scale == 0.0 {
                return Err(JetError::Singular {
                    column: col,
                    pivot: pval,
                });
            }
            lu.swap(col, piv);
            perm.swap(col, piv);
            let inv = lu[col][col].recip()?;
            for r in col + 1..n {
                let factor = &lu[r][col] * &inv;
                for c in col + 1..n {
                    let t = &factor * &lu[col][c];
                    lu[r][c] = &lu[r][c] - &t;
                }
                lu[r][col] = factor;
            }
        }
        Ok(JetLu { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Jet]) -> Result<Vec<Jet>, JetError> {
        let n = self.n;
        if b.len() != n {
            return Err(JetError::SystemShape(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        for e in b {
            self.lu[0][0].check(e)?;
        }
        let mut y: Vec<Jet> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for r in 0..n {
            for c in 0..r {
                let t = &self.lu[r][c] * &y[c];
                y[r] = &y[r] - &t;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let t = &self.lu[r][c] * &y[c];
                y[r] = &y[r] - &t;
            }
            y[r] = y[r].try_div(&self.lu[r][r])?;
        }
        Ok(y)
    }

    /// Inverse matrix, row-major.
    pub fn inverse(&self) -> Result<Vec<Vec<Jet>>, JetError> {
        let n = self.n;
        let proto = &self.lu[0][0];
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let e: Vec<Jet> = (0..n)
                .map(|i| proto.constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect();
            cols.push(self.solve(&e)?);
        }
        Ok((0..n)
            .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
            .collect())
    }
}

/// Solves `A x = b` over the jet ring.
pub fn linear_solve(a: &[Vec<Jet>], b: &[Jet]) -> Result<Vec<Jet>, JetError> {
    JetLu::factor(a)?.solve(b)
}

/// `A · x` for a jet matrix and vector.
pub fn mat_vec(a: &[Vec<Jet>], x: &[Jet]) -> Vec<Jet> {
    a.iter()
        .map(|row| {
            let mut acc = x[0].zero_like();
            for (aij, xj) in row.iter().zip(x) {
                acc = acc + aij * xj;
            }
            acc
        })
        .collect()
}
