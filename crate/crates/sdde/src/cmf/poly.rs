//! Exact polynomial rings used by the expansion: `Q[b]`, `Q[b][theta]` and sparse
//! polynomials in `(x1, x2, p, q)` over either of them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Dense univariate polynomial in `b`, lowest power first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct QPoly(Vec<Q>);

impl QPoly {
    pub fn zero() -> Self {
        QPoly(Vec::new())
    }

    pub fn constant(c: Q) -> Self {
        QPoly(vec![c]).normalized()
    }

    pub fn from_coeffs(c: Vec<Q>) -> Self {
        QPoly(c).normalized()
    }

    /// The polynomial `b`.
    pub fn var() -> Self {
        QPoly(vec![Q::zero(), Q::one()])
    }

    fn normalized(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return QPoly::zero();
        }
        QPoly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, b: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * b + c)
    }

    pub fn eval_f64(&self, b: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * b + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl<'a> Add<&'a QPoly> for &'a QPoly {
    type Output = QPoly;
    fn add(self, o: &QPoly) -> QPoly {
        let n = self.0.len().max(o.0.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let mut c = self.0.get(i).cloned().unwrap_or_else(Q::zero);
            if let Some(d) = o.0.get(i) {
                c += d;
            }
            v.push(c);
        }
        QPoly(v).normalized()
    }
}

impl<'a> Sub<&'a QPoly> for &'a QPoly {
    type Output = QPoly;
    fn sub(self, o: &QPoly) -> QPoly {
        self + &(-o)
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly(self.0.iter().map(|c| -c).collect())
    }
}

impl<'a> Mul<&'a QPoly> for &'a QPoly {
    type Output = QPoly;
    fn mul(self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut v = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, c) in o.0.iter().enumerate() {
                v[i + j] += a * c;
            }
        }
        QPoly(v).normalized()
    }
}

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = a.is_one() && k > 0;
            if !unit {
                f.write_str(&fmt_q(&a))?;
            }
            match k {
                0 => {}
                1 if unit => f.write_str("b")?,
                1 => f.write_str("*b")?,
                _ if unit => write!(f, "b^{k}")?,
                _ => write!(f, "*b^{k}")?,
            }
        }
        Ok(())
    }
}

/// Polynomial in `theta` with `Q[b]` coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ThetaPoly(Vec<QPoly>);

impl ThetaPoly {
    pub fn zero() -> Self {
        ThetaPoly(Vec::new())
    }

    pub fn from_coeffs(c: Vec<QPoly>) -> Self {
        ThetaPoly(c).normalized()
    }

    pub fn constant(c: QPoly) -> Self {
        ThetaPoly(vec![c]).normalized()
    }

    /// `c theta^k`.
    pub fn monomial(c: QPoly, k: usize) -> Self {
        let mut v = vec![QPoly::zero(); k + 1];
        v[k] = c;
        ThetaPoly(v).normalized()
    }

    fn normalized(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[QPoly] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, s: &Q) -> Self {
        ThetaPoly(self.0.iter().map(|c| c.scale(s)).collect()).normalized()
    }

    pub fn scale_poly(&self, s: &QPoly) -> Self {
        ThetaPoly(self.0.iter().map(|c| c * s).collect()).normalized()
    }

    /// `int_0^theta self`.
    pub fn integral(&self) -> Self {
        let mut v = vec![QPoly::zero()];
        for (k, c) in self.0.iter().enumerate() {
            v.push(c.scale(&q(1, k as i64 + 1)));
        }
        ThetaPoly(v).normalized()
    }

    pub fn derivative(&self) -> Self {
        ThetaPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&qi(k as i64)))
                .collect(),
        )
        .normalized()
    }

    /// Exact value at a rational `theta`.
    pub fn at(&self, t: &Q) -> QPoly {
        self.0
            .iter()
            .rev()
            .fold(QPoly::zero(), |acc, c| &acc.scale(t) + c)
    }

    /// Value at `theta = s(b)`.
    pub fn at_poly(&self, s: &QPoly) -> QPoly {
        self.0
            .iter()
            .rev()
            .fold(QPoly::zero(), |acc, c| &(&acc * s) + c)
    }

    /// Taylor coefficients about `theta = t0`, i.e. the coefficients of `self(t0 + d)` in `d`.
    pub fn shifted(&self, t0: &Q) -> Vec<QPoly> {
        let n = self.0.len();
        let mut c = self.0.clone();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let t = c[k + 1].scale(t0);
                c[k] = &c[k] + &t;
            }
        }
        c
    }

    /// `int_{-1}^0 w(theta) self(theta) d theta` for a weight with rational coefficients.
    pub fn moment(&self, weight: &[Q]) -> QPoly {
        let mut acc = QPoly::zero();
        for (k, c) in self.0.iter().enumerate() {
            for (l, w) in weight.iter().enumerate() {
                let e = (k + l) as i64;
                let sign = if e % 2 == 0 { 1 } else { -1 };
                let v = w * q(sign, e + 1);
                acc = &acc + &c.scale(&v);
            }
        }
        acc
    }

    pub fn eval_f64(&self, theta: f64, b: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * theta + c.eval_f64(b))
    }
}

impl<'a> Add<&'a ThetaPoly> for &'a ThetaPoly {
    type Output = ThetaPoly;
    fn add(self, o: &ThetaPoly) -> ThetaPoly {
        let n = self.0.len().max(o.0.len());
        let z = QPoly::zero();
        ThetaPoly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
        .normalized()
    }
}

impl<'a> Sub<&'a ThetaPoly> for &'a ThetaPoly {
    type Output = ThetaPoly;
    fn sub(self, o: &ThetaPoly) -> ThetaPoly {
        self + &o.scale(&qi(-1))
    }
}

impl<'a> Mul<&'a ThetaPoly> for &'a ThetaPoly {
    type Output = ThetaPoly;
    fn mul(self, o: &ThetaPoly) -> ThetaPoly {
        if self.is_zero() || o.is_zero() {
            return ThetaPoly::zero();
        }
        let mut v = vec![QPoly::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, c) in o.0.iter().enumerate() {
                v[i + j] = &v[i + j] + &(a * c);
            }
        }
        ThetaPoly(v).normalized()
    }
}

impl fmt::Display for ThetaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        for (k, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            parts.push(match k {
                0 => format!("({c})"),
                1 => format!("({c})*theta"),
                _ => format!("({c})*theta^{k}"),
            });
        }
        f.write_str(&parts.join(" + "))
    }
}

/// Exponent vector over `(x1, x2, p, q)` (or `(y, v, p, q)` after the coordinate change).
pub type Exp = [u8; 4];

pub fn degree(e: &Exp) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

/// Coefficient ring interface for [`MPoly`].
pub trait Ring: Clone + PartialEq {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: &Q) -> Self;
}

impl Ring for QPoly {
    fn zero() -> Self {
        QPoly::zero()
    }
    fn is_zero(&self) -> bool {
        QPoly::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: &Q) -> Self {
        QPoly::scale(self, s)
    }
}

impl Ring for ThetaPoly {
    fn zero() -> Self {
        ThetaPoly::zero()
    }
    fn is_zero(&self) -> bool {
        ThetaPoly::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: &Q) -> Self {
        ThetaPoly::scale(self, s)
    }
}

/// Sparse polynomial in four variables; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MPoly<C: Ring>(pub BTreeMap<Exp, C>);

impl<C: Ring> Default for MPoly<C> {
    fn default() -> Self {
        MPoly(BTreeMap::new())
    }
}

impl<C: Ring> MPoly<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(e: Exp, c: C) -> Self {
        let mut m = Self::new();
        m.add_term(e, c);
        m
    }

    pub fn add_term(&mut self, e: Exp, c: C) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(&e) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.0.remove(&e);
                }
            }
            None => {
                self.0.insert(e, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, e: &Exp) -> C {
        self.0.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.0 {
            r.add_term(*e, c.clone());
        }
        r
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut r = Self::new();
        for (e, c) in &self.0 {
            r.add_term(*e, c.scale(s));
        }
        r
    }

    pub fn scale_ring(&self, s: &C) -> Self {
        let mut r = Self::new();
        for (e, c) in &self.0 {
            r.add_term(*e, c.mul(s));
        }
        r
    }

    /// Product with all terms of total degree above `max_deg` dropped.
    pub fn mul_trunc(&self, o: &Self, max_deg: usize) -> Self {
        let mut r = Self::new();
        for (e1, c1) in &self.0 {
            let d1 = degree(e1);
            for (e2, c2) in &o.0 {
                if d1 + degree(e2) > max_deg {
                    continue;
                }
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                r.add_term(e, c1.mul(c2));
            }
        }
        r
    }

    pub fn homogeneous(&self, d: usize) -> Self {
        MPoly(
            self.0
                .iter()
                .filter(|(e, _)| degree(e) == d)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        )
    }

    pub fn truncated(&self, d: usize) -> Self {
        MPoly(
            self.0
                .iter()
                .filter(|(e, _)| degree(e) <= d)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        )
    }

    /// Partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Self {
        let mut r = Self::new();
        for (e, c) in &self.0 {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = *e;
            e2[i] -= 1;
            r.add_term(e2, c.scale(&qi(e[i] as i64)));
        }
        r
    }

    pub fn map<D: Ring, F: Fn(&C) -> D>(&self, f: F) -> MPoly<D> {
        let mut r = MPoly::new();
        for (e, c) in &self.0 {
            r.add_term(*e, f(c));
        }
        r
    }

    /// Substitutes each variable by a polynomial, truncating at `max_deg`.
    pub fn compose(&self, subs: &[MPoly<C>; 4], max_deg: usize) -> Self {
        let one = |c: C| MPoly::term([0; 4], c);
        let mut pows: Vec<Vec<MPoly<C>>> = Vec::new();
        let maxe = self.0.keys().fold([0u8; 4], |m, e| {
            [
                m[0].max(e[0]),
                m[1].max(e[1]),
                m[2].max(e[2]),
                m[3].max(e[3]),
            ]
        });
        for (i, s) in subs.iter().enumerate() {
            let mut v = vec![MPoly::<C>::new()];
            for k in 1..=maxe[i] as usize {
                let next = if k == 1 {
                    s.truncated(max_deg)
                } else {
                    v[k - 1].mul_trunc(s, max_deg)
                };
                v.push(next);
            }
            pows.push(v);
        }
        let mut r = Self::new();
        for (e, c) in &self.0 {
            let mut t = one(c.clone());
            for i in 0..4 {
                if e[i] > 0 {
                    t = t.mul_trunc(&pows[i][e[i] as usize], max_deg);
                }
            }
            r = r.add(&t);
        }
        r
    }
}
