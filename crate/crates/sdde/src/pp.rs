//! Piecewise polynomials in a local power basis.
//!
//! Piece `i` covers `[breaks[i], breaks[i+1]]` and is stored as coefficients of
//! `s = (t - breaks[i]) / h_i`, lowest power first.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

pub fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

/// Value and first derivative (with respect to `s`).
pub fn horner_d(c: &[f64], s: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &a in c.iter().rev() {
        d = d * s + v;
        v = v * s + a;
    }
    (v, d)
}

impl PiecewisePoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(t0: f64, t1: f64, c: f64) -> Self {
        let mut pp = Self::new();
        pp.push(t0, t1, vec![c]);
        pp
    }

    /// Cubic Hermite interpolant of `f` with derivative `df` on `n` equal pieces.
    pub fn hermite<F, D>(t0: f64, t1: f64, n: usize, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let mut pp = Self::new();
        let h = (t1 - t0) / n as f64;
        for i in 0..n {
            let a = t0 + i as f64 * h;
            let b = if i + 1 == n { t1 } else { a + h };
            pp.push(a, b, hermite_cubic(f(a), f(b), h * df(a), h * df(b)));
        }
        pp
    }

    pub fn push(&mut self, t0: f64, t1: f64, c: Vec<f64>) {
        debug_assert!(t1 > t0);
        if self.breaks.is_empty() {
            self.breaks.push(t0);
        } else {
            debug_assert!((t0 - self.end()).abs() <= 1e-12 * (1.0 + t0.abs()));
        }
        self.breaks.push(t1);
        self.coeffs.push(c);
    }

    /// Drops every piece starting at or after `t` and cuts the piece containing `t`.
    pub fn truncate(&mut self, t: f64) {
        while self.breaks.len() > 1 && self.breaks[self.breaks.len() - 2] >= t {
            self.breaks.pop();
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            return;
        }
        let i = self.coeffs.len() - 1;
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        if t < b {
            let r = (t - a) / (b - a);
            let c = &mut self.coeffs[i];
            let mut f = 1.0;
            for ck in c.iter_mut() {
                *ck *= f;
                f *= r;
            }
            self.breaks[i + 1] = t;
        }
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        *self.breaks.last().expect("empty piecewise polynomial")
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn piece(&self, i: usize) -> (f64, f64, &[f64]) {
        (self.breaks[i], self.breaks[i + 1], &self.coeffs[i])
    }

    pub fn locate(&self, t: f64) -> usize {
        let n = self.coeffs.len();
        match self.breaks.partition_point(|&x| x <= t) {
            0 => 0,
            k if k > n => n - 1,
            k => k - 1,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        !self.is_empty() && t >= self.start() && t <= self.end()
    }

    /// Evaluates `u(t)`; outside the span the nearest piece is extrapolated.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        horner(&self.coeffs[i], (t - a) / (b - a))
    }

    pub fn eval_d(&self, t: f64) -> (f64, f64) {
        let i = self.locate(t);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let (v, d) = horner_d(&self.coeffs[i], (t - a) / (b - a));
        (v, d / (b - a))
    }

    /// Evaluates the piece ending at the break `xi` (extrapolated past it).
    pub fn eval_left_of(&self, xi: f64, t: f64) -> f64 {
        let i = self
            .breaks
            .partition_point(|&x| x < xi)
            .saturating_sub(1)
            .min(self.len() - 1);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        horner(&self.coeffs[i], (t - a) / (b - a))
    }

    /// Second derivative, used for smoothness diagnostics.
    pub fn eval_dd(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let s = (t - a) / (b - a);
        let c = &self.coeffs[i];
        let mut acc = 0.0;
        for k in (2..c.len()).rev() {
            acc = acc * s + (k * (k - 1)) as f64 * c[k];
        }
        acc / ((b - a) * (b - a))
    }

    /// Largest value jump between neighbouring pieces.
    pub fn max_gap(&self) -> f64 {
        (1..self.coeffs.len())
            .map(|i| {
                let left = self.coeffs[i - 1].iter().sum::<f64>();
                (left - self.coeffs[i][0]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.len() {
            for k in 0..=8 {
                m = m.max(horner(&self.coeffs[i], k as f64 / 8.0).abs());
            }
        }
        m
    }
}

/// Local power-basis coefficients of the cubic matching values and scaled slopes.
pub fn hermite_cubic(y0: f64, y1: f64, d0: f64, d1: f64) -> Vec<f64> {
    vec![
        y0,
        d0,
        3.0 * (y1 - y0) - 2.0 * d0 - d1,
        2.0 * (y0 - y1) + d0 + d1,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let df = |t: f64| -2.0 + 1.5 * t * t;
        let pp = PiecewisePoly::hermite(-2.0, 0.0, 3, f, df);
        for k in 0..=20 {
            let t = -2.0 + 0.1 * k as f64;
            assert!((pp.eval(t) - f(t)).abs() < 1e-13);
            assert!((pp.eval_d(t).1 - df(t)).abs() < 1e-12);
        }
        assert!(pp.max_gap() < 1e-14);
    }

    #[test]
    fn truncate_keeps_values() {
        let pp0 = PiecewisePoly::hermite(0.0, 4.0, 4, |t| t.sin(), |t| t.cos());
        let mut pp = pp0.clone();
        pp.truncate(2.5);
        assert_eq!(pp.len(), 3);
        assert_eq!(pp.end(), 2.5);
        for t in [0.1, 1.7, 2.2, 2.5] {
            assert!((pp.eval(t) - pp0.eval(t)).abs() < 1e-14);
        }
    }
}
