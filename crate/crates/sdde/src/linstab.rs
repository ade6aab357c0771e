//! Roots of the characteristic function `chi(l) = l - alpha - beta exp(-l)` of the
//! linearization about `u = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Params;

pub const DEFAULT_NODES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharRoot {
    pub lambda: Complex64,
    pub multiplicity: u8,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RootSet {
    pub roots: Vec<CharRoot>,
    /// Seeds whose Newton refinement failed.
    pub dropped: usize,
}

impl RootSet {
    pub fn rightmost(&self) -> Option<&CharRoot> {
        self.roots.first()
    }

    pub fn n_unstable(&self) -> usize {
        self.roots
            .iter()
            .filter(|r| r.lambda.re > 0.0)
            .map(|r| r.multiplicity as usize)
            .sum()
    }
}

pub fn char_fn(lambda: Complex64, p: &Params) -> Complex64 {
    lambda - p.alpha - p.beta * (-lambda).exp()
}

pub fn char_fn_d(lambda: Complex64, p: &Params) -> Complex64 {
    1.0 + p.beta * (-lambda).exp()
}

fn char_fn_dd(lambda: Complex64, p: &Params) -> Complex64 {
    -p.beta * (-lambda).exp()
}

/// Chebyshev points `x_j = cos(pi j / n)` and the differentiation matrix on `[-1, 1]`.
pub fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 } * if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Eigenvalues of the collocated generator on `[-1, 0]` with `n + 1` nodes.
pub fn generator_eigenvalues(p: &Params, n: usize) -> Vec<Complex64> {
    let (_, d) = cheb(n);
    let mut a = d * 2.0;
    for j in 0..=n {
        a[(0, j)] = 0.0;
    }
    a[(0, 0)] = p.alpha;
    a[(0, n)] += p.beta;
    a.complex_eigenvalues().iter().copied().collect()
}

enum Refined {
    Simple(Complex64),
    Double(Complex64),
}

fn newton<F, D>(mut z: Complex64, f: F, df: D) -> Option<Complex64>
where
    F: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
{
    for _ in 0..80 {
        let d = df(z);
        if d.norm() == 0.0 {
            return None;
        }
        let step = f(z) / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    if f(z).norm() < 1e-10 {
        Some(z)
    } else {
        None
    }
}

fn refine(seed: Complex64, p: &Params) -> Option<Refined> {
    let simple = newton(seed, |z| char_fn(z, p), |z| char_fn_d(z, p));
    let near_double = match simple {
        Some(z) => char_fn_d(z, p).norm() < 1e-6,
        None => char_fn_d(seed, p).norm() < 1e-2,
    };
    if near_double {
        let start = simple.unwrap_or(seed);
        if let Some(z) = newton(start, |z| char_fn_d(z, p), |z| char_fn_dd(z, p)) {
            if char_fn(z, p).norm() < 1e-10 {
                return Some(Refined::Double(z));
            }
        }
    }
    let z = simple?;
    (char_fn(z, p).norm() < 1e-10).then_some(Refined::Simple(z))
}

fn snap_real(z: Complex64, p: &Params, double: bool) -> Complex64 {
    if z.im.abs() > 1e-9 {
        return z;
    }
    let r = Complex64::new(z.re, 0.0);
    let polished = if double {
        newton(r, |z| char_fn_d(z, p), |z| char_fn_dd(z, p))
    } else {
        newton(r, |z| char_fn(z, p), |z| char_fn_d(z, p))
    };
    Complex64::new(polished.map_or(z.re, |w| w.re), 0.0)
}

/// The `n` characteristic roots with largest real part, conjugate pairs kept together.
pub fn rightmost_roots(p: &Params, n: usize) -> Result<RootSet> {
    rightmost_roots_with(p, n, DEFAULT_NODES)
}

pub fn rightmost_roots_with(p: &Params, n: usize, nodes: usize) -> Result<RootSet> {
    if n == 0 {
        return Err(Error::arg("need at least one root"));
    }
    let mut seeds = generator_eigenvalues(p, nodes);
    seeds.retain(|z| z.im >= -1e-12 && z.norm() < 0.5 * nodes as f64 + 4.0);
    seeds.sort_by(|a, b| b.re.total_cmp(&a.re));
    let mut found: Vec<CharRoot> = Vec::new();
    let mut dropped = 0;
    for s in seeds {
        let (z, mult) = match refine(s, p) {
            Some(Refined::Simple(z)) => (snap_real(z, p, false), 1u8),
            Some(Refined::Double(z)) => (snap_real(z, p, true), 2u8),
            None => {
                dropped += 1;
                continue;
            }
        };
        let z = if z.im < 0.0 { z.conj() } else { z };
        if let Some(prev) = found.iter_mut().find(|r| (r.lambda - z).norm() < 1e-6) {
            let mid = (prev.lambda + z) * 0.5;
            if mult == 2 || (char_fn_d(mid, p).norm() < 1e-6 && (prev.lambda - z).norm() > 1e-12) {
                prev.multiplicity = 2;
                if mult == 2 {
                    prev.lambda = z;
                }
            }
            continue;
        }
        found.push(CharRoot {
            lambda: z,
            multiplicity: mult,
        });
    }
    found.sort_by(|a, b| {
        b.lambda
            .re
            .total_cmp(&a.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    let mut roots = Vec::new();
    for r in found {
        if roots.len() >= n {
            break;
        }
        if r.lambda.im != 0.0 {
            roots.push(r);
            roots.push(CharRoot {
                lambda: r.lambda.conj(),
                multiplicity: r.multiplicity,
            });
        } else {
            roots.push(r);
        }
    }
    Ok(RootSet { roots, dropped })
}

/// Solves `theta cot theta = alpha` on `(0, pi)`.
pub fn hopf_theta_at(alpha: f64) -> Result<f64> {
    if !(alpha < 1.0) {
        return Err(Error::arg(format!(
            "no Hopf point with alpha = {alpha} >= 1"
        )));
    }
    let g = |t: f64| t / t.tan() - alpha;
    let (mut lo, mut hi) = (0.0f64, PI);
    if 1.0 - alpha < 1e-12 {
        return Ok((3.0 * (1.0 - alpha)).sqrt());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid == 0.0 || g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `theta / sin(theta) = -beta` on `(0, pi)`: the Hopf point at a given beta.
pub fn hopf_theta_at_beta(beta: f64) -> Result<f64> {
    if !(beta < -1.0) {
        return Err(Error::arg(format!(
            "no Hopf point with beta = {beta} >= -1"
        )));
    }
    if -1.0 - beta < 1e-12 {
        return Ok((6.0 * (-1.0 - beta)).sqrt());
    }
    let g = |t: f64| t / t.sin() + beta;
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid == 0.0 || g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_theta_by_beta_inverts_the_curve() {
        for beta in [-1.01, -1.5, -2.0, -5.0] {
            let th = hopf_theta_at_beta(beta).unwrap();
            assert!((th / th.sin() + beta).abs() < 1e-12);
        }
    }

    #[test]
    fn char_fn_zeros() {
        let p = Params::new(0.3, -0.3, 0.0).unwrap();
        assert_eq!(char_fn(Complex64::new(0.0, 0.0), &p).norm(), 0.0);
        let p = Params::new(0.0, -PI / 2.0, 0.0).unwrap();
        assert!(char_fn(Complex64::new(0.0, PI / 2.0), &p).norm() < 1e-15);
        let p = Params::new(-1.0, 0.0, 0.0).unwrap();
        assert_eq!(char_fn(Complex64::new(-1.0, 0.0), &p).norm(), 0.0);
    }

    #[test]
    fn cheb_differentiates() {
        let (x, d) = cheb(12);
        let f: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        for i in 0..=12 {
            let df: f64 = (0..=12).map(|j| d[(i, j)] * f[j]).sum();
            assert!((df - x[i].cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn double_zero() {
        let p = Params::new(1.0, -1.0, 0.0).unwrap();
        let rs = rightmost_roots(&p, 1).unwrap();
        let r = rs.roots[0];
        assert_eq!(r.multiplicity, 2);
        assert!(r.lambda.norm() < 1e-10);
    }

    #[test]
    fn theta_at() {
        assert!((hopf_theta_at(0.0).unwrap() - PI / 2.0).abs() < 1e-14);
        let t = hopf_theta_at(-5.0).unwrap();
        assert!(t > PI / 2.0 && (t / t.tan() + 5.0).abs() < 1e-12);
        assert!(hopf_theta_at(1.0).is_err());
    }
}
