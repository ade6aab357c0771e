//! Model parameters, the reduced parameter chart near DZ and the closed-form loci.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pp::PiecewisePoly;

/// A point `(alpha, beta, b)` of `u' = alpha u(t) + beta u(t - 1 - u(t - b))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
}

impl Params {
    pub fn new(alpha: f64, beta: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && b.is_finite()) {
            return Err(Error::arg("parameters must be finite"));
        }
        if b < 0.0 {
            return Err(Error::arg(format!("b must be nonnegative, got {b}")));
        }
        Ok(Params { alpha, beta, b })
    }

    /// `alpha + beta < 0`; equilibria other than the origin are unstable there.
    pub fn is_physical(&self) -> bool {
        self.alpha + self.beta < 0.0
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
        }
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        match p {
            Param::Alpha => self.alpha = v,
            Param::Beta => self.beta = v,
        }
        self
    }

    /// Right-hand side for a state value `u` and the delayed value `u(t - 1 - u(t - b))`.
    #[inline]
    pub fn rhs(&self, u: f64, u_delayed: f64) -> f64 {
        self.alpha * u + self.beta * u_delayed
    }
}

/// Free parameter selector used by continuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha,
    Beta,
}

impl Param {
    pub fn other(self) -> Param {
        match self {
            Param::Alpha => Param::Beta,
            Param::Beta => Param::Alpha,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::Alpha => "alpha",
            Param::Beta => "beta",
        })
    }
}

impl std::str::FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Param::Alpha),
            "beta" => Ok(Param::Beta),
            _ => Err(Error::arg(format!("unknown parameter '{s}'"))),
        }
    }
}

/// Unfolding parameters near DZ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub p: f64,
    pub q: f64,
}

/// `(alpha - 1, beta + 1) = [[1/3, 1/2], [1/6, -1/2]] (p, q)`.
///
/// With this chart the Hopf curve is tangent to `q = 0` (with `p < 0`) and the
/// curve Z is `p = 0`, which is what the planar normal form assumes.
pub const REDUCED_MAP: [[f64; 2]; 2] = [[1.0 / 3.0, 0.5], [1.0 / 6.0, -0.5]];

pub fn to_reduced(alpha: f64, beta: f64) -> ReducedParams {
    let a = alpha - 1.0;
    let c = beta + 1.0;
    ReducedParams {
        p: 2.0 * (a + c),
        q: (2.0 * a - 4.0 * c) / 3.0,
    }
}

pub fn from_reduced(r: ReducedParams) -> (f64, f64) {
    let [[m11, m12], [m21, m22]] = REDUCED_MAP;
    (1.0 + m11 * r.p + m12 * r.q, -1.0 + m21 * r.p + m22 * r.q)
}

/// Point of the Hopf curve where `lambda = ±i theta` are characteristic roots.
pub fn hopf_point(theta: f64) -> Result<(f64, f64)> {
    if !(0.0..PI).contains(&theta) {
        return Err(Error::arg(format!("theta = {theta} outside (0, pi)")));
    }
    if theta < 1e-4 {
        let t2 = theta * theta;
        return Ok((
            1.0 - t2 / 3.0 - t2 * t2 / 45.0,
            -1.0 - t2 / 6.0 - 7.0 * t2 * t2 / 360.0,
        ));
    }
    Ok((theta / theta.tan(), -theta / theta.sin()))
}

/// `beta` on the line Z of simple zero roots.
pub fn zero_curve(alpha: f64) -> f64 {
    -alpha
}

/// `beta*` at which straight-line orbits `u = k* t` exist.
pub fn locus_l(alpha: f64, b: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::arg(format!("locus L needs 0 <= b < 1, got {b}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::arg(format!(
            "locus L needs 0 <= alpha <= 1, got {alpha}"
        )));
    }
    Ok(-(1.0 - alpha * b) / (1.0 - b))
}

/// Membership in L: the graph of `locus_l` plus the half-line `alpha = 0, beta <= -1/(1-b)`.
pub fn on_locus_l(alpha: f64, beta: f64, b: f64) -> bool {
    const TOL: f64 = 1e-10;
    if !(0.0..1.0).contains(&b) {
        return false;
    }
    if alpha.abs() <= TOL && beta <= -1.0 / (1.0 - b) + TOL {
        return true;
    }
    (-TOL..=1.0 + TOL).contains(&alpha) && ((1.0 - b) * beta + 1.0 - alpha * b).abs() <= TOL
}

/// Slope `k* = (1 - alpha) / (1 - alpha b)` of the straight-line orbits.
pub fn straightline_slope(alpha: f64, b: f64) -> Result<f64> {
    let cap = if b > 1.0 { 1.0 / b } else { 1.0 };
    if !(b >= 0.0 && alpha >= 0.0 && alpha <= cap) || 1.0 - alpha * b <= 0.0 {
        return Err(Error::arg(format!(
            "slope undefined for alpha = {alpha}, b = {b}"
        )));
    }
    Ok((1.0 - alpha) / (1.0 - alpha * b))
}

/// Initial function on `[-tau_max, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistorySegment {
    tau_max: f64,
    values: PiecewisePoly,
}

impl HistorySegment {
    pub fn new(values: PiecewisePoly) -> Result<Self> {
        if values.is_empty() || values.end().abs() > 1e-14 || values.start() >= 0.0 {
            return Err(Error::arg(
                "history must be defined on [-tau, 0] with tau > 0",
            ));
        }
        let tau_max = -values.start();
        Ok(HistorySegment { tau_max, values })
    }

    pub fn constant(c: f64, tau_max: f64) -> Self {
        HistorySegment {
            tau_max,
            values: PiecewisePoly::constant(-tau_max, 0.0, c),
        }
    }

    /// Cubic Hermite sampling of a smooth function.
    pub fn from_fn<F, D>(tau_max: f64, pieces: usize, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        HistorySegment {
            tau_max,
            values: PiecewisePoly::hermite(-tau_max, 0.0, pieces.max(1), f, df),
        }
    }

    /// `1 + max(b, max|u|) + 1/2`, enough for any first deviating argument.
    pub fn default_tau(b: f64, max_abs: f64) -> f64 {
        1.0 + b.max(max_abs) + 0.5
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.values.eval(s)
    }

    pub fn eval_d(&self, s: f64) -> (f64, f64) {
        self.values.eval_d(s)
    }

    pub fn poly(&self) -> &PiecewisePoly {
        &self.values
    }

    /// Checks that the first deviating arguments stay in the domain.
    pub fn covers(&self, b: f64) -> bool {
        let m = self.values.max_abs();
        self.tau_max >= b.max(1.0 + m) - 1e-14
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_chart() {
        let r = to_reduced(1.0, -1.0);
        assert_eq!((r.p, r.q), (0.0, 0.0));
        let (a, b) = from_reduced(ReducedParams { p: 1.0, q: 0.0 });
        assert!((a - 4.0 / 3.0).abs() < 1e-15 && (b + 5.0 / 6.0).abs() < 1e-15);
        let r = to_reduced(0.7, -1.3);
        let (a, b) = from_reduced(r);
        assert!((a - 0.7).abs() < 1e-14 && (b + 1.3).abs() < 1e-14);
    }

    #[test]
    fn hopf_curve_in_reduced_chart() {
        let (a, b) = hopf_point(1e-3).unwrap();
        let r = to_reduced(a, b);
        assert!(r.p < 0.0);
        assert!(r.q.abs() < 1e-3 * r.p.abs());
    }

    #[test]
    fn hopf_points() {
        let (a, b) = hopf_point(PI / 2.0).unwrap();
        assert!(a.abs() < 1e-15 && (b + PI / 2.0).abs() < 1e-15);
        let (a, b) = hopf_point(2.0 * PI / 3.0).unwrap();
        let s = 3f64.sqrt();
        assert!((a + 2.0 * PI / (3.0 * s)).abs() < 1e-14);
        assert!((b + 4.0 * PI / (3.0 * s)).abs() < 1e-14);
        assert_eq!(hopf_point(0.0).unwrap(), (1.0, -1.0));
        assert!(hopf_point(PI).is_err());
        let (a0, b0) = hopf_point(0.99e-4).unwrap();
        let (a1, b1) = hopf_point(1.01e-4).unwrap();
        assert!((a0 - a1).abs() < 1e-8 && (b0 - b1).abs() < 1e-8);
    }

    #[test]
    fn locus_examples() {
        assert_eq!(locus_l(0.5, 0.0).unwrap(), -1.0);
        assert_eq!(locus_l(0.0, 0.5).unwrap(), -2.0);
        assert!((locus_l(1.0, 0.7).unwrap() + 1.0).abs() < 1e-15);
        assert!(locus_l(0.5, 1.0).is_err());
        assert!(on_locus_l(0.0, -3.0, 0.2));
        assert!(on_locus_l(0.5, locus_l(0.5, 0.2).unwrap(), 0.2));
        assert!(!on_locus_l(0.5, -3.0, 0.2));
    }

    #[test]
    fn slopes() {
        assert!((straightline_slope(0.3, 0.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(straightline_slope(0.0, 0.4).unwrap(), 1.0);
        assert!((straightline_slope(0.5, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(straightline_slope(-0.1, 0.0).is_err());
    }

    #[test]
    fn params_validate() {
        assert!(Params::new(0.0, -1.0, -0.1).is_err());
        assert!(Params::new(f64::NAN, -1.0, 0.0).is_err());
        assert!(Params::new(0.2, -1.0, 0.0).unwrap().is_physical());
    }
}
