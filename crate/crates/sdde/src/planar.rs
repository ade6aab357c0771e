//! The truncated center-manifold field `y' = v, v' = F(y, v; p, q, b)`: simulation,
//! slow manifold, conserved quantity, and Hopf/fold-of-orbit analysis.

use faer::sparse::Triplet;
use serde::Serialize;

use crate::cmf::poly::{Exp, MPoly, QPoly};
use crate::colloc::{self, Extended, Field, Lin, Mesh, Profile, MAX_DIM};
use crate::continuation::{fold_tf_of, no_rows, FoldRows, Track};
use crate::error::{Error, Result};
use crate::orbit::{physical_guard, NEWTON_TOL};
use crate::pp::horner;
use crate::simulate::{A, D, E};
use crate::table::{Cell, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarVF {
    f: MPoly<QPoly>,
    order: usize,
}

/// `F` with `b` fixed, as floating-point monomials in `(y, v, p, q)`.
#[derive(Clone, Debug)]
pub struct NumericVF {
    terms: Vec<(Exp, f64)>,
    max_exp: [usize; 4],
}

impl PlanarVF {
    pub fn new(f: MPoly<QPoly>, order: usize) -> Self {
        PlanarVF { f, order }
    }

    pub fn f(&self) -> &MPoly<QPoly> {
        &self.f
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn at_b(&self, b: f64) -> NumericVF {
        let terms: Vec<(Exp, f64)> = self
            .f
            .0
            .iter()
            .map(|(e, c)| (*e, c.eval_f64(b)))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        let mut max_exp = [0usize; 4];
        for (e, _) in &terms {
            for i in 0..4 {
                max_exp[i] = max_exp[i].max(e[i] as usize);
            }
        }
        NumericVF { terms, max_exp }
    }
}

fn powers(x: f64, n: usize) -> [f64; 16] {
    let mut p = [0.0; 16];
    p[0] = 1.0;
    for k in 1..=n.min(15) {
        p[k] = p[k - 1] * x;
    }
    p
}

impl NumericVF {
    /// `F(y, v; p, q)`.
    pub fn eval(&self, y: f64, v: f64, p: f64, q: f64) -> f64 {
        self.eval_grad(y, v, p, q).0
    }

    /// `F` with its partial derivatives in `y` and `v`.
    pub fn eval_grad(&self, y: f64, v: f64, p: f64, q: f64) -> (f64, f64, f64) {
        let py = powers(y, self.max_exp[0]);
        let pv = powers(v, self.max_exp[1]);
        let pp = powers(p, self.max_exp[2]);
        let pq = powers(q, self.max_exp[3]);
        let (mut f, mut fy, mut fv) = (0.0, 0.0, 0.0);
        for (e, c) in &self.terms {
            let (a, b) = (e[0] as usize, e[1] as usize);
            let base = c * pp[e[2] as usize] * pq[e[3] as usize];
            f += base * py[a] * pv[b];
            if a > 0 {
                fy += base * a as f64 * py[a - 1] * pv[b];
            }
            if b > 0 {
                fv += base * b as f64 * py[a] * pv[b - 1];
            }
        }
        (f, fy, fv)
    }

    /// Partial derivative of `F` with respect to `p` or `q` (`which` = 2 or 3).
    pub fn eval_dparam(&self, y: f64, v: f64, p: f64, q: f64, which: usize) -> f64 {
        let vals = [y, v, p, q];
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let k = e[which] as i32;
            if k == 0 {
                continue;
            }
            let mut t = c * k as f64;
            for i in 0..4 {
                let ex = if i == which { k - 1 } else { e[i] as i32 };
                t *= vals[i].powi(ex);
            }
            s += t;
        }
        s
    }
}

/// Index of `p` and `q` in the planar parameter vector.
pub const P: usize = 0;
pub const Q: usize = 1;

/// State `(y, ẏ)` sampled with dense output.
#[derive(Clone, Debug)]
pub struct PlanarTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<[f64; 2]>,
    coeffs: Vec<[[f64; 5]; 2]>,
    /// Time at which `|state|` exceeded the divergence threshold.
    pub diverged: Option<f64>,
}

/// Blow-up threshold for planar integration.
pub const DIVERGENCE: f64 = 1e8;

impl PlanarTrajectory {
    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    pub fn last(&self) -> [f64; 2] {
        *self.x.last().unwrap_or(&[0.0, 0.0])
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        let n = self.coeffs.len();
        if n == 0 {
            return self.x[0];
        }
        let i = self
            .t
            .partition_point(|&ti| ti <= t)
            .saturating_sub(1)
            .min(n - 1);
        let h = self.t[i + 1] - self.t[i];
        let th = (t - self.t[i]) / h;
        [
            horner(&self.coeffs[i][0], th),
            horner(&self.coeffs[i][1], th),
        ]
    }
}

fn planar_rhs(vf: &NumericVF, x: [f64; 2], p: f64, q: f64) -> [f64; 2] {
    [x[1], vf.eval(x[0], x[1], p, q)]
}

/// Adaptive Dormand-Prince integration of `y'' = F(y, y'; p, q)` on `tspan`
/// with relative and absolute tolerance `tol`.
pub fn simulate_planar(
    vf: &NumericVF,
    init: [f64; 2],
    p: f64,
    q: f64,
    tspan: (f64, f64),
    tol: f64,
) -> Result<PlanarTrajectory> {
    let (t0, t1) = tspan;
    if !(t1 > t0) || !(tol > 0.0) || !init.iter().all(|v| v.is_finite()) {
        return Err(Error::Argument(format!(
            "bad planar integration request: tspan {tspan:?}, tol {tol}"
        )));
    }
    let mut tr = PlanarTrajectory {
        t: vec![t0],
        x: vec![init],
        coeffs: vec![],
        diverged: None,
    };
    let (mut t, mut x) = (t0, init);
    let mut h = (1e-2 * (t1 - t0)).min(0.1);
    let mut k = [[0.0; 2]; 7];
    k[0] = planar_rhs(vf, x, p, q);
    let max_steps = 10_000_000usize;
    let mut steps = 0;
    while t < t1 {
        steps += 1;
        if steps > max_steps {
            return Err(Error::Numerical(
                "planar integration exceeded the step limit".into(),
            ));
        }
        h = h.min(t1 - t);
        for s in 1..7 {
            let mut xs = x;
            for c in 0..2 {
                xs[c] += h * (0..s).map(|j| A[s][j] * k[j][c]).sum::<f64>();
            }
            k[s] = planar_rhs(vf, xs, p, q);
        }
        let mut x5 = x;
        let mut err = 0.0f64;
        for c in 0..2 {
            x5[c] += h * (0..6).map(|j| A[6][j] * k[j][c]).sum::<f64>();
            let e = h * (0..7).map(|j| E[j] * k[j][c]).sum::<f64>();
            let sc = tol + tol * x[c].abs().max(x5[c].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Numerical(format!("step size underflow at t = {t}")));
            }
            continue;
        }
        if err <= 1.0 {
            let mut cf = [[0.0; 5]; 2];
            for c in 0..2 {
                let ydiff = x5[c] - x[c];
                let bspl = h * k[0][c] - ydiff;
                let r5 = h * (0..7).map(|j| D[j] * k[j][c]).sum::<f64>();
                let r4 = ydiff - h * k[6][c] - bspl;
                cf[c] = [x[c], ydiff + bspl, r4 + r5 - bspl, -r4 - 2.0 * r5, r5];
            }
            t += h;
            x = x5;
            k[0] = k[6];
            tr.t.push(t);
            tr.x.push(x);
            tr.coeffs.push(cf);
            if x[0].abs().max(x[1].abs()) > DIVERGENCE {
                tr.diverged = Some(t);
                break;
            }
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::Numerical(format!("step size underflow at t = {t}")));
        }
    }
    Ok(tr)
}

/// Velocity in the time frame sped up by `-p`: `v = ẏ / (-p)`.
pub fn rescaled_velocity(ydot: f64, p: f64) -> f64 {
    ydot / (-p)
}

/// `V(y, v) = -log(p v - p/2) - 2 v - 2 y^2 / p`, with `v` the rescaled velocity.
pub fn conserved_v(y: f64, v: f64, p: f64) -> Result<f64> {
    let arg = p * v - 0.5 * p;
    if !(p < 0.0) || !(arg > 0.0) {
        return Err(Error::Argument(format!(
            "V undefined at (y, v, p) = ({y}, {v}, {p})"
        )));
    }
    Ok(-arg.ln() - 2.0 * v - 2.0 * y * y / p)
}

/// `V` at the state `(y, ẏ)` of the original time frame.
pub fn conserved_v_at(state: [f64; 2], p: f64) -> Result<f64> {
    conserved_v(state[0], rescaled_velocity(state[1], p), p)
}

/// The slow manifold `v = y / (q + 2y)` of the rescaled second-order system.
pub fn slow_manifold_v(y: f64, q: f64) -> Result<f64> {
    let den = q + 2.0 * y;
    if den == 0.0 {
        return Err(Error::Argument(format!(
            "slow manifold has a pole at y = {y}, q = {q}"
        )));
    }
    Ok(y / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlowStability {
    Stable,
    Unstable,
}

/// Transversal stability of the slow manifold: stable for `y < -q/2`.
pub fn slow_manifold_stability(y: f64, q: f64) -> Result<SlowStability> {
    let d = y + 0.5 * q;
    if d == 0.0 {
        return Err(Error::Argument(format!(
            "y = -q/2 = {y} is the pole of the slow manifold"
        )));
    }
    Ok(if d < 0.0 {
        SlowStability::Stable
    } else {
        SlowStability::Unstable
    })
}

/// Right-hand side of `(-p) v' = -y + q v + 2 y v - (2/3 - 2b) p v^2`.
pub fn rescaled_fast_rhs(y: f64, v: f64, p: f64, q: f64, b: f64) -> f64 {
    -y + q * v + 2.0 * y * v - (2.0 / 3.0 - 2.0 * b) * p * v * v
}

/// Trace and determinant of the Jacobian at the origin.
pub fn origin_jacobian(vf: &NumericVF, p: f64, q: f64) -> (f64, f64) {
    let (_, fy, fv) = vf.eval_grad(0.0, 0.0, p, q);
    (fv, -fy)
}

/// `q` on the Hopf curve for given `p`: vanishing trace with positive determinant.
pub fn hopf_q(vf: &NumericVF, p: f64) -> Result<f64> {
    let tr = |q: f64| origin_jacobian(vf, p, q).0;
    let (mut q0, mut q1) = (0.0, 1e-3);
    let (mut f0, mut f1) = (tr(q0), tr(q1));
    for _ in 0..60 {
        if f1 == f0 {
            break;
        }
        let q2 = q1 - f1 * (q1 - q0) / (f1 - f0);
        q0 = q1;
        f0 = f1;
        q1 = q2;
        f1 = tr(q1);
        if f1.abs() < 1e-15 {
            break;
        }
    }
    if !(f1.abs() < 1e-12) || !q1.is_finite() {
        return Err(Error::Convergence {
            at: p,
            reason: "no Hopf point found".into(),
        });
    }
    let (_, det) = origin_jacobian(vf, p, q1);
    if !(det > 0.0) {
        return Err(Error::Precondition(format!(
            "Jacobian at p = {p} has det {det} <= 0"
        )));
    }
    Ok(q1)
}

/// Change of `V` over one revolution of the orbit through `(y0, 0)`; the sign
/// indicates whether orbits spiral out (positive) or in (negative).
pub fn v_drift(vf: &NumericVF, p: f64, q: f64, y0: f64, tol: f64) -> Result<f64> {
    let (_, det) = origin_jacobian(vf, p, q);
    if !(det > 0.0) {
        return Err(Error::Precondition("origin is not a focus".into()));
    }
    let period = 2.0 * std::f64::consts::PI / det.sqrt();
    let tr = simulate_planar(vf, [y0, 0.0], p, q, (0.0, 3.0 * period), tol)?;
    if tr.diverged.is_some() {
        return Err(Error::Numerical(
            "orbit diverged before completing a revolution".into(),
        ));
    }
    // a revolution: ẏ turns positive on the y < 0 side, then returns to zero from above
    let ydot = |t: f64| tr.eval(t)[1];
    let mut half = false;
    for w in tr.t.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (da, db) = (ydot(a), ydot(b));
        if !half {
            half = da < 0.0 && db >= 0.0;
            continue;
        }
        if da > 0.0 && db <= 0.0 {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-14 * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                if ydot(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let end = tr.eval(0.5 * (lo + hi));
            return Ok(conserved_v_at(end, p)? - conserved_v_at([y0, 0.0], p)?);
        }
    }
    Err(Error::Numerical(
        "no return to the section within three periods".into(),
    ))
}

/// `(y, ẏ)' = T (ẏ, F(y, ẏ; p, q))` as a collocation field; parameters `[p, q]`.
#[derive(Clone, Debug)]
pub struct PlanarField {
    pub vf: NumericVF,
}

impl Field for PlanarField {
    fn dim(&self) -> usize {
        2
    }

    fn eval(
        &self,
        s: f64,
        prof: &Profile,
        period: f64,
        par: &[f64],
        lin: Option<&mut Lin>,
    ) -> [f64; MAX_DIM] {
        let (p, q) = (par[P], par[Q]);
        let y = prof.value(0, s);
        let v = prof.value(1, s);
        let (f, fy, fv) = self.vf.eval_grad(y, v, p, q);
        if let Some(lin) = lin {
            lin.point(0, 1, s, period);
            lin.point(1, 0, s, period * fy);
            lin.point(1, 1, s, period * fv);
            lin.dt = [v, f];
            lin.dpar[1][P] = period * self.vf.eval_dparam(y, v, p, q, 2);
            lin.dpar[1][Q] = period * self.vf.eval_dparam(y, v, p, q, 3);
        }
        [period * v, period * f]
    }
}

/// Periodic orbit of the planar field.
#[derive(Clone, Debug)]
pub struct PlanarOrbit {
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub mesh: Mesh,
    /// Node-major `(y, ẏ)` values.
    pub x: Vec<f64>,
    pub period: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlanarMetrics {
    pub period: f64,
    pub amplitude: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl PlanarOrbit {
    pub fn profile(&self) -> Profile<'_> {
        Profile {
            mesh: &self.mesh,
            x: &self.x,
            dim: 2,
        }
    }

    pub fn metrics(&self) -> PlanarMetrics {
        let (lo, _, hi) = self.profile().range(0);
        PlanarMetrics {
            period: self.period,
            amplitude: hi - lo,
            min_y: lo,
            max_y: hi,
        }
    }

    fn z(&self, free: usize) -> Vec<f64> {
        let mut z = self.x.clone();
        z.push(self.period);
        z.push(if free == P { self.p } else { self.q });
        z
    }
}

const PLANAR_INTERVALS: usize = 40;

fn pinned_solve(field: &PlanarField, guess: &PlanarOrbit, amp: f64) -> Result<PlanarOrbit> {
    let prof = guess.profile();
    let ext = Extended {
        field,
        mesh: &guess.mesh,
        par: vec![guess.p, guess.q],
        free: vec![Q],
        phase_ref: colloc::phase_reference(&prof),
        n_aux: 0,
    };
    let mut z = guess.z(Q);
    let mut pin = |z: &[f64],
                   wj: bool,
                   row: usize,
                   res: &mut Vec<f64>,
                   jac: &mut Vec<Triplet<usize, usize, f64>>| {
        res.push(z[0] - amp);
        if wj {
            jac.push(Triplet::new(row, 0, 1.0));
        }
        Ok(())
    };
    let n_x = ext.layout().n_x();
    ext.solve(
        &mut z,
        &mut pin,
        &physical_guard(n_x, f64::NEG_INFINITY),
        20,
        NEWTON_TOL,
    )?;
    let po = PlanarOrbit {
        x: z[..n_x].to_vec(),
        period: z[n_x],
        q: z[n_x + 1],
        ..guess.clone()
    };
    if po.metrics().amplitude < 0.5 * amp {
        return Err(Error::Convergence {
            at: guess.p,
            reason: "pinned planar orbit collapsed".into(),
        });
    }
    Ok(po)
}

/// Small orbit near the Hopf point at `p`, with `y(0) = eps` and `q` free.
pub fn planar_hopf_orbit(vf: &NumericVF, b: f64, p: f64, eps: f64) -> Result<PlanarOrbit> {
    let qh = hopf_q(vf, p)?;
    let (_, det) = origin_jacobian(vf, p, qh);
    let w = det.sqrt();
    let mesh = Mesh::uniform(PLANAR_INTERVALS);
    let two_pi = 2.0 * std::f64::consts::PI;
    let x: Vec<f64> = mesh
        .nodes()
        .iter()
        .flat_map(|&s| [eps * (two_pi * s).cos(), -eps * w * (two_pi * s).sin()])
        .collect();
    let guess = PlanarOrbit {
        b,
        p,
        q: qh,
        mesh,
        x,
        period: two_pi / w,
    };
    pinned_solve(&PlanarField { vf: vf.clone() }, &guess, eps)
}

/// Planar criticality from the fit `q - q_H = c A^2 + d A^4`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlanarCriticality {
    pub p: f64,
    pub q_h: f64,
    pub c: f64,
    pub d: f64,
    pub r2: f64,
}

/// Pinned amplitudes used for the criticality fit, scaled with `sqrt(-p)`.
fn fit_amplitudes(p: f64) -> Vec<f64> {
    (0..6)
        .map(|k| (-p).sqrt() * (0.01 + 0.04 * k as f64 / 5.0))
        .collect()
}

pub fn planar_criticality(vf: &NumericVF, b: f64, p: f64) -> Result<PlanarCriticality> {
    let field = PlanarField { vf: vf.clone() };
    let qh = hopf_q(vf, p)?;
    let eps = fit_amplitudes(p);
    let mut po = planar_hopf_orbit(vf, b, p, eps[0])?;
    let (mut a, mut d) = (vec![], vec![]);
    for (k, &e) in eps.iter().enumerate() {
        if k > 0 {
            po = pinned_solve(&field, &po, e)?;
        }
        a.push(0.5 * po.metrics().amplitude);
        d.push(po.q - qh);
    }
    let (c, dd, r2) = fit_even(&a, &d);
    if !(r2 >= 0.99) {
        return Err(Error::Convergence {
            at: p,
            reason: format!("planar criticality fit rejected, R^2 = {r2}"),
        });
    }
    Ok(PlanarCriticality {
        p,
        q_h: qh,
        c,
        d: dd,
        r2,
    })
}

/// Least squares `y = c x^2 + d x^4`, returning `(c, d, R^2)`.
fn fit_even(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut s22, mut s24, mut s44, mut r2_, mut r4_) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let (x2, x4) = (xi * xi, xi.powi(4));
        s22 += x2 * x2;
        s24 += x2 * x4;
        s44 += x4 * x4;
        r2_ += x2 * yi;
        r4_ += x4 * yi;
    }
    let det = s22 * s44 - s24 * s24;
    let c = (r2_ * s44 - r4_ * s24) / det;
    let d = (s22 * r4_ - s24 * r2_) / det;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        ss_res += (yi - c * xi * xi - d * xi.powi(4)).powi(2);
        ss_tot += (yi - mean).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (c, d, r2)
}

/// Generalized Hopf point in `p` at fixed `b`, by bisection on the sign of `c`.
pub fn planar_gh(
    vf: &NumericVF,
    b: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<PlanarCriticality> {
    let (mut lo, mut hi) = bracket;
    let clo = planar_criticality(vf, b, lo)?;
    let chi = planar_criticality(vf, b, hi)?;
    if clo.c * chi.c > 0.0 {
        return Err(Error::Argument(format!(
            "planar criticality has one sign on [{lo}, {hi}]"
        )));
    }
    let s_lo = clo.c.signum();
    let mut last = clo;
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        let cm = planar_criticality(vf, b, mid)?;
        if cm.c.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        last = cm;
    }
    let p = 0.5 * (lo + hi);
    Ok(PlanarCriticality {
        p,
        q_h: hopf_q(vf, p)?,
        c: 0.0,
        ..last
    })
}

/// Fold of planar periodic orbits found on the branch from the Hopf point.
#[derive(Clone, Debug)]
pub struct PlanarFold {
    pub orbit: PlanarOrbit,
    pub metrics: PlanarMetrics,
    /// Residual of the extended fold system at the refined point.
    pub residual: f64,
}

/// Planar continuation settings.
#[derive(Clone, Debug, Serialize)]
pub struct PlanarOptions {
    pub max_steps: usize,
    pub h0: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Stop once the orbit amplitude in `y` exceeds this.
    pub max_amplitude: f64,
    pub period_cap: f64,
}

impl Default for PlanarOptions {
    fn default() -> Self {
        PlanarOptions {
            max_steps: 200,
            h0: 0.02,
            h_max: 0.5,
            h_min: 1e-8,
            max_amplitude: 1.0,
            period_cap: 1e4,
        }
    }
}

/// Continues the orbit branch in `q` from the Hopf point at fixed `(b, p)`; returns
/// the first fold of periodic orbits, if any, refined on the extended fold system.
pub fn planar_fold(
    vf: &NumericVF,
    b: f64,
    p: f64,
    opts: &PlanarOptions,
) -> Result<Option<PlanarFold>> {
    let field = PlanarField { vf: vf.clone() };
    let eps = fit_amplitudes(p);
    let o1 = planar_hopf_orbit(vf, b, p, eps[0])?;
    let o2 = pinned_solve(&field, &o1, 2.0 * eps[0])?;
    let mut track = Track::with_field(
        field,
        vec![p, o1.q],
        vec![Q],
        0,
        o1.mesh.clone(),
        o1.z(Q),
        f64::NEG_INFINITY,
    );
    track.accept(o2.z(Q));
    let tf_at = |track: &Track<PlanarField>, z: &[f64], dir: &[f64]| {
        track
            .tangent_at(z, dir, &mut no_rows)
            .map(|t| fold_tf_of(track, &t))
    };
    let sec = track.secant();
    let mut tf = tf_at(&track, &track.cur.clone(), &sec)?;
    let mut h = opts.h0;
    let mut since_remesh = 0;
    for _ in 0..opts.max_steps {
        let sec = track.secant();
        let pred: Vec<f64> = track.cur.iter().zip(&sec).map(|(z, s)| z + h * s).collect();
        match track.correct(&pred, &sec, &mut no_rows, 10) {
            Ok((z, rep)) => {
                let tf_new = tf_at(&track, &z, &sec).unwrap_or(tf);
                let za = track.cur.clone();
                track.accept(z);
                if tf * tf_new < 0.0 {
                    return refine_planar_fold(&track, &za, b, p).map(Some);
                }
                tf = tf_new;
                let n_x = track.n_x();
                let prof = Profile {
                    mesh: &track.mesh,
                    x: &track.cur[..n_x],
                    dim: 2,
                };
                let (lo, _, hi) = prof.range(0);
                if hi - lo > opts.max_amplitude || track.cur[n_x] > opts.period_cap {
                    return Ok(None);
                }
                if rep.iters <= 4 {
                    h = (h * 1.5).min(opts.h_max);
                }
                since_remesh += 1;
                if since_remesh >= 5 {
                    let n = track
                        .suggested_intervals(&crate::continuation::ContOptions::default())
                        .max(PLANAR_INTERVALS);
                    track.remesh(n);
                    since_remesh = 0;
                }
            }
            Err(_) => {
                h *= 0.5;
                if h < opts.h_min {
                    return Ok(None);
                }
            }
        }
    }
    Ok(None)
}

fn refine_planar_fold(
    track: &Track<PlanarField>,
    za: &[f64],
    b: f64,
    p: f64,
) -> Result<PlanarFold> {
    let zb = &track.cur;
    let z0: Vec<f64> = za.iter().zip(zb).map(|(a, b)| 0.5 * (a + b)).collect();
    let dir: Vec<f64> = zb.iter().zip(za).map(|(a, b)| a - b).collect();
    let t = track.tangent_at(&z0, &dir, &mut no_rows).ok();
    let mut fr = FoldRows::new(track, &z0, t.as_deref());
    let mut rows = |ext: &Extended<PlanarField>,
                    z: &[f64],
                    wj: bool,
                    row: usize,
                    res: &mut Vec<f64>,
                    jac: &mut Vec<_>| { fr.rows(ext, z, wj, row, res, jac) };
    let (z, rep) = track.solve_fixed(&z0, &mut rows, 20)?;
    let n_x = track.n_x();
    let orbit = PlanarOrbit {
        b,
        p,
        q: z[n_x + 1],
        mesh: track.mesh.clone(),
        x: z[..n_x].to_vec(),
        period: z[n_x],
    };
    Ok(PlanarFold {
        metrics: orbit.metrics(),
        orbit,
        residual: rep.residual,
    })
}

/// Grid of the three-parameter sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepGrid {
    pub b: Vec<f64>,
    /// Values of `p` (negative) at which H and F are sampled.
    pub p: Vec<f64>,
    /// Bisection tolerance in `p` for GH points.
    pub p_tol: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let b = (0..=20).map(|k| 0.25 + 0.01 * k as f64).collect();
        let p = (1..=10).map(|k| -0.025 * k as f64).collect();
        SweepGrid { b, p, p_tol: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlanarObject {
    H,
    F,
    GH,
    Z,
}

impl std::fmt::Display for PlanarObject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanarObject::H => "H",
            PlanarObject::F => "F",
            PlanarObject::GH => "GH",
            PlanarObject::Z => "Z",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub object: PlanarObject,
    pub orbit: Option<PlanarMetrics>,
    pub residual: Option<f64>,
}

/// One `b` section of the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSection {
    pub b: f64,
    pub rows: Vec<SweepRow>,
    pub gh: Option<PlanarCriticality>,
    /// Criticality coefficient at each grid `p` (None where the fit failed).
    pub c: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub sections: Vec<SweepSection>,
    /// Value of `b` on the GH curve extrapolated to `p = 0`.
    pub gh_b_at_zero: Option<f64>,
}

impl SweepResult {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.sections.iter().flat_map(|s| s.rows.iter())
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "b",
            "p",
            "q",
            "object",
            "period",
            "amplitude",
            "min_y",
            "max_y",
            "residual",
        ]);
        for r in self.rows() {
            let m = r.orbit;
            t.push(vec![
                r.b.into(),
                r.p.into(),
                r.q.into(),
                Cell::S(r.object.to_string()),
                m.map(|m| m.period).into(),
                m.map(|m| m.amplitude).into(),
                m.map(|m| m.min_y).into(),
                m.map(|m| m.max_y).into(),
                r.residual.into(),
            ]);
        }
        t
    }
}

fn sweep_section(vf: &PlanarVF, b: f64, grid: &SweepGrid, opts: &PlanarOptions) -> SweepSection {
    let nv = vf.at_b(b);
    let mut rows = Vec::new();
    let row = |p: f64, q: f64, object, orbit, residual| SweepRow {
        b,
        p,
        q,
        object,
        orbit,
        residual,
    };
    rows.push(row(0.0, 0.0, PlanarObject::Z, None, None));
    let mut c = Vec::with_capacity(grid.p.len());
    for &p in &grid.p {
        if let Ok(q) = hopf_q(&nv, p) {
            rows.push(row(p, q, PlanarObject::H, None, None));
        }
        c.push(planar_criticality(&nv, b, p).ok().map(|k| k.c));
    }
    // GH: first sign change of c along the grid, outward from p = 0
    let mut gh = None;
    for k in 1..grid.p.len() {
        if let (Some(c0), Some(c1)) = (c[k - 1], c[k]) {
            if c0 * c1 < 0.0 {
                gh = planar_gh(&nv, b, (grid.p[k - 1], grid.p[k]), grid.p_tol).ok();
                break;
            }
        }
    }
    if let Some(g) = gh {
        rows.push(row(g.p, g.q_h, PlanarObject::GH, None, None));
    }
    // folds of periodic orbits where the Hopf point is subcritical (c < 0)
    for (k, &p) in grid.p.iter().enumerate() {
        if c[k].is_some_and(|ck| ck < 0.0) {
            if let Ok(Some(f)) = planar_fold(&nv, b, p, opts) {
                rows.push(row(
                    p,
                    f.orbit.q,
                    PlanarObject::F,
                    Some(f.metrics),
                    Some(f.residual),
                ));
            }
        }
    }
    SweepSection { b, rows, gh, c }
}

/// Sweeps `b` sections (in parallel) for H, F, GH and Z of the planar field.
pub fn planar_bifurcation_sweep(
    vf: &PlanarVF,
    grid: &SweepGrid,
    opts: &PlanarOptions,
) -> Result<SweepResult> {
    if vf.order() < 5 {
        return Err(Error::Precondition(format!(
            "the sweep needs an order >= 5 field, got {}",
            vf.order()
        )));
    }
    let sections = crate::par::map(&grid.b, |&b| sweep_section(vf, b, grid, opts));
    let pts: Vec<(f64, f64)> = sections
        .iter()
        .filter_map(|s| s.gh.map(|g| (g.p, s.b)))
        .collect();
    Ok(SweepResult {
        gh_b_at_zero: extrapolate_to_zero(&pts),
        sections,
    })
}

/// Least-squares line `b = b0 + b1 p` through the points nearest `p = 0`; returns `b0`.
pub fn extrapolate_to_zero(pts: &[(f64, f64)]) -> Option<f64> {
    let mut pts = pts.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    pts.truncate(6);
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx).powi(2), b + (x - mx) * (y - my))
    });
    if sxx == 0.0 {
        return None;
    }
    Some(my - sxy / sxx * mx)
}
