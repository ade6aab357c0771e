//! Periodic orbits of the delay equation by collocation in rescaled time.
//!
//! With `x(s) = u(sT)` the equation reads
//! `x'(s) = T (alpha x(s) + beta x(sigma))`, `sigma = s - (1 + x(s - b/T)) / T`,
//! with all arguments taken modulo 1.

use std::collections::BTreeSet;

use faer::sparse::Triplet;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::colloc::{self, Extended, Field, Lin, Mesh, Profile, MAX_DIM};
use crate::error::{Error, Result};
use crate::model::{hopf_point, Params};

/// Index of alpha and beta in the field parameter vector.
pub const ALPHA: usize = 0;
pub const BETA: usize = 1;

/// Default Newton tolerance on the scaled update.
pub const NEWTON_TOL: f64 = 1e-10;

/// The rescaled delay equation as a collocation field.
#[derive(Clone, Copy, Debug)]
pub struct DdeField {
    pub b: f64,
}

impl Field for DdeField {
    fn dim(&self) -> usize {
        1
    }

    fn eval(
        &self,
        s: f64,
        prof: &Profile,
        period: f64,
        par: &[f64],
        lin: Option<&mut Lin>,
    ) -> [f64; MAX_DIM] {
        let (alpha, beta) = (par[ALPHA], par[BETA]);
        let t = period;
        let x = prof.eval(0, s).value;
        let rho = s - self.b / t;
        let xr = prof.eval(0, rho);
        let sigma = s - (1.0 + xr.value) / t;
        let xs = prof.eval(0, sigma);
        let g = alpha * x + beta * xs.value;
        if let Some(lin) = lin {
            lin.point(0, 0, s, t * alpha);
            lin.point(0, 0, sigma, t * beta);
            lin.point(0, 0, rho, -beta * xs.deriv);
            let dsigma = (1.0 + xr.value) / (t * t) - xr.deriv * self.b / (t * t * t);
            lin.dt[0] = g + t * beta * xs.deriv * dsigma;
            lin.dpar[0][ALPHA] = t * x;
            lin.dpar[0][BETA] = t * xs.value;
        }
        [t * g, 0.0]
    }
}

/// Periodic orbit: nodal profile on a mesh of `[0, 1]` and its period.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    pub params: Params,
    pub mesh: Mesh,
    /// Nodal values, `mesh.n_nodes()` of them; the last equals the first.
    pub x: Vec<f64>,
    pub period: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitMetrics {
    pub period: f64,
    pub amplitude: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub slope_est: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloquetSet {
    /// Leading multipliers by decreasing modulus.
    pub multipliers: Vec<Complex64>,
    pub trivial_index: usize,
}

impl FloquetSet {
    pub fn trivial(&self) -> Complex64 {
        self.multipliers[self.trivial_index]
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &Complex64> {
        let k = self.trivial_index;
        self.multipliers
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != k)
            .map(|(_, m)| m)
    }

    /// Nontrivial multipliers outside the unit circle.
    pub fn n_unstable(&self) -> usize {
        self.nontrivial().filter(|m| m.norm() > 1.0 + 1e-6).count()
    }

    /// Product of `mu - 1` over the nontrivial multipliers (real part).
    pub fn fold_product(&self) -> f64 {
        self.nontrivial()
            .fold(Complex64::new(1.0, 0.0), |a, m| a * (m - 1.0))
            .re
    }
}

impl PeriodicOrbit {
    pub fn new(params: Params, mesh: Mesh, x: Vec<f64>, period: f64) -> Result<Self> {
        if x.len() != mesh.n_nodes() {
            return Err(Error::Argument(format!(
                "{} nodal values for {} nodes",
                x.len(),
                mesh.n_nodes()
            )));
        }
        if !(period > 0.0) {
            return Err(Error::Argument("period must be positive".into()));
        }
        Ok(PeriodicOrbit {
            params,
            mesh,
            x,
            period,
        })
    }

    /// Profile `x(s)` sampled from a function on a uniform mesh.
    pub fn from_fn(params: Params, intervals: usize, period: f64, f: impl Fn(f64) -> f64) -> Self {
        let mesh = Mesh::uniform(intervals);
        let mut x: Vec<f64> = mesh.nodes().into_iter().map(&f).collect();
        let n = x.len();
        x[n - 1] = x[0];
        PeriodicOrbit {
            params,
            mesh,
            x,
            period,
        }
    }

    pub fn profile(&self) -> Profile<'_> {
        Profile {
            mesh: &self.mesh,
            x: &self.x,
            dim: 1,
        }
    }

    /// `x(s)` for rescaled time `s` (wrapped).
    pub fn eval(&self, s: f64) -> f64 {
        self.profile().value(0, s)
    }

    /// `u(t) = x(t / T)`.
    pub fn u(&self, t: f64) -> f64 {
        self.eval(t / self.period)
    }

    /// `u'(t)`.
    pub fn u_d(&self, t: f64) -> f64 {
        self.profile().eval(0, t / self.period).deriv / self.period
    }

    pub fn metrics(&self) -> OrbitMetrics {
        orbit_metrics(self)
    }

    /// Same orbit on a new mesh with `intervals` equidistributed intervals.
    pub fn remeshed(&self, intervals: usize) -> Self {
        let (mesh, x) = colloc::remesh(&self.profile(), intervals);
        PeriodicOrbit {
            params: self.params,
            mesh,
            x,
            period: self.period,
        }
    }

    /// Unknown vector `[X, T]`.
    pub fn to_z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.push(self.period);
        z
    }

    /// Largest residual of the unrescaled equation at `samples` points of one period.
    pub fn dde_residual(&self, samples: usize) -> f64 {
        let p = &self.params;
        (0..samples)
            .map(|k| {
                let t = self.period * (k as f64 + 0.5) / samples as f64;
                let lhs = self.u_d(t);
                let tau = 1.0 + self.u(t - p.b);
                (lhs - p.alpha * self.u(t) - p.beta * self.u(t - tau)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = self.metrics();
        let coeffs: Vec<Vec<f64>> = (0..self.mesh.intervals())
            .map(|i| self.x[i * colloc::DEGREE..=(i + 1) * colloc::DEGREE].to_vec())
            .collect();
        serde_json::json!({
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "b": self.params.b,
            "period": self.period,
            "mesh": self.mesh.breaks(),
            "coeffs": coeffs,
            "metrics": m,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let f = |k: &str| {
            v[k].as_f64()
                .ok_or_else(|| Error::Argument(format!("orbit json: missing {k}")))
        };
        let params = Params::new(f("alpha")?, f("beta")?, f("b")?)?;
        let mesh: Vec<f64> = serde_json::from_value(v["mesh"].clone())
            .map_err(|e| Error::Argument(format!("orbit json mesh: {e}")))?;
        let coeffs: Vec<Vec<f64>> = serde_json::from_value(v["coeffs"].clone())
            .map_err(|e| Error::Argument(format!("orbit json coeffs: {e}")))?;
        let mesh = Mesh::new(mesh)?;
        let mut x = Vec::with_capacity(mesh.n_nodes());
        for (i, c) in coeffs.iter().enumerate() {
            if c.len() != colloc::DEGREE + 1 {
                return Err(Error::Argument(
                    "orbit json: wrong coefficient count".into(),
                ));
            }
            let take = if i + 1 == coeffs.len() {
                c.len()
            } else {
                c.len() - 1
            };
            x.extend_from_slice(&c[..take]);
        }
        PeriodicOrbit::new(params, mesh, x, f("period")?)
    }
}

/// Field parameters `[alpha, beta]`.
pub fn field_params(p: &Params) -> Vec<f64> {
    vec![p.alpha, p.beta]
}

/// Rejects iterates whose nodal minimum reaches `floor` (normally `-1`).
pub fn physical_guard(n_x: usize, floor: f64) -> impl Fn(&[f64]) -> Result<()> {
    move |z: &[f64]| {
        let min_u = z[..n_x].iter().cloned().fold(f64::INFINITY, f64::min);
        if min_u <= floor {
            Err(Error::Physicality { min_u })
        } else if z[n_x] <= 0.0 || !z[n_x].is_finite() {
            Err(Error::Numerical("period became nonpositive".into()))
        } else {
            Ok(())
        }
    }
}

fn check_guess(guess: &PeriodicOrbit) -> Result<()> {
    let (min_u, _, _) = guess.profile().range(0);
    if min_u <= -1.0 {
        return Err(Error::Precondition(format!("guess has min {min_u} <= -1")));
    }
    if !(guess.period > 0.0) {
        return Err(Error::Precondition("guess period must be positive".into()));
    }
    let max_u = guess.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (1.0 + max_u.max(0.0) + guess.params.b) >= guess.period {
        return Err(Error::Precondition("delay exceeds one period".into()));
    }
    Ok(())
}

/// Converges a periodic orbit at fixed parameters from `guess`.
pub fn solve_po(params: Params, guess: &PeriodicOrbit) -> Result<PeriodicOrbit> {
    let guess = PeriodicOrbit {
        params,
        ..guess.clone()
    };
    check_guess(&guess)?;
    let field = DdeField { b: params.b };
    let ext = Extended {
        field: &field,
        mesh: &guess.mesh,
        par: field_params(&params),
        free: vec![],
        phase_ref: colloc::phase_reference(&guess.profile()),
        n_aux: 0,
    };
    let mut z = guess.to_z();
    let n_x = guess.x.len();
    ext.solve(
        &mut z,
        &mut colloc::no_extra,
        &physical_guard(n_x, -1.0),
        16,
        NEWTON_TOL,
    )?;
    let po = PeriodicOrbit {
        params,
        mesh: guess.mesh.clone(),
        x: z[..n_x].to_vec(),
        period: z[n_x],
    };
    let (min_u, _, max_u) = po.profile().range(0);
    if min_u <= -1.0 {
        return Err(Error::Physicality { min_u });
    }
    if max_u - min_u < 1e-8 {
        return Err(Error::Convergence {
            at: params.alpha,
            reason: "collapsed onto the equilibrium".into(),
        });
    }
    Ok(po)
}

/// Converges an orbit with one parameter free and `x(0) = amp` pinned.
pub fn solve_pinned(
    params: Params,
    guess: &PeriodicOrbit,
    free: usize,
    amp: f64,
) -> Result<PeriodicOrbit> {
    let field = DdeField { b: params.b };
    let ext = Extended {
        field: &field,
        mesh: &guess.mesh,
        par: field_params(&params),
        free: vec![free],
        phase_ref: colloc::phase_reference(&guess.profile()),
        n_aux: 0,
    };
    let mut z = guess.to_z();
    z.push(ext.par[free]);
    let n_x = guess.x.len();
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
    ext.solve(&mut z, &mut pin, &physical_guard(n_x, -1.0), 16, NEWTON_TOL)?;
    let p = ext.params_at(&z);
    let params = Params::new(p[ALPHA], p[BETA], params.b)?;
    Ok(PeriodicOrbit {
        params,
        mesh: guess.mesh.clone(),
        x: z[..n_x].to_vec(),
        period: z[n_x],
    })
}

/// Small orbit near the Hopf point with frequency `theta`.
///
/// The parameters are moved off the Hopf curve to the side where the orbit of
/// amplitude `eps` exists, found by a pinned solve with alpha free (beta free as
/// a fallback); the returned profile is the sinusoidal guess itself.
pub fn hopf_initial_guess(theta: f64, eps: f64, b: f64) -> Result<(Params, PeriodicOrbit)> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::Argument(format!("theta {theta} outside (0, pi)")));
    }
    let (alpha, beta) = hopf_point(theta)?;
    let on_h = Params::new(alpha, beta, b)?;
    let period = 2.0 * std::f64::consts::PI / theta;
    let guess = PeriodicOrbit::from_fn(on_h, 40, period, |s| {
        eps * (2.0 * std::f64::consts::PI * s).cos()
    });
    let side =
        solve_pinned(on_h, &guess, ALPHA, eps).or_else(|_| solve_pinned(on_h, &guess, BETA, eps));
    let params = match side {
        Ok(po) => po.params,
        Err(_) => on_h,
    };
    Ok((params, PeriodicOrbit { params, ..guess }))
}

/// Metrics of an orbit; `slope_est` is the median of `u'` over the central 60%
/// of the rising arc from the minimum to the maximum.
pub fn orbit_metrics(po: &PeriodicOrbit) -> OrbitMetrics {
    let prof = po.profile();
    let mut lo = (f64::INFINITY, 0.0);
    let mut hi = (f64::NEG_INFINITY, 0.0);
    for i in 0..po.mesh.intervals() {
        let h = po.mesh.h(i);
        for j in 0..32 {
            let s = po.mesh.breaks()[i] + h * j as f64 / 32.0;
            let v = prof.value(0, s);
            if v < lo.0 {
                lo = (v, s);
            }
            if v > hi.0 {
                hi = (v, s);
            }
        }
    }
    // refine the extremes by golden-section on the profile
    let refine = |s0: f64, sign: f64| {
        let w = 2.0 / (po.mesh.intervals() as f64 * 32.0);
        let (mut a, mut b) = (s0 - w, s0 + w);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |s: f64| sign * prof.value(0, s);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let s = 0.5 * (a + b);
        (sign * f(s), s)
    };
    let lo = {
        let r = refine(lo.1, 1.0);
        if r.0 < lo.0 {
            r
        } else {
            lo
        }
    };
    let hi = {
        let r = refine(hi.1, -1.0);
        if r.0 > hi.0 {
            r
        } else {
            hi
        }
    };
    let mut span = hi.1 - lo.1;
    if span <= 0.0 {
        span += 1.0;
    }
    let mut d: Vec<f64> = (0..201)
        .map(|k| {
            let s = lo.1 + span * (0.2 + 0.6 * k as f64 / 200.0);
            prof.eval(0, s).deriv / po.period
        })
        .collect();
    d.sort_by(|a, b| a.total_cmp(b));
    OrbitMetrics {
        period: po.period,
        amplitude: hi.0 - lo.0,
        min_u: lo.0,
        max_u: hi.0,
        slope_est: d[100],
    }
}

/// Leading Floquet multipliers from the collocated period map.
///
/// The linearized equation is collocated on one period with delayed arguments
/// reaching into the previous period; eliminating the current period gives the
/// monodromy map, which only acts through the nodes inside the delay window.
pub fn floquet(po: &PeriodicOrbit) -> Result<FloquetSet> {
    floquet_field(
        &DdeField { b: po.params.b },
        &po.mesh,
        &po.x,
        po.period,
        &field_params(&po.params),
        5,
    )
}

/// Floquet multipliers for any collocation field.
pub fn floquet_field<F: Field>(
    field: &F,
    mesh: &Mesh,
    x: &[f64],
    period: f64,
    par: &[f64],
    k: usize,
) -> Result<FloquetSet> {
    let dim = field.dim();
    let prof = Profile { mesh, x, dim };
    let n = mesh.n_nodes() * dim;
    let mut a1 = Vec::new();
    let mut a0: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..dim {
        a1.push(Triplet::new(j, j, 1.0));
        a0.push((j, n - dim + j, -1.0));
    }
    let gauss = colloc::gauss_points();
    let mut lin = Lin::default();
    let mut row = dim;
    for i in 0..mesh.intervals() {
        let h = mesh.h(i);
        let node = i * colloc::DEGREE;
        for &g in gauss {
            let s = mesh.breaks()[i] + h * g;
            let (_, d) = colloc::lagrange(g);
            lin.clear();
            field.eval(s, &prof, period, par, Some(&mut lin));
            for j in 0..dim {
                for kk in 0..=colloc::DEGREE {
                    a1.push(Triplet::new(row + j, (node + kk) * dim + j, d[kk] / h));
                }
            }
            for pt in &lin.points {
                if pt.s < -1.0 {
                    return Err(Error::Precondition("delay exceeds one period".into()));
                }
                let ev = prof.eval(pt.comp, pt.s);
                for kk in 0..=colloc::DEGREE {
                    let w = ev.weights[kk];
                    if w == 0.0 {
                        continue;
                    }
                    let col = (ev.node + kk) * dim + pt.comp;
                    if pt.s >= 0.0 {
                        a1.push(Triplet::new(row + pt.out, col, -pt.coef * w));
                    } else {
                        a0.push((row + pt.out, col, -pt.coef * w));
                    }
                }
            }
            row += dim;
        }
    }
    debug_assert_eq!(row, n);
    let window: Vec<usize> = a0
        .iter()
        .map(|t| t.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |c: usize| window.binary_search(&c).ok();
    let lu = colloc::Factor::new(n, &a1)?;
    let w = window.len();
    let mut cols = vec![vec![0.0; n]; w];
    for &(r, c, v) in &a0 {
        if let Some(k) = pos(c) {
            cols[k][r] -= v;
        }
    }
    let solved = crate::par::map(&cols, |rhs| lu.solve(rhs));
    let mw = DMatrix::from_fn(w, w, |r, c| solved[c][window[r]]);
    let eig = mw.clone().complex_eigenvalues();
    let mut mult: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    if mult.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
        return Err(Error::Numerical("Floquet eigenvalues not finite".into()));
    }
    mult.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    mult.truncate(k.max(2));
    // The trivial multiplier is the one whose eigenvector is the profile derivative.
    // Selecting by alignment is robust where discretization moves it away from 1.
    let nodes = mesh.nodes();
    let deriv: Vec<f64> = window
        .iter()
        .map(|&c| prof.eval(c % dim, nodes[c / dim]).deriv)
        .collect();
    let align = |mu: Complex64| -> f64 {
        if mu.im.abs() > 1e-8 * mu.norm().max(1.0) {
            return 0.0;
        }
        let shift = mu.re + 1e-9 * mu.re.abs().max(1.0);
        let a = DMatrix::from_fn(w, w, |r, c| mw[(r, c)] - if r == c { shift } else { 0.0 });
        let lu = a.lu();
        let mut v = nalgebra::DVector::from_element(w, 1.0);
        for _ in 0..3 {
            match lu.solve(&v) {
                Some(nv) => {
                    let n = nv.norm();
                    if !(n > 0.0 && n.is_finite()) {
                        return 0.0;
                    }
                    v = nv / n;
                }
                None => return 0.0,
            }
        }
        let dn = deriv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot: f64 = v.iter().zip(&deriv).map(|(a, b)| a * b).sum();
        if dn > 0.0 {
            (dot / dn).abs()
        } else {
            0.0
        }
    };
    let scores: Vec<f64> = mult.iter().map(|&m| align(m)).collect();
    let trivial_index = (0..mult.len())
        .max_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then((mult[b] - 1.0).norm().total_cmp(&(mult[a] - 1.0).norm()))
        })
        .unwrap_or(0);
    Ok(FloquetSet {
        multipliers: mult,
        trivial_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jacobian_gap(b: f64, period: f64) -> f64 {
        let p = Params::new(-0.3, -1.9, b).unwrap();
        let po = PeriodicOrbit::from_fn(p, 12, period, |s| {
            let w = 2.0 * std::f64::consts::PI * s;
            0.4 * w.cos() + 0.15 * (2.0 * w).sin() - 0.05
        });
        let field = DdeField { b };
        let mut z = po.to_z();
        z.push(p.alpha);
        let pr = colloc::phase_reference(&po.profile());
        let a = colloc::assemble(&field, &po.mesh, &z, &field_params(&p), &[ALPHA], &pr, true);
        let dense = colloc::densify(a.res.len(), z.len(), &a.jac);
        let fd = colloc::fd_jacobian(&field, &po.mesh, &z, &field_params(&p), &[ALPHA], &pr, 1e-6);
        let mut gap = 0.0f64;
        for (r1, r2) in dense.iter().zip(&fd) {
            for (x, y) in r1.iter().zip(r2) {
                gap = gap.max((x - y).abs() / (1.0 + y.abs()));
            }
        }
        gap
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        for (b, t) in [(0.0, 4.0), (0.2, 5.5), (0.1, 30.0)] {
            let g = jacobian_gap(b, t);
            assert!(g < 1e-7, "b = {b}, T = {t}: gap {g}");
        }
    }

    #[test]
    fn json_round_trip() {
        let p = Params::new(-0.1, -1.7, 0.0).unwrap();
        let po = PeriodicOrbit::from_fn(p, 8, 5.0, |s| 0.1 * (std::f64::consts::TAU * s).sin());
        let back = PeriodicOrbit::from_json(&po.to_json()).unwrap();
        assert_eq!(back, po);
    }
}
