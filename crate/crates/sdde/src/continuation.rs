//! Pseudo-arclength continuation of periodic orbits.
//!
//! One-parameter branches carry a fold test, the distance of the minimum from
//! `-1` and the period as test functions. Two-parameter curves of folds (F) and of
//! orbits touching `-1` (M) are continued as extended collocation systems.

use std::fmt;

use faer::sparse::Triplet;
use serde::Serialize;

use crate::colloc::{
    self, assemble, dense_row, Extended, Factor, Field, Layout, Mesh, NewtonReport, Profile,
};
use crate::error::{Error, Result};
use crate::linstab::{hopf_theta_at, hopf_theta_at_beta};
use crate::model::{hopf_point, Param, Params};
use crate::orbit::{
    self, field_params, floquet, physical_guard, DdeField, OrbitMetrics, PeriodicOrbit, ALPHA, BETA,
};
use crate::table::{Cell, Table};

/// Continuation settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContOptions {
    pub period_cap: f64,
    /// Bounds on the free parameter (on both parameters for curves).
    pub bounds: (f64, f64),
    pub min_floor: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Compute Floquet multipliers at every point with period up to `floquet_max_period`.
    pub floquet: bool,
    pub floquet_max_period: f64,
    /// Target interpolation error per mesh interval.
    pub mesh_tol: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub remesh_every: usize,
    /// Curves end once the orbit amplitude drops below this.
    pub small_amplitude: f64,
}

impl Default for ContOptions {
    fn default() -> Self {
        ContOptions {
            period_cap: 500.0,
            bounds: (-10.0, 10.0),
            min_floor: 1e-6,
            h0: 0.05,
            h_min: 1e-7,
            h_max: 50.0,
            max_steps: 5000,
            floquet: true,
            floquet_max_period: 100.0,
            mesh_tol: 1e-7,
            n_min: 40,
            n_max: 400,
            remesh_every: 3,
            small_amplitude: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    HopfStart,
    Fold,
    MHit,
    PeriodCap,
    Bound,
    Truncated,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::HopfStart => "HOPF_START",
            EventKind::Fold => "FOLD",
            EventKind::MHit => "M_HIT",
            EventKind::PeriodCap => "PERIOD_CAP",
            EventKind::Bound => "BOUND",
            EventKind::Truncated => "TRUNCATED",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub orbit: PeriodicOrbit,
    pub metrics: OrbitMetrics,
    /// Free-parameter component of the oriented tangent; changes sign at folds.
    pub fold_tf: f64,
    pub min_plus_one: f64,
    pub n_unstable: Option<usize>,
}

impl BranchPoint {
    pub fn params(&self) -> Params {
        self.orbit.params
    }
}

/// A detected event between points `index - 1` and `index`.
#[derive(Clone, Debug)]
pub struct Event {
    pub kind: EventKind,
    pub index: usize,
    pub params: Params,
    /// Refined orbit, when refinement applies and succeeded.
    pub orbit: Option<PeriodicOrbit>,
    /// Residual of the refining system.
    pub residual: Option<f64>,
    /// Extra data: the refined `s*` for M hits.
    pub s_star: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub free: Param,
    pub points: Vec<BranchPoint>,
    pub events: Vec<Event>,
}

impl Branch {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branch has points")
    }

    /// Branch CSV with the fixed column set.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "index",
            "alpha",
            "beta",
            "b",
            "period",
            "amplitude",
            "min_u",
            "max_u",
            "slope_est",
            "n_unstable",
            "fold_tf",
            "min_plus_one",
            "event",
        ]);
        for (i, p) in self.points.iter().enumerate() {
            let ev: Vec<String> = self
                .events
                .iter()
                .filter(|e| e.index == i)
                .map(|e| e.kind.to_string())
                .collect();
            let pr = p.params();
            t.push(vec![
                i.into(),
                pr.alpha.into(),
                pr.beta.into(),
                pr.b.into(),
                p.metrics.period.into(),
                p.metrics.amplitude.into(),
                p.metrics.min_u.into(),
                p.metrics.max_u.into(),
                p.metrics.slope_est.into(),
                p.n_unstable.into(),
                p.fold_tf.into(),
                p.min_plus_one.into(),
                Cell::S(ev.join(";")),
            ]);
        }
        t
    }
}

fn param_index(p: Param) -> usize {
    match p {
        Param::Alpha => ALPHA,
        Param::Beta => BETA,
    }
}

fn params_from(par: &[f64], b: f64) -> Result<Params> {
    Params::new(par[ALPHA], par[BETA], b)
}

pub(crate) type Rows<'a, F> = dyn FnMut(
        &Extended<F>,
        &[f64],
        bool,
        usize,
        &mut Vec<f64>,
        &mut Vec<Triplet<usize, usize, f64>>,
    ) -> Result<()>
    + 'a;

pub(crate) fn no_rows<F: Field>(
    _: &Extended<F>,
    _: &[f64],
    _: bool,
    _: usize,
    _: &mut Vec<f64>,
    _: &mut Vec<Triplet<usize, usize, f64>>,
) -> Result<()> {
    Ok(())
}

/// State of a continuation run: the current mesh and the last two solutions.
pub(crate) struct Track<F> {
    pub(crate) field: F,
    pub(crate) par: Vec<f64>,
    pub(crate) free: Vec<usize>,
    pub(crate) n_aux: usize,
    pub(crate) mesh: Mesh,
    pub(crate) prev: Vec<f64>,
    pub(crate) cur: Vec<f64>,
    pub(crate) tangent: Option<Vec<f64>>,
    pub(crate) floor: f64,
}

impl Track<DdeField> {
    fn new(
        b: f64,
        par: Vec<f64>,
        free: Vec<usize>,
        n_aux: usize,
        mesh: Mesh,
        z: Vec<f64>,
        floor: f64,
    ) -> Self {
        Track::with_field(DdeField { b }, par, free, n_aux, mesh, z, floor)
    }

    fn orbit(&self, z: &[f64]) -> Result<PeriodicOrbit> {
        let n_x = self.n_x();
        let p = params_from(&self.params_of(z), self.field.b)?;
        PeriodicOrbit::new(p, self.mesh.clone(), z[..n_x].to_vec(), z[n_x])
    }
}

impl<F: Field> Track<F> {
    pub(crate) fn with_field(
        field: F,
        par: Vec<f64>,
        free: Vec<usize>,
        n_aux: usize,
        mesh: Mesh,
        z: Vec<f64>,
        floor: f64,
    ) -> Self {
        Track {
            field,
            par,
            free,
            n_aux,
            mesh,
            prev: z.clone(),
            cur: z,
            tangent: None,
            floor,
        }
    }

    fn dim(&self) -> usize {
        self.field.dim()
    }

    pub(crate) fn lay(&self) -> Layout {
        Layout::new(&self.mesh, self.dim(), self.free.len())
    }

    pub(crate) fn n_x(&self) -> usize {
        self.lay().n_x()
    }

    pub(crate) fn ext(&self) -> Extended<'_, F> {
        let prof = Profile {
            mesh: &self.mesh,
            x: &self.cur[..self.n_x()],
            dim: self.dim(),
        };
        Extended {
            field: &self.field,
            mesh: &self.mesh,
            par: self.par.clone(),
            free: self.free.clone(),
            phase_ref: colloc::phase_reference(&prof),
            n_aux: self.n_aux,
        }
    }

    pub(crate) fn weights(&self) -> Vec<f64> {
        let n_x = self.n_x();
        let wx = 1.0 / (n_x as f64).sqrt();
        let mut w = vec![wx; n_x + 1];
        w.extend(std::iter::repeat_n(1.0, self.free.len()));
        w.extend(std::iter::repeat_n(wx, self.n_aux));
        w
    }

    pub(crate) fn wnorm(&self, v: &[f64]) -> f64 {
        self.weights()
            .iter()
            .zip(v)
            .map(|(w, x)| (w * x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn secant(&self) -> Vec<f64> {
        let d: Vec<f64> = self
            .cur
            .iter()
            .zip(&self.prev)
            .map(|(a, b)| a - b)
            .collect();
        let n = self.wnorm(&d);
        if n == 0.0 {
            return self.tangent.clone().expect("initial tangent");
        }
        d.into_iter().map(|x| x / n).collect()
    }

    pub(crate) fn params_of(&self, z: &[f64]) -> Vec<f64> {
        let lay = self.lay();
        let mut p = self.par.clone();
        for (k, &f) in self.free.iter().enumerate() {
            p[f] = z[lay.col_par(k)];
        }
        p
    }

    /// Newton on the extended system plus the arclength condition through `pred`.
    pub(crate) fn correct(
        &self,
        pred: &[f64],
        dir: &[f64],
        user: &mut Rows<F>,
        max_iter: usize,
    ) -> Result<(Vec<f64>, NewtonReport)> {
        let ext = self.ext();
        let w2: Vec<f64> = self.weights().iter().map(|w| w * w).collect();
        let mut z = pred.to_vec();
        let mut rows = |z: &[f64],
                        wj: bool,
                        row: usize,
                        res: &mut Vec<f64>,
                        jac: &mut Vec<Triplet<usize, usize, f64>>| {
            user(&ext, z, wj, row, res, jac)?;
            let r = res.len();
            let mut s = 0.0;
            for i in 0..z.len() {
                let c = w2[i] * dir[i];
                s += c * (z[i] - pred[i]);
                if wj && c != 0.0 {
                    jac.push(Triplet::new(r, i, c));
                }
            }
            res.push(s);
            Ok(())
        };
        let rep = ext.solve(
            &mut z,
            &mut rows,
            &physical_guard(self.n_x(), self.floor),
            max_iter,
            orbit::NEWTON_TOL,
        )?;
        Ok((z, rep))
    }

    /// Newton without the arclength condition (square extended system).
    pub(crate) fn solve_fixed(
        &self,
        z0: &[f64],
        user: &mut Rows<F>,
        max_iter: usize,
    ) -> Result<(Vec<f64>, NewtonReport)> {
        let ext = self.ext();
        let mut z = z0.to_vec();
        let mut rows = |z: &[f64],
                        wj: bool,
                        row: usize,
                        res: &mut Vec<f64>,
                        jac: &mut Vec<Triplet<usize, usize, f64>>| {
            user(&ext, z, wj, row, res, jac)
        };
        let rep = ext.solve(
            &mut z,
            &mut rows,
            &physical_guard(self.n_x(), self.floor),
            max_iter,
            orbit::NEWTON_TOL,
        )?;
        Ok((z, rep))
    }

    /// Unit tangent at `z` oriented along `dir`.
    pub(crate) fn tangent_at(
        &self,
        z: &[f64],
        dir: &[f64],
        user: &mut Rows<F>,
    ) -> Result<Vec<f64>> {
        let ext = self.ext();
        let (_, mut jac) = ext.system(z, true, &mut |z, wj, row, res, jac| {
            user(&ext, z, wj, row, res, jac)
        })?;
        let n = z.len();
        let w2: Vec<f64> = self.weights().iter().map(|w| w * w).collect();
        let g: Vec<f64> = dir.iter().zip(&w2).map(|(d, w)| d * w).collect();
        dense_row(n - 1, &g, &mut jac);
        let lu = Factor::new(n, &jac)?;
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        let t = lu.solve(&e);
        let nrm = self.wnorm(&t);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Numerical("tangent computation failed".into()));
        }
        Ok(t.into_iter().map(|x| x / nrm).collect())
    }

    pub(crate) fn accept(&mut self, z: Vec<f64>) {
        self.prev = std::mem::replace(&mut self.cur, z);
    }

    /// Moves both stored solutions to an equidistributed mesh with `n` intervals.
    pub(crate) fn remesh(&mut self, n: usize) {
        let n_x = self.n_x();
        let (mesh, x1) = colloc::remesh(
            &Profile {
                mesh: &self.mesh,
                x: &self.cur[..n_x],
                dim: self.dim(),
            },
            n,
        );
        let x0 = colloc::interpolate(
            &Profile {
                mesh: &self.mesh,
                x: &self.prev[..n_x],
                dim: self.dim(),
            },
            &mesh,
        );
        let tail1 = self.cur[n_x..].to_vec();
        let tail0 = self.prev[n_x..].to_vec();
        self.cur = x1.into_iter().chain(tail1).collect();
        self.prev = x0.into_iter().chain(tail0).collect();
        if let Some(t) = &self.tangent {
            let tx = colloc::interpolate(
                &Profile {
                    mesh: &self.mesh,
                    x: &t[..n_x],
                    dim: self.dim(),
                },
                &mesh,
            );
            let tail = t[n_x..].to_vec();
            self.tangent = Some(tx.into_iter().chain(tail).collect());
        }
        self.mesh = mesh;
    }

    pub(crate) fn suggested_intervals(&self, opts: &ContOptions) -> usize {
        let prof = Profile {
            mesh: &self.mesh,
            x: &self.cur[..self.n_x()],
            dim: self.dim(),
        };
        let (lo, _, hi) = prof.range(0);
        let scale = (hi - lo).max(1.0);
        colloc::suggest_intervals(&prof, opts.mesh_tol * scale, opts.n_min, opts.n_max)
    }
}

/// Bordered fold test `g`: zero exactly where the collocation Jacobian with respect
/// to profile and period is singular.
pub(crate) struct FoldRows {
    border_b: Vec<f64>,
    border_c: Vec<f64>,
    last_w: Vec<f64>,
    last_v: Vec<f64>,
}

impl FoldRows {
    pub(crate) fn new<F: Field>(track: &Track<F>, z: &[f64], tangent: Option<&[f64]>) -> Self {
        let ext = track.ext();
        let lay = ext.layout();
        let n_xt = lay.n_x() + 1;
        let a = assemble(
            ext.field,
            ext.mesh,
            &z[..lay.n_unknowns()],
            &ext.par,
            &ext.free,
            &ext.phase_ref,
            true,
        );
        let mut bb = vec![0.0; n_xt];
        for t in &a.jac {
            if t.col == lay.col_par(0) && t.row < n_xt {
                bb[t.row] += t.val;
            }
        }
        let mut cc = match tangent {
            Some(t) => t[..n_xt].to_vec(),
            None => {
                let mut c = vec![0.0; n_xt];
                c[n_xt - 1] = 1.0;
                c
            }
        };
        normalize(&mut bb);
        normalize(&mut cc);
        FoldRows {
            border_b: bb,
            border_c: cc,
            last_w: vec![],
            last_v: vec![],
        }
    }

    /// Re-borders with the most recent null vectors.
    pub(crate) fn update_borders(&mut self) {
        if !self.last_w.is_empty() {
            self.border_c = self.last_w.clone();
            normalize(&mut self.border_c);
            self.border_b = self.last_v.clone();
            normalize(&mut self.border_b);
        }
    }

    /// Carries the borders over to a new mesh by interpolating their profile parts.
    pub(crate) fn remesh(&mut self, old: &Mesh, new: &Mesh, dim: usize) {
        let carry = |v: &[f64]| {
            let n_x = v.len() - 1;
            let x = colloc::interpolate(
                &Profile {
                    mesh: old,
                    x: &v[..n_x],
                    dim,
                },
                new,
            );
            let mut out: Vec<f64> = x;
            out.push(v[n_x]);
            normalize(&mut out);
            out
        };
        self.border_c = carry(&self.border_c);
        // the left border lives on collocation rows; a smooth profile-like vector is enough
        self.border_b = carry(&self.border_b);
        self.last_w.clear();
        self.last_v.clear();
    }

    pub(crate) fn rows<F: Field>(
        &mut self,
        ext: &Extended<F>,
        z: &[f64],
        wj: bool,
        row: usize,
        res: &mut Vec<f64>,
        jac: &mut Vec<Triplet<usize, usize, f64>>,
    ) -> Result<()> {
        let lay = ext.layout();
        let nu = lay.n_unknowns();
        let n_xt = lay.n_x() + 1;
        let (g, w, v) = self.test(ext, &z[..nu])?;
        res.push(g);
        if wj {
            let wmax = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let zmax = z[..nu].iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let eps = 1e-7 * (1.0 + zmax) / wmax.max(1e-300);
            let shifted = |sign: f64| {
                let mut zz = z[..nu].to_vec();
                for i in 0..n_xt {
                    zz[i] += sign * eps * w[i];
                }
                assemble(
                    ext.field,
                    ext.mesh,
                    &zz,
                    &ext.par,
                    &ext.free,
                    &ext.phase_ref,
                    true,
                )
                .jac
            };
            let mut grad = vec![0.0; z.len()];
            for t in shifted(1.0) {
                grad[t.col] -= v[t.row] * t.val / (2.0 * eps);
            }
            for t in shifted(-1.0) {
                grad[t.col] += v[t.row] * t.val / (2.0 * eps);
            }
            dense_row(row, &grad, jac);
        }
        self.last_w = w;
        self.last_v = v;
        Ok(())
    }

    pub(crate) fn test<F: Field>(
        &self,
        ext: &Extended<F>,
        z: &[f64],
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let lay = ext.layout();
        let n_xt = lay.n_x() + 1;
        let a = assemble(
            ext.field,
            ext.mesh,
            z,
            &ext.par,
            &ext.free,
            &ext.phase_ref,
            true,
        );
        let mut k: Vec<Triplet<usize, usize, f64>> =
            a.jac.into_iter().filter(|t| t.col < n_xt).collect();
        for i in 0..n_xt {
            k.push(Triplet::new(i, n_xt, self.border_b[i]));
            k.push(Triplet::new(n_xt, i, self.border_c[i]));
        }
        let lu = Factor::new(n_xt + 1, &k)?;
        let mut e = vec![0.0; n_xt + 1];
        e[n_xt] = 1.0;
        let sol = lu.solve(&e);
        let solt = lu.solve_transpose(&e);
        Ok((sol[n_xt], sol[..n_xt].to_vec(), solt[..n_xt].to_vec()))
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Newton iterates of the touching-minimum systems may dip this far below `-1`;
/// converged points are checked separately.
const M_ITERATE_FLOOR: f64 = -1.0 - 1e-3;

/// Rows `x(s*) = -1`, `x'(s*) = 0` with `s*` the last unknown.
fn m_rows(
    ext: &Extended<DdeField>,
    z: &[f64],
    wj: bool,
    row: usize,
    res: &mut Vec<f64>,
    jac: &mut Vec<Triplet<usize, usize, f64>>,
) -> Result<()> {
    let lay = ext.layout();
    let n_x = lay.n_x();
    let col_s = lay.n_unknowns();
    let s = z[col_s];
    let prof = Profile {
        mesh: ext.mesh,
        x: &z[..n_x],
        dim: 1,
    };
    let ev = prof.eval(0, s);
    res.push(ev.value + 1.0);
    res.push(ev.deriv);
    if wj {
        let (i, t) = ext.mesh.locate(s);
        let h = ext.mesh.h(i);
        let dt = 1e-4;
        let (_, dp) = colloc::lagrange(t + dt);
        let (_, dm) = colloc::lagrange(t - dt);
        let mut xdd = 0.0;
        for k in 0..=colloc::DEGREE {
            jac.push(Triplet::new(row, ev.node + k, ev.weights[k]));
            jac.push(Triplet::new(row + 1, ev.node + k, ev.dweights[k]));
            xdd += z[ev.node + k] * (dp[k] - dm[k]) / (2.0 * dt * h * h);
        }
        jac.push(Triplet::new(row, col_s, ev.deriv));
        jac.push(Triplet::new(row + 1, col_s, xdd));
    }
    Ok(())
}

fn branch_point(
    track: &Track<DdeField>,
    z: &[f64],
    fold_tf: f64,
    opts: &ContOptions,
) -> Result<BranchPoint> {
    let orbit = track.orbit(z)?;
    let metrics = orbit.metrics();
    let n_unstable = if opts.floquet && metrics.period <= opts.floquet_max_period {
        floquet(&orbit).ok().map(|f| f.n_unstable())
    } else {
        None
    };
    Ok(BranchPoint {
        metrics,
        fold_tf,
        min_plus_one: metrics.min_u + 1.0,
        n_unstable,
        orbit,
    })
}

pub(crate) fn fold_tf_of<F: Field>(track: &Track<F>, t: &[f64]) -> f64 {
    t[track.lay().col_par(0)]
}

/// Refines a fold of a one-parameter branch between the two stored points.
fn refine_fold(track: &Track<DdeField>, za: &[f64], zb: &[f64]) -> Result<(PeriodicOrbit, f64)> {
    let z0: Vec<f64> = za.iter().zip(zb).map(|(a, b)| 0.5 * (a + b)).collect();
    let dir: Vec<f64> = zb.iter().zip(za).map(|(a, b)| a - b).collect();
    let t = track.tangent_at(&z0, &dir, &mut no_rows).ok();
    let mut fr = FoldRows::new(track, &z0, t.as_deref());
    let mut rows = |ext: &Extended<DdeField>,
                    z: &[f64],
                    wj: bool,
                    row: usize,
                    res: &mut Vec<f64>,
                    jac: &mut Vec<_>| { fr.rows(ext, z, wj, row, res, jac) };
    let (z, rep) = track.solve_fixed(&z0, &mut rows, 20)?;
    Ok((track.orbit(&z)?, rep.residual))
}

/// Re-solves a fold orbit with the extended fold system, `free` varying.
pub fn refine_fold_orbit(po: &PeriodicOrbit, free: Param) -> Result<(PeriodicOrbit, f64)> {
    let fi = param_index(free);
    let par = field_params(&po.params);
    let mut z = po.to_z();
    z.push(par[fi]);
    let track = Track::new(
        po.params.b,
        par,
        vec![fi],
        0,
        po.mesh.clone(),
        z.clone(),
        -1.0,
    );
    refine_fold(&track, &z, &z)
}

/// Refines the point where the minimum touches `-1` with `free` varying.
fn refine_m(track: &Track<DdeField>, z: &[f64]) -> Result<(PeriodicOrbit, f64, f64)> {
    let n_x = track.n_x();
    let prof = Profile {
        mesh: &track.mesh,
        x: &z[..n_x],
        dim: 1,
    };
    let (_, s0, _) = prof.range(0);
    let s0 = golden_min(&prof, s0, 2.0 / (track.mesh.intervals() as f64 * 24.0));
    let mut t = Track::new(
        track.field.b,
        track.par.clone(),
        track.free.clone(),
        1,
        track.mesh.clone(),
        z.to_vec(),
        M_ITERATE_FLOOR,
    );
    t.cur.push(s0);
    t.prev = t.cur.clone();
    let z0 = t.cur.clone();
    let (zz, rep) = t.solve_fixed(&z0, &mut m_rows, 20)?;
    let s = zz[zz.len() - 1];
    Ok((t.orbit(&zz)?, rep.residual, s - s.floor()))
}

fn golden_min(prof: &Profile, s0: f64, w: f64) -> f64 {
    let (mut a, mut b) = (s0 - w, s0 + w);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if prof.value(0, c) < prof.value(0, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    s - s.floor()
}

fn event(kind: EventKind, index: usize, params: Params) -> Event {
    Event {
        kind,
        index,
        params,
        orbit: None,
        residual: None,
        s_star: None,
    }
}

/// Runs the one-parameter loop from the track state, appending to `branch`.
fn run_branch(mut track: Track<DdeField>, branch: &mut Branch, opts: &ContOptions) -> Result<()> {
    let fi = track.free[0];
    let mut h = opts.h0;
    let mut steps = 0usize;
    let mut since_remesh = 0usize;
    loop {
        if steps >= opts.max_steps {
            break;
        }
        let sec = track.secant();
        let pred: Vec<f64> = track.cur.iter().zip(&sec).map(|(z, s)| z + h * s).collect();
        let rr = track.correct(&pred, &sec, &mut no_rows, 8);
        match rr {
            Ok((z, rep)) => {
                let t = match track.tangent_at(&z, &sec, &mut no_rows) {
                    Ok(t) => t,
                    Err(_) => sec.clone(),
                };
                let pt = branch_point(&track, &z, fold_tf_of(&track, &t), opts)?;
                if pt.metrics.amplitude < 1e-9 {
                    h *= 0.5;
                    if h < opts.h_min {
                        let p = pt.params();
                        branch
                            .events
                            .push(event(EventKind::Truncated, branch.points.len() - 1, p));
                        break;
                    }
                    continue;
                }
                let za = track.cur.clone();
                track.accept(z);
                steps += 1;
                since_remesh += 1;
                let idx = branch.points.len();
                let prev_tf = branch.last().fold_tf;
                let params = pt.params();
                let value = track.params_of(&track.cur)[fi];
                let period = pt.metrics.period;
                let min1 = pt.min_plus_one;
                branch.points.push(pt);
                if prev_tf * branch.points[idx].fold_tf < 0.0 {
                    let mut ev = event(EventKind::Fold, idx, params);
                    if let Ok((po, r)) = refine_fold(&track, &za, &track.cur) {
                        ev.params = po.params;
                        ev.orbit = Some(po);
                        ev.residual = Some(r);
                    }
                    branch.events.push(ev);
                }
                if period >= opts.period_cap {
                    branch.events.push(event(EventKind::PeriodCap, idx, params));
                    break;
                }
                if value < opts.bounds.0 || value > opts.bounds.1 {
                    branch.events.push(event(EventKind::Bound, idx, params));
                    break;
                }
                if min1 <= opts.min_floor {
                    push_m_hit(&track, branch, idx, params);
                    break;
                }
                if rep.iters <= 4 {
                    h = (h * 1.5).min(opts.h_max);
                }
                if since_remesh >= opts.remesh_every {
                    let n = track
                        .suggested_intervals(opts)
                        .max(track.mesh.intervals() * 9 / 10);
                    track.remesh(n);
                    since_remesh = 0;
                }
            }
            Err(Error::Physicality { .. }) => {
                h *= 0.5;
                if h < opts.h_min {
                    let p = branch.last().params();
                    let idx = branch.points.len() - 1;
                    push_m_hit(&track, branch, idx, p);
                    break;
                }
            }
            Err(_) => {
                h *= 0.5;
                if h < opts.h_min {
                    let p = branch.last().params();
                    branch
                        .events
                        .push(event(EventKind::Truncated, branch.points.len() - 1, p));
                    break;
                }
            }
        }
    }
    Ok(())
}

fn push_m_hit(track: &Track<DdeField>, branch: &mut Branch, idx: usize, params: Params) {
    let mut ev = event(EventKind::MHit, idx, params);
    if let Ok((po, r, s)) = refine_m(track, &track.cur) {
        ev.params = po.params;
        ev.orbit = Some(po);
        ev.residual = Some(r);
        ev.s_star = Some(s);
    }
    branch.events.push(ev);
}

/// Branch of periodic orbits emanating from the Hopf point at which the fixed
/// parameter takes the value `fixed`; `free` varies along the branch.
pub fn branch_from_hopf(
    b: f64,
    free: Param,
    fixed: f64,
    eps: f64,
    opts: &ContOptions,
) -> Result<Branch> {
    let theta = match free {
        Param::Alpha => hopf_theta_at_beta(fixed)?,
        Param::Beta => hopf_theta_at(fixed)?,
    };
    let (mut ah, mut bh) = hopf_point(theta)?;
    match free {
        Param::Alpha => bh = fixed,
        Param::Beta => ah = fixed,
    }
    let p = Params::new(ah, bh, b)?;
    let period = 2.0 * std::f64::consts::PI / theta;
    let guess = PeriodicOrbit::from_fn(p, opts.n_min, period, |s| {
        eps * (2.0 * std::f64::consts::PI * s).cos()
    });
    let fi = param_index(free);
    let o1 = orbit::solve_pinned(p, &guess, fi, eps)?;
    let o2 = orbit::solve_pinned(o1.params, &o1, fi, 2.0 * eps)?;
    let z_of = |o: &PeriodicOrbit| {
        let mut z = o.to_z();
        z.push(field_params(&o.params)[fi]);
        z
    };
    let mut track = Track::new(
        b,
        field_params(&p),
        vec![fi],
        0,
        o1.mesh.clone(),
        z_of(&o1),
        -1.0,
    );
    track.accept(z_of(&o2));
    let sec = track.secant();
    let tf = |z: &[f64]| {
        track
            .tangent_at(z, &sec, &mut no_rows)
            .map(|t| fold_tf_of(&track, &t))
            .unwrap_or(0.0)
    };
    let mut branch = Branch {
        free,
        points: vec![],
        events: vec![],
    };
    let (f1, f2) = (tf(&track.prev), tf(&track.cur));
    branch
        .points
        .push(branch_point(&track, &track.prev.clone(), f1, opts)?);
    branch
        .points
        .push(branch_point(&track, &track.cur.clone(), f2, opts)?);
    branch.events.push(event(EventKind::HopfStart, 0, p));
    run_branch(track, &mut branch, opts)?;
    Ok(branch)
}

/// Continues from a converged orbit; `direction` picks the sign of the initial
/// change of the free parameter.
pub fn continue_po(
    start: &PeriodicOrbit,
    free: Param,
    direction: f64,
    opts: &ContOptions,
) -> Result<Branch> {
    let fi = param_index(free);
    let mut z = start.to_z();
    z.push(field_params(&start.params)[fi]);
    let mut track = Track::new(
        start.params.b,
        field_params(&start.params),
        vec![fi],
        0,
        start.mesh.clone(),
        z.clone(),
        -1.0,
    );
    let mut e = vec![0.0; z.len()];
    e[z.len() - 1] = direction.signum();
    // tangent with unit parameter component, then normalized
    let t = track.tangent_at(&z, &e, &mut no_rows)?;
    let t = if t[z.len() - 1] * direction < 0.0 {
        t.into_iter().map(|x| -x).collect()
    } else {
        t
    };
    let tf = fold_tf_of(&track, &t);
    track.tangent = Some(t);
    let mut branch = Branch {
        free,
        points: vec![branch_point(&track, &z, tf, opts)?],
        events: vec![],
    };
    run_branch(track, &mut branch, opts)?;
    Ok(branch)
}

/// Orbit on the branch at the given value of the free parameter, re-solved at
/// fixed parameters from an interpolated guess.
pub fn orbit_at(branch: &Branch, value: f64) -> Result<PeriodicOrbit> {
    let fi = param_index(branch.free);
    let v = |p: &BranchPoint| field_params(&p.params())[fi];
    for w in branch.points.windows(2) {
        let (a, b) = (v(&w[0]), v(&w[1]));
        if (a - value) * (b - value) <= 0.0 && a != b {
            let th = (value - a) / (b - a);
            let ob = &w[1].orbit;
            let xa = colloc::interpolate(&w[0].orbit.profile(), &ob.mesh);
            let x: Vec<f64> = xa
                .iter()
                .zip(&ob.x)
                .map(|(p, q)| p + th * (q - p))
                .collect();
            let period = w[0].orbit.period + th * (ob.period - w[0].orbit.period);
            let mut par = field_params(&ob.params);
            par[fi] = value;
            let params = Params::new(par[ALPHA], par[BETA], ob.params.b)?;
            let guess = PeriodicOrbit::new(params, ob.mesh.clone(), x, period)?;
            return orbit::solve_po(params, &guess);
        }
    }
    Err(Error::Argument(format!("value {value} not on the branch")))
}

/// Rescaled quantities along a branch.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub index: usize,
    /// `T alpha / |1 + beta|`.
    pub period_scaled: Option<f64>,
    /// `A / (T (1 - alpha))`.
    pub amplitude_scaled: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scaling {
    pub rows: Vec<ScalingRow>,
    /// Relative spread of the last five values.
    pub period_spread: Option<f64>,
    pub amplitude_spread: Option<f64>,
    /// Set when the branch never left the near-sinusoidal regime.
    pub pre_asymptotic: bool,
}

fn tail_spread(v: &[Option<f64>]) -> Option<f64> {
    if v.len() < 5 {
        return None;
    }
    let tail: Option<Vec<f64>> = v[v.len() - 5..].iter().cloned().collect();
    let tail = tail?;
    let mean = tail.iter().sum::<f64>() / 5.0;
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mean.abs() > 0.0).then(|| (hi - lo) / mean.abs())
}

pub fn scaling_diagnostics(branch: &Branch) -> Result<Scaling> {
    if branch.points.len() < 10 {
        return Err(Error::Precondition(
            "scaling diagnostics need at least 10 points".into(),
        ));
    }
    let rows: Vec<ScalingRow> = branch
        .points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let pr = p.params();
            let t = p.metrics.period;
            let period_scaled = (pr.alpha.abs() > 1e-12 && (1.0 + pr.beta).abs() > 1e-12)
                .then(|| t * pr.alpha / (1.0 + pr.beta).abs());
            let amplitude_scaled = ((1.0 - pr.alpha).abs() > 1e-12)
                .then(|| p.metrics.amplitude / (t * (1.0 - pr.alpha)));
            ScalingRow {
                index,
                period_scaled,
                amplitude_scaled,
            }
        })
        .collect();
    let ps: Vec<_> = rows.iter().map(|r| r.period_scaled).collect();
    let as_: Vec<_> = rows.iter().map(|r| r.amplitude_scaled).collect();
    Ok(Scaling {
        period_spread: tail_spread(&ps),
        amplitude_spread: tail_spread(&as_),
        pre_asymptotic: branch.last().min_plus_one > 0.5,
        rows,
    })
}

/// What ended a two-parameter curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Endpoint {
    /// The fold orbit's minimum reached `-1`.
    Mf,
    /// Amplitude shrank to zero (approach to a Hopf degeneracy).
    SmallAmplitude,
    PeriodCap,
    Bound,
    MaxSteps,
    Truncated,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Endpoint::Mf => "MF",
            Endpoint::SmallAmplitude => "SMALL_AMPLITUDE",
            Endpoint::PeriodCap => "PERIOD_CAP",
            Endpoint::Bound => "BOUND",
            Endpoint::MaxSteps => "MAX_STEPS",
            Endpoint::Truncated => "TRUNCATED",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CurveKind {
    F,
    M,
}

#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub orbit: PeriodicOrbit,
    pub metrics: OrbitMetrics,
    pub s_star: Option<f64>,
    /// Residual of the extended system at this point.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    pub endpoint: Endpoint,
    /// Indices where the parameter tangent reversed in both alpha and beta.
    pub cusps: Vec<usize>,
}

impl Curve {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["alpha", "beta", "b", "period", "s_star", "endpoint_kind"]);
        let n = self.points.len();
        for (i, p) in self.points.iter().enumerate() {
            let kind = if i + 1 == n {
                self.endpoint.to_string()
            } else if self.cusps.contains(&i) {
                "CP".to_string()
            } else {
                String::new()
            };
            let pr = p.orbit.params;
            t.push(vec![
                pr.alpha.into(),
                pr.beta.into(),
                pr.b.into(),
                p.metrics.period.into(),
                p.s_star.into(),
                kind.into(),
            ]);
        }
        t
    }
}

/// A cusp at a small local amplitude minimum is a passage through GH, not a genuine cusp.
fn passed_gh(points: &[CurvePoint], c: usize) -> bool {
    let amp = |i: usize| points[i].metrics.amplitude;
    if c == 0 || c + 1 >= points.len() {
        return false;
    }
    let peak = points
        .iter()
        .map(|p| p.metrics.amplitude)
        .fold(0.0, f64::max);
    amp(c) < amp(c - 1) && amp(points.len() - 1) > amp(c) && amp(c) < 0.25 * peak
}

/// Two-parameter loop shared by the F and M curves.
fn run_curve(
    mut track: Track<DdeField>,
    kind: CurveKind,
    opts: &ContOptions,
    user: &mut dyn CurveRows,
) -> Result<Curve> {
    let mut curve = Curve {
        kind,
        points: vec![],
        endpoint: Endpoint::MaxSteps,
        cusps: vec![],
    };
    let push =
        |track: &Track<DdeField>, z: &[f64], residual: f64, curve: &mut Curve| -> Result<()> {
            let orbit = track.orbit(z)?;
            let metrics = orbit.metrics();
            let s_star = (track.n_aux == 1).then(|| {
                let s = z[z.len() - 1];
                s - s.floor()
            });
            curve.points.push(CurvePoint {
                orbit,
                metrics,
                s_star,
                residual,
            });
            Ok(())
        };
    push(&track, &track.prev.clone(), 0.0, &mut curve)?;
    push(&track, &track.cur.clone(), 0.0, &mut curve)?;
    let mut h = opts.h0;
    let mut since_remesh = 0usize;
    let mut last_dir: Option<(f64, f64)> = None;
    let (mut rev_a, mut rev_b): (Option<usize>, Option<usize>) = (None, None);
    for _ in 0..opts.max_steps {
        let sec = track.secant();
        let pred: Vec<f64> = track.cur.iter().zip(&sec).map(|(z, s)| z + h * s).collect();
        let res = {
            let mut rows =
                |ext: &Extended<DdeField>,
                 z: &[f64],
                 wj: bool,
                 row: usize,
                 res: &mut Vec<f64>,
                 jac: &mut Vec<_>| { user.rows(ext, z, wj, row, res, jac) };
            track.correct(&pred, &sec, &mut rows, 10)
        };
        match res {
            Ok((z, rep)) => {
                let lay = track.lay();
                let (da, db) = (
                    z[lay.col_par(0)] - track.cur[lay.col_par(0)],
                    z[lay.col_par(1)] - track.cur[lay.col_par(1)],
                );
                track.accept(z);
                user.accepted();
                let zc = track.cur.clone();
                push(&track, &zc, rep.residual, &mut curve)?;
                let idx = curve.points.len() - 1;
                if let Some((pa, pb)) = last_dir {
                    // reversals of both parameter components within two steps mark a cusp
                    if pa * da < 0.0 {
                        rev_a = Some(idx);
                    }
                    if pb * db < 0.0 {
                        rev_b = Some(idx);
                    }
                    if let (Some(ia), Some(ib)) = (rev_a, rev_b) {
                        if ia.abs_diff(ib) <= 2 {
                            let c = ia.min(ib) - 1;
                            rev_a = None;
                            rev_b = None;
                            if passed_gh(&curve.points, c) {
                                // the curve went through GH and is retracing its mirror image
                                curve.points.truncate(c + 1);
                                curve.endpoint = Endpoint::SmallAmplitude;
                                break;
                            }
                            curve.cusps.push(c);
                        }
                    }
                }
                last_dir = Some((da, db));
                let m = curve.points[idx].metrics;
                let pr = curve.points[idx].orbit.params;
                let out = |v: f64| v < opts.bounds.0 || v > opts.bounds.1;
                if kind == CurveKind::F && m.min_u + 1.0 <= opts.min_floor {
                    curve.endpoint = Endpoint::Mf;
                    break;
                }
                if m.amplitude < opts.small_amplitude {
                    curve.endpoint = Endpoint::SmallAmplitude;
                    break;
                }
                if m.period >= opts.period_cap {
                    curve.endpoint = Endpoint::PeriodCap;
                    break;
                }
                if out(pr.alpha) || out(pr.beta) {
                    curve.endpoint = Endpoint::Bound;
                    break;
                }
                if rep.iters <= 4 {
                    h = (h * 1.5).min(opts.h_max);
                }
                since_remesh += 1;
                if since_remesh >= opts.remesh_every {
                    let old = track.mesh.clone();
                    let n = track
                        .suggested_intervals(opts)
                        .max(track.mesh.intervals() * 9 / 10);
                    track.remesh(n);
                    user.remeshed(&old, &track.mesh);
                    since_remesh = 0;
                }
            }
            Err(Error::Physicality { .. }) if kind == CurveKind::F => {
                h *= 0.5;
                if h < opts.h_min {
                    curve.endpoint = Endpoint::Mf;
                    break;
                }
            }
            Err(_) => {
                h *= 0.5;
                if h < opts.h_min {
                    curve.endpoint = Endpoint::Truncated;
                    break;
                }
            }
        }
    }
    Ok(curve)
}

trait CurveRows {
    fn rows(
        &mut self,
        ext: &Extended<DdeField>,
        z: &[f64],
        wj: bool,
        row: usize,
        res: &mut Vec<f64>,
        jac: &mut Vec<Triplet<usize, usize, f64>>,
    ) -> Result<()>;
    fn accepted(&mut self) {}
    fn remeshed(&mut self, _old: &Mesh, _new: &Mesh) {}
}

impl CurveRows for FoldRows {
    fn rows(
        &mut self,
        ext: &Extended<DdeField>,
        z: &[f64],
        wj: bool,
        row: usize,
        res: &mut Vec<f64>,
        jac: &mut Vec<Triplet<usize, usize, f64>>,
    ) -> Result<()> {
        FoldRows::rows(self, ext, z, wj, row, res, jac)
    }

    fn accepted(&mut self) {
        self.update_borders();
    }

    fn remeshed(&mut self, old: &Mesh, new: &Mesh) {
        FoldRows::remesh(self, old, new, 1);
    }
}

struct MRows;

impl CurveRows for MRows {
    fn rows(
        &mut self,
        ext: &Extended<DdeField>,
        z: &[f64],
        wj: bool,
        row: usize,
        res: &mut Vec<f64>,
        jac: &mut Vec<Triplet<usize, usize, f64>>,
    ) -> Result<()> {
        m_rows(ext, z, wj, row, res, jac)
    }
}

/// Second point of a curve: the start re-solved with `fixed` shifted by `dp`.
fn second_point(
    track: &Track<DdeField>,
    user: &mut dyn CurveRows,
    fixed: usize,
    dp: f64,
) -> Result<Vec<f64>> {
    let lay = track.lay();
    let mut z0 = track.cur.clone();
    z0[lay.col_par(fixed)] += dp;
    let target = z0[lay.col_par(fixed)];
    let col = lay.col_par(fixed);
    let mut rows = |ext: &Extended<DdeField>,
                    z: &[f64],
                    wj: bool,
                    row: usize,
                    res: &mut Vec<f64>,
                    jac: &mut Vec<_>| {
        user.rows(ext, z, wj, row, res, jac)?;
        let r = res.len();
        res.push(z[col] - target);
        if wj {
            jac.push(Triplet::new(r, col, 1.0));
        }
        Ok(())
    };
    let (z, _) = track.solve_fixed(&z0, &mut rows, 20)?;
    Ok(z)
}

/// Continues a fold of periodic orbits in alpha and beta. The start orbit must be
/// (close to) a fold for variation of alpha at fixed beta; `dbeta` sets the first
/// step and the direction.
pub fn continue_fold(start: &PeriodicOrbit, dbeta: f64, opts: &ContOptions) -> Result<Curve> {
    let mut z = start.to_z();
    z.push(start.params.alpha);
    z.push(start.params.beta);
    let one = {
        let mut z1 = start.to_z();
        z1.push(start.params.alpha);
        z1
    };
    let t1 = Track::new(
        start.params.b,
        field_params(&start.params),
        vec![ALPHA],
        0,
        start.mesh.clone(),
        one.clone(),
        -1.0,
    );
    let tan = t1
        .tangent_at(
            &one,
            &{
                let mut e = vec![0.0; one.len()];
                e[one.len() - 1] = 1.0;
                e
            },
            &mut no_rows,
        )
        .ok();
    let mut fr = FoldRows::new(&t1, &one, tan.as_deref());
    let mut track = Track::new(
        start.params.b,
        field_params(&start.params),
        vec![ALPHA, BETA],
        0,
        start.mesh.clone(),
        z,
        -1.0,
    );
    // converge the start onto the fold with beta fixed
    let z0 = second_point(&track, &mut fr, 1, 0.0)?;
    track.cur = z0.clone();
    track.prev = z0;
    fr.accepted();
    let z1 = second_point(&track, &mut fr, 1, dbeta)?;
    track.accept(z1);
    fr.accepted();
    run_curve(track, CurveKind::F, opts, &mut fr)
}

/// Continues the locus where the orbit's minimum equals `-1`, with `s*` the
/// position of the minimum as an extra unknown. `dbeta` sets the first step.
pub fn continue_m(
    start: &PeriodicOrbit,
    s_star: f64,
    dbeta: f64,
    opts: &ContOptions,
) -> Result<Curve> {
    let (min_u, _, _) = start.profile().range(0);
    if (min_u + 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "start orbit has min {min_u}, not -1"
        )));
    }
    let mut z = start.to_z();
    z.push(start.params.alpha);
    z.push(start.params.beta);
    z.push(s_star);
    let mut track = Track::new(
        start.params.b,
        field_params(&start.params),
        vec![ALPHA, BETA],
        1,
        start.mesh.clone(),
        z,
        M_ITERATE_FLOOR,
    );
    let z1 = second_point(&track, &mut MRows, 1, dbeta)?;
    track.accept(z1);
    run_curve(track, CurveKind::M, opts, &mut MRows)
}

/// Criticality estimate at one Hopf point from the small-amplitude branch.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Criticality {
    pub theta: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
    /// Coefficient `c` of the fit `alpha - alpha_h = c A^2 + d A^4`; positive
    /// means orbits exist on the side where the equilibrium is unstable.
    pub c: f64,
    pub d: f64,
    pub r2: f64,
}

/// Fits the bifurcating branch over six amplitudes in `[0.01, 0.05]`.
pub fn criticality(theta: f64, b: f64) -> Result<Criticality> {
    let (ah, bh) = hopf_point(theta)?;
    let p = Params::new(ah, bh, b)?;
    let period = 2.0 * std::f64::consts::PI / theta;
    let mut guess = PeriodicOrbit::from_fn(p, 40, period, |s| {
        0.01 * (2.0 * std::f64::consts::PI * s).cos()
    });
    let mut a = Vec::new();
    let mut d = Vec::new();
    for k in 0..6 {
        let eps = 0.01 + 0.04 * k as f64 / 5.0;
        let po = orbit::solve_pinned(guess.params, &guess, ALPHA, eps)?;
        let m = po.metrics();
        a.push(0.5 * m.amplitude);
        d.push(po.params.alpha - ah);
        guess = po;
    }
    // least squares on the basis A^2, A^4
    let (mut s22, mut s24, mut s44, mut r2_, mut r4_) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (ai, di) in a.iter().zip(&d) {
        let (x2, x4) = (ai * ai, ai.powi(4));
        s22 += x2 * x2;
        s24 += x2 * x4;
        s44 += x4 * x4;
        r2_ += x2 * di;
        r4_ += x4 * di;
    }
    let det = s22 * s44 - s24 * s24;
    let c = (r2_ * s44 - r4_ * s24) / det;
    let dd = (s22 * r4_ - s24 * r2_) / det;
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (ai, di) in a.iter().zip(&d) {
        let f = c * ai * ai + dd * ai.powi(4);
        ss_res += (di - f).powi(2);
        ss_tot += (di - mean).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    if !(r2 >= 0.99) {
        return Err(Error::Convergence {
            at: theta,
            reason: format!("criticality fit rejected, R^2 = {r2}"),
        });
    }
    Ok(Criticality {
        theta,
        alpha_h: ah,
        beta_h: bh,
        c,
        d: dd,
        r2,
    })
}

/// Generalized Hopf point on H: bisection on the sign of the criticality
/// coefficient over a bracket in theta.
pub fn locate_gh(b: f64, bracket: (f64, f64), tol: f64) -> Result<Criticality> {
    let (mut lo, mut hi) = bracket;
    let mut clo = criticality(lo, b)?;
    let chi = criticality(hi, b)?;
    if clo.c * chi.c > 0.0 {
        return Err(Error::Argument(format!(
            "criticality has one sign on [{lo}, {hi}]"
        )));
    }
    let mut best = clo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let cm = criticality(mid, b)?;
        if cm.c * clo.c > 0.0 {
            lo = mid;
            clo = cm;
        } else {
            hi = mid;
        }
        best = cm;
    }
    let theta = 0.5 * (lo + hi);
    let (alpha_h, beta_h) = hopf_point(theta)?;
    Ok(Criticality {
        theta,
        alpha_h,
        beta_h,
        c: 0.0,
        ..best
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_gradient_matches_differences() {
        let (_, po) = orbit::hopf_initial_guess(1.8, 0.05, 0.1).unwrap();
        let mut z = po.to_z();
        z.push(po.params.alpha);
        z.push(po.params.beta);
        let track = Track::new(
            0.1,
            field_params(&po.params),
            vec![ALPHA, BETA],
            0,
            po.mesh.clone(),
            z.clone(),
            -1.0,
        );
        let mut fr = FoldRows::new(&track, &z, None);
        let ext = track.ext();
        let (mut res, mut jac) = (vec![], vec![]);
        fr.rows(&ext, &z, true, 0, &mut res, &mut jac).unwrap();
        let mut grad = vec![0.0; z.len()];
        for t in &jac {
            grad[t.col] += t.val;
        }
        let d: Vec<f64> = (0..z.len())
            .map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5)
            .collect();
        let g_at = |s: f64| {
            let zz: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            fr.test(&ext, &zz).unwrap().0
        };
        let h = 1e-6;
        let fd = (g_at(h) - g_at(-h)) / (2.0 * h);
        let an: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
        assert!(
            (fd - an).abs() < 1e-5 * (1.0 + an.abs()),
            "fd {fd} analytic {an}"
        );
    }
}
