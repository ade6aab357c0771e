//! Piecewise-polynomial collocation for periodic boundary-value problems.
//!
//! Profiles live on rescaled time `s ∈ [0, 1]`, are continuous, and are
//! represented by nodal values on `m + 1` equispaced nodes per mesh interval.
//! The equations are enforced at the `m` Gauss points of each interval.
//! The same kernel serves the scalar delay equation (nonlocal evaluations, wrapped
//! modulo 1) and planar ODEs (local evaluations only).

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Polynomial degree per mesh interval.
pub const DEGREE: usize = 4;
/// Largest supported state dimension.
pub const MAX_DIM: usize = 2;

const GAUSS: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS_W: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

/// Gauss collocation points on `[0, 1]`.
pub fn gauss_points() -> &'static [f64; DEGREE] {
    &GAUSS
}

/// Lagrange basis on the nodes `k / m`: values and derivatives at local `t`.
pub fn lagrange(t: f64) -> ([f64; DEGREE + 1], [f64; DEGREE + 1]) {
    let m = DEGREE;
    let node = |k: usize| k as f64 / m as f64;
    let mut v = [0.0; DEGREE + 1];
    let mut d = [0.0; DEGREE + 1];
    for k in 0..=m {
        let mut num = 1.0;
        for j in 0..=m {
            if j != k {
                num *= (t - node(j)) / (node(k) - node(j));
            }
        }
        v[k] = num;
        let mut s = 0.0;
        for l in 0..=m {
            if l == k {
                continue;
            }
            let mut pr = 1.0 / (node(k) - node(l));
            for j in 0..=m {
                if j != k && j != l {
                    pr *= (t - node(j)) / (node(k) - node(j));
                }
            }
            s += pr;
        }
        d[k] = s;
    }
    (v, d)
}

/// Mesh on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    breaks: Vec<f64>,
}

impl Mesh {
    pub fn new(breaks: Vec<f64>) -> Result<Self> {
        let ok = breaks.len() >= 2
            && breaks[0] == 0.0
            && *breaks.last().unwrap() == 1.0
            && breaks.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(Error::Argument(
                "mesh must increase strictly from 0 to 1".into(),
            ));
        }
        Ok(Mesh { breaks })
    }

    pub fn uniform(n: usize) -> Self {
        let mut breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        breaks[n] = 1.0;
        Mesh { breaks }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Number of distinct nodes including both ends.
    pub fn n_nodes(&self) -> usize {
        self.intervals() * DEGREE + 1
    }

    pub fn h(&self, i: usize) -> f64 {
        self.breaks[i + 1] - self.breaks[i]
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for i in 0..self.intervals() {
            for k in 0..DEGREE {
                out.push(self.breaks[i] + self.h(i) * k as f64 / DEGREE as f64);
            }
        }
        out.push(1.0);
        out
    }

    /// Interval index and local coordinate of `s`, which is wrapped into `[0, 1)`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let mut s = s - s.floor();
        if s >= 1.0 {
            s = 0.0;
        }
        let n = self.intervals();
        let i = self
            .breaks
            .partition_point(|&b| b <= s)
            .saturating_sub(1)
            .min(n - 1);
        (i, (s - self.breaks[i]) / self.h(i))
    }

    /// Collocation points, interval by interval.
    pub fn colloc_points(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.intervals() * DEGREE);
        for i in 0..self.intervals() {
            for g in GAUSS {
                out.push(self.breaks[i] + self.h(i) * g);
            }
        }
        out
    }
}

/// Value of a profile at a point, with the basis weights producing it.
#[derive(Clone, Copy, Debug)]
pub struct PointEval {
    pub value: f64,
    pub deriv: f64,
    /// First node of the interval.
    pub node: usize,
    pub weights: [f64; DEGREE + 1],
    /// Derivative weights, already divided by the interval length.
    pub dweights: [f64; DEGREE + 1],
}

/// Periodic profile with `dim` components stored node-major.
#[derive(Clone, Copy, Debug)]
pub struct Profile<'a> {
    pub mesh: &'a Mesh,
    pub x: &'a [f64],
    pub dim: usize,
}

impl Profile<'_> {
    pub fn eval(&self, comp: usize, s: f64) -> PointEval {
        let (i, t) = self.mesh.locate(s);
        let (v, d) = lagrange(t);
        let h = self.mesh.h(i);
        let node = i * DEGREE;
        let mut value = 0.0;
        let mut deriv = 0.0;
        let mut dweights = [0.0; DEGREE + 1];
        for k in 0..=DEGREE {
            let xk = self.x[(node + k) * self.dim + comp];
            value += xk * v[k];
            dweights[k] = d[k] / h;
            deriv += xk * dweights[k];
        }
        PointEval {
            value,
            deriv,
            node,
            weights: v,
            dweights,
        }
    }

    pub fn value(&self, comp: usize, s: f64) -> f64 {
        self.eval(comp, s).value
    }

    /// Minimum and maximum of one component, sampled densely.
    pub fn range(&self, comp: usize) -> (f64, f64, f64) {
        let mut lo = (f64::INFINITY, 0.0);
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.mesh.intervals() {
            for j in 0..24 {
                let s = self.mesh.breaks[i] + self.mesh.h(i) * j as f64 / 24.0;
                let v = self.value(comp, s);
                if v < lo.0 {
                    lo = (v, s);
                }
                hi = hi.max(v);
            }
        }
        (lo.0, lo.1, hi)
    }
}

/// Dependence of a right-hand-side value on a profile value somewhere.
#[derive(Clone, Copy, Debug)]
pub struct PointTerm {
    pub out: usize,
    pub comp: usize,
    pub s: f64,
    pub coef: f64,
}

/// Linearization of the right-hand side at one collocation point.
#[derive(Clone, Debug, Default)]
pub struct Lin {
    pub points: Vec<PointTerm>,
    pub dt: [f64; MAX_DIM],
    pub dpar: [[f64; 4]; MAX_DIM],
}

impl Lin {
    pub fn clear(&mut self) {
        self.points.clear();
        self.dt = [0.0; MAX_DIM];
        self.dpar = [[0.0; 4]; MAX_DIM];
    }

    pub fn point(&mut self, out: usize, comp: usize, s: f64, coef: f64) {
        self.points.push(PointTerm { out, comp, s, coef });
    }
}

/// Right-hand side of `x'(s) = f(s, x; T, par)` in rescaled time.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    /// Evaluates `f` at `s`; fills `lin` when given. Point terms may refer to
    /// unwrapped arguments.
    fn eval(
        &self,
        s: f64,
        prof: &Profile,
        period: f64,
        par: &[f64],
        lin: Option<&mut Lin>,
    ) -> [f64; MAX_DIM];
}

/// Layout of the unknown vector `[X, T, free parameters...]`.
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub dim: usize,
    pub n_nodes: usize,
    pub n_free: usize,
}

impl Layout {
    pub fn new(mesh: &Mesh, dim: usize, n_free: usize) -> Self {
        Layout {
            dim,
            n_nodes: mesh.n_nodes(),
            n_free,
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_nodes * self.dim
    }

    pub fn col_t(&self) -> usize {
        self.n_x()
    }

    pub fn col_par(&self, k: usize) -> usize {
        self.n_x() + 1 + k
    }

    /// Rows of the core system: collocation, periodicity and phase.
    pub fn n_core(&self) -> usize {
        self.n_x() + 1
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_x() + 1 + self.n_free
    }
}

/// Derivative of a profile at the collocation points, used by the phase condition.
pub fn phase_reference(prof: &Profile) -> Vec<f64> {
    let mut out = Vec::with_capacity(prof.mesh.intervals() * DEGREE * prof.dim);
    for s in prof.mesh.colloc_points() {
        for c in 0..prof.dim {
            out.push(prof.eval(c, s).deriv);
        }
    }
    out
}

/// Residual and sparse Jacobian of the core system.
pub struct Assembly {
    pub res: Vec<f64>,
    pub jac: Vec<Triplet<usize, usize, f64>>,
}

/// Assembles the core collocation system at `z = [X, T, free...]`.
///
/// `par` holds all field parameters; `free[k]` names which of them is unknown `k`.
pub fn assemble<F: Field + ?Sized>(
    field: &F,
    mesh: &Mesh,
    z: &[f64],
    par: &[f64],
    free: &[usize],
    phase_ref: &[f64],
    want_jac: bool,
) -> Assembly {
    let dim = field.dim();
    let lay = Layout::new(mesh, dim, free.len());
    let x = &z[..lay.n_x()];
    let period = z[lay.col_t()];
    let mut par = par.to_vec();
    for (k, &f) in free.iter().enumerate() {
        par[f] = z[lay.col_par(k)];
    }
    let prof = Profile { mesh, x, dim };
    let basis: Vec<_> = GAUSS.iter().map(|&g| lagrange(g)).collect();

    let intervals: Vec<usize> = (0..mesh.intervals()).collect();
    let blocks = crate::par::map(&intervals, |&i| {
        let h = mesh.h(i);
        let node = i * DEGREE;
        let mut res = Vec::with_capacity(DEGREE * dim);
        let mut jac = Vec::new();
        let mut lin = Lin::default();
        for (c, &g) in GAUSS.iter().enumerate() {
            let s = mesh.breaks[i] + h * g;
            let (_, d) = &basis[c];
            lin.clear();
            let f = field.eval(s, &prof, period, &par, want_jac.then_some(&mut lin));
            for j in 0..dim {
                let row = (node + c) * dim + j;
                let mut xp = 0.0;
                for k in 0..=DEGREE {
                    xp += x[(node + k) * dim + j] * d[k] / h;
                }
                res.push(xp - f[j]);
                if want_jac {
                    for k in 0..=DEGREE {
                        jac.push(Triplet::new(row, (node + k) * dim + j, d[k] / h));
                    }
                    jac.push(Triplet::new(row, lay.col_t(), -lin.dt[j]));
                    for (kf, &fp) in free.iter().enumerate() {
                        jac.push(Triplet::new(row, lay.col_par(kf), -lin.dpar[j][fp]));
                    }
                }
            }
            if want_jac {
                for pt in &lin.points {
                    let ev = prof.eval(pt.comp, pt.s);
                    let row = (node + c) * dim + pt.out;
                    for k in 0..=DEGREE {
                        if ev.weights[k] != 0.0 {
                            jac.push(Triplet::new(
                                row,
                                (ev.node + k) * dim + pt.comp,
                                -pt.coef * ev.weights[k],
                            ));
                        }
                    }
                }
            }
        }
        // phase contribution of this interval
        let mut ph = 0.0;
        for (c, &w) in GAUSS_W.iter().enumerate() {
            let (v, _) = &basis[c];
            for j in 0..dim {
                let wt = h * w * phase_ref[((node + c) * dim) + j];
                for k in 0..=DEGREE {
                    let col = (node + k) * dim + j;
                    ph += wt * v[k] * x[col];
                    if want_jac {
                        jac.push(Triplet::new(lay.n_core() - 1, col, wt * v[k]));
                    }
                }
            }
        }
        (res, jac, ph)
    });

    let mut res = Vec::with_capacity(lay.n_core());
    let mut jac = Vec::new();
    let mut phase = 0.0;
    for (r, j, ph) in blocks {
        res.extend(r);
        jac.extend(j);
        phase += ph;
    }
    let last = (lay.n_nodes - 1) * dim;
    for j in 0..dim {
        let row = res.len();
        res.push(x[j] - x[last + j]);
        if want_jac {
            jac.push(Triplet::new(row, j, 1.0));
            jac.push(Triplet::new(row, last + j, -1.0));
        }
    }
    res.push(phase);
    Assembly { res, jac }
}

/// Dense central-difference Jacobian of the core system; a debugging oracle for
/// the analytic assembly.
pub fn fd_jacobian<F: Field + ?Sized>(
    field: &F,
    mesh: &Mesh,
    z: &[f64],
    par: &[f64],
    free: &[usize],
    phase_ref: &[f64],
    step: f64,
) -> Vec<Vec<f64>> {
    let mut cols = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let h = step * (1.0 + z[k].abs());
        let mut zp = z.to_vec();
        zp[k] += h;
        let mut zm = z.to_vec();
        zm[k] -= h;
        let rp = assemble(field, mesh, &zp, par, free, phase_ref, false).res;
        let rm = assemble(field, mesh, &zm, par, free, phase_ref, false).res;
        cols.push(
            rp.iter()
                .zip(&rm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let rows = cols.first().map_or(0, Vec::len);
    (0..rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Dense copy of a triplet list (duplicates summed).
pub fn densify(rows: usize, cols: usize, trip: &[Triplet<usize, usize, f64>]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; cols]; rows];
    for t in trip {
        m[t.row][t.col] += t.val;
    }
    m
}

/// Factored square sparse matrix.
pub struct Factor {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl Factor {
    pub fn new(n: usize, trip: &[Triplet<usize, usize, f64>]) -> Result<Self> {
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, trip)
            .map_err(|e| Error::Numerical(format!("sparse assembly: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Numerical(format!("sparse LU: {e:?}")))?;
        Ok(Factor { lu, n })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Col::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[i]).collect()
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Col::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve_transpose(&b);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Dense row appended to a sparse system.
pub fn dense_row(row: usize, g: &[f64], out: &mut Vec<Triplet<usize, usize, f64>>) {
    for (c, &v) in g.iter().enumerate() {
        if v != 0.0 {
            out.push(Triplet::new(row, c, v));
        }
    }
}

/// Result of one Newton solve.
#[derive(Clone, Copy, Debug)]
pub struct NewtonReport {
    pub iters: usize,
    pub residual: f64,
}

/// Newton's method on a square system given by `f(z) -> (residual, Jacobian)`.
pub fn newton<S>(z: &mut [f64], max_iter: usize, tol: f64, mut system: S) -> Result<NewtonReport>
where
    S: FnMut(&[f64], bool) -> Result<(Vec<f64>, Vec<Triplet<usize, usize, f64>>)>,
{
    let n = z.len();
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        let (r, jac) = system(z, true)?;
        if r.len() != n {
            return Err(Error::Numerical(format!(
                "system has {} rows for {n} unknowns",
                r.len()
            )));
        }
        residual = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !residual.is_finite() {
            break;
        }
        let lu = Factor::new(n, &jac)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dz = lu.solve(&neg);
        let mut step = 0.0f64;
        let mut scale = 0.0f64;
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi += di;
            step = step.max(di.abs());
            scale = scale.max(zi.abs());
        }
        if !step.is_finite() {
            break;
        }
        if step < tol * (1.0 + scale) {
            let (r, _) = system(z, false)?;
            residual = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            return Ok(NewtonReport {
                iters: it + 1,
                residual,
            });
        }
    }
    Err(Error::Newton {
        iters: max_iter,
        residual,
    })
}

/// Extra equations appended after the core rows: `(z, want_jac, first_row, res, jac)`.
pub type Extra<'e> = dyn FnMut(&[f64], bool, usize, &mut Vec<f64>, &mut Vec<Triplet<usize, usize, f64>>) -> Result<()>
    + 'e;

/// Core collocation system plus caller-supplied rows and auxiliary unknowns.
pub struct Extended<'a, F: Field + ?Sized> {
    pub field: &'a F,
    pub mesh: &'a Mesh,
    pub par: Vec<f64>,
    pub free: Vec<usize>,
    pub phase_ref: Vec<f64>,
    /// Unknowns after `[X, T, free...]` used only by the extra rows.
    pub n_aux: usize,
}

impl<F: Field + ?Sized> Extended<'_, F> {
    pub fn layout(&self) -> Layout {
        Layout::new(self.mesh, self.field.dim(), self.free.len())
    }

    pub fn n_unknowns(&self) -> usize {
        self.layout().n_unknowns() + self.n_aux
    }

    /// Field parameters with the free ones read from `z`.
    pub fn params_at(&self, z: &[f64]) -> Vec<f64> {
        let lay = self.layout();
        let mut p = self.par.clone();
        for (k, &f) in self.free.iter().enumerate() {
            p[f] = z[lay.col_par(k)];
        }
        p
    }

    pub fn system(
        &self,
        z: &[f64],
        want_jac: bool,
        extra: &mut Extra,
    ) -> Result<(Vec<f64>, Vec<Triplet<usize, usize, f64>>)> {
        let lay = self.layout();
        let core = &z[..lay.n_unknowns()];
        let Assembly { mut res, mut jac } = assemble(
            self.field,
            self.mesh,
            core,
            &self.par,
            &self.free,
            &self.phase_ref,
            want_jac,
        );
        let row = res.len();
        extra(z, want_jac, row, &mut res, &mut jac)?;
        Ok((res, jac))
    }

    /// Newton solve; `guard` may veto an iterate (for example on physicality).
    pub fn solve(
        &self,
        z: &mut [f64],
        extra: &mut Extra,
        guard: &dyn Fn(&[f64]) -> Result<()>,
        max_iter: usize,
        tol: f64,
    ) -> Result<NewtonReport> {
        newton(z, max_iter, tol, |z, wj| {
            guard(z)?;
            self.system(z, wj, extra)
        })
    }
}

/// Core rows only; no extra equations.
pub fn no_extra(
    _: &[f64],
    _: bool,
    _: usize,
    _: &mut Vec<f64>,
    _: &mut Vec<Triplet<usize, usize, f64>>,
) -> Result<()> {
    Ok(())
}

/// Per-interval mesh monitor: the `(m+1)`-th derivative estimate raised to
/// `1/(m+1)` (de Boor), maximized over components.
pub fn monitor(prof: &Profile) -> Vec<f64> {
    let mesh = prof.mesh;
    let n = mesh.intervals();
    let dim = prof.dim;
    let m = DEGREE;
    let mut mon = vec![0.0f64; n];
    for j in 0..dim {
        // m-th derivative per interval from the m-th forward difference
        let dm: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                let mut binom = 1.0;
                for k in 0..=m {
                    let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                    acc += sign * binom * prof.x[(i * m + k) * dim + j];
                    binom = binom * (m - k) as f64 / (k + 1) as f64;
                }
                acc / (mesh.h(i) / m as f64).powi(m as i32)
            })
            .collect();
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let a = (dm[ip] - dm[i]).abs() / ((mesh.h(i) + mesh.h(ip)) / 2.0);
            let b = (dm[i] - dm[im]).abs() / ((mesh.h(i) + mesh.h(im)) / 2.0);
            mon[i] = mon[i].max(a.max(b).powf(1.0 / (m as f64 + 1.0)));
        }
    }
    mon
}

/// Number of equidistributed intervals for an error per interval near `tol`.
pub fn suggest_intervals(prof: &Profile, tol: f64, lo: usize, hi: usize) -> usize {
    let mon = monitor(prof);
    let total: f64 = mon
        .iter()
        .enumerate()
        .map(|(i, m)| m * prof.mesh.h(i))
        .sum();
    let n = (total * tol.powf(-1.0 / (DEGREE as f64 + 1.0))).ceil();
    if n.is_finite() {
        (n as usize).clamp(lo, hi)
    } else {
        hi
    }
}

/// Equidistributing remesh on the [`monitor`], with a floor so smooth stretches
/// keep some points.
pub fn remesh(prof: &Profile, n_new: usize) -> (Mesh, Vec<f64>) {
    let mesh = prof.mesh;
    let n = mesh.intervals();
    let mon = monitor(prof);
    let top = mon.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-3 * top + 1e-12;
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + mon[i].max(floor) * mesh.h(i);
    }
    let total = cum[n];
    let mut breaks = vec![0.0; n_new + 1];
    for (k, b) in breaks.iter_mut().enumerate().skip(1).take(n_new - 1) {
        let target = total * k as f64 / n_new as f64;
        let i = cum.partition_point(|&c| c <= target).clamp(1, n) - 1;
        let frac = (target - cum[i]) / (cum[i + 1] - cum[i]);
        *b = mesh.breaks[i] + frac * mesh.h(i);
    }
    breaks[n_new] = 1.0;
    // guard against collapsed intervals
    for k in 1..n_new {
        if breaks[k] <= breaks[k - 1] + 1e-9 {
            breaks[k] = breaks[k - 1] + 1e-9;
        }
    }
    let new_mesh = Mesh { breaks };
    let x = interpolate(prof, &new_mesh);
    (new_mesh, x)
}

/// Nodal values of `prof` on another mesh.
pub fn interpolate(prof: &Profile, mesh: &Mesh) -> Vec<f64> {
    let nodes = mesh.nodes();
    let mut x = Vec::with_capacity(nodes.len() * prof.dim);
    for &s in &nodes {
        for j in 0..prof.dim {
            x.push(prof.value(j, s));
        }
    }
    let last = (nodes.len() - 1) * prof.dim;
    for j in 0..prof.dim {
        x[last + j] = x[j];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_partition_of_unity() {
        for t in [0.0, 0.13, 0.5, 0.97] {
            let (v, d) = lagrange(t);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(d.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_integrates_degree_seven() {
        let s: f64 = GAUSS.iter().zip(GAUSS_W).map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn locate_wraps() {
        let m = Mesh::uniform(4);
        assert_eq!(m.locate(1.0).0, 0);
        assert_eq!(m.locate(-0.1).0, 3);
        assert!((m.locate(0.3).1 - 0.2).abs() < 1e-12);
    }
}
