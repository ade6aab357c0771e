//! Dormand-Prince 5(4) integration of the state-dependent delay equation with
//! dense output, residual control, breakpoint tracking and a physicality event.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HistorySegment, Params};
use crate::pp::{horner, horner_d, PiecewisePoly};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_tol: f64,
    pub t_end: f64,
    /// Breakpoints are propagated for this many generations.
    pub max_generations: u32,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.25,
            event_tol: 1e-10,
            t_end: 10.0,
            max_generations: 5,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn until(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.event_tol > 0.0
            && self.max_step > 0.0)
        {
            return Err(Error::arg("tolerances and max_step must be positive"));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::arg("t_end must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// `1 + u(t - b)` reached zero: the total delay vanished.
    DelayNonpositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub generation: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub t1: f64,
    /// History followed by the computed solution.
    sol: PiecewisePoly,
    pub breakpoints: Vec<Breakpoint>,
    pub events: Vec<Event>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn eval(&self, t: f64) -> f64 {
        self.sol.eval(t)
    }

    pub fn eval_d(&self, t: f64) -> (f64, f64) {
        self.sol.eval_d(t)
    }

    pub fn poly(&self) -> &PiecewisePoly {
        &self.sol
    }

    pub fn breakpoint_times(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| b.t).collect()
    }

    pub fn stopped_early(&self) -> bool {
        !self.events.is_empty()
    }

    /// `u'(t) - alpha u(t) - beta u(t - 1 - u(t - b))`.
    pub fn residual(&self, t: f64, p: &Params) -> f64 {
        let (u, du) = self.sol.eval_d(t);
        let arg = t - 1.0 - self.sol.eval(t - p.b);
        du - p.rhs(u, self.sol.eval(arg))
    }

    /// Samples `(t, u)` on a uniform grid over `[t0, t1]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|k| {
                let t = self.t0 + (self.t1 - self.t0) * k as f64 / n as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

pub(crate) const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
pub(crate) const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
pub(crate) const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
pub(crate) const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct StepOut {
    y: f64,
    err: f64,
    coeffs: Vec<f64>,
    overlapped: bool,
}

struct Solver<'a> {
    p: &'a Params,
    opts: &'a IntegratorOptions,
    sol: PiecewisePoly,
    /// Breakpoints the current step is landing on; arguments just past them are
    /// evaluated from the left.
    left: Vec<f64>,
}

impl Solver<'_> {
    /// `u(s)` using the stored solution up to `t` and `prov` on `(t, t + h]`.
    fn u_at(&self, s: f64, t: f64, h: f64, prov: Option<&[f64]>, overlap: &mut bool) -> f64 {
        if s <= t {
            for &xi in &self.left {
                if s > xi && s <= xi + 1e-6 {
                    return self.sol.eval_left_of(xi, s);
                }
            }
            return self.sol.eval(s);
        }
        *overlap = true;
        match prov {
            Some(c) => horner(c, (s - t) / h),
            None => self.sol.eval(s),
        }
    }

    fn delayed(
        &self,
        ts: f64,
        ys: f64,
        t: f64,
        h: f64,
        prov: Option<&[f64]>,
        ov: &mut bool,
    ) -> f64 {
        let inner = if self.p.b == 0.0 {
            ys
        } else {
            self.u_at(ts - self.p.b, t, h, prov, ov)
        };
        self.u_at(ts - 1.0 - inner, t, h, prov, ov)
    }

    fn attempt(&self, t: f64, y: f64, h: f64, prov: Option<&[f64]>) -> StepOut {
        let mut k = [0.0; 7];
        let mut ov = false;
        for s in 0..7 {
            let ys = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
            let ts = t + C[s] * h;
            k[s] = self.p.rhs(ys, self.delayed(ts, ys, t, h, prov, &mut ov));
        }
        let y5 = y + h * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err_abs = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let sc = self.opts.abs_tol + self.opts.rel_tol * y.abs().max(y5.abs());
        let ydiff = y5 - y;
        let bspl = h * k[0] - ydiff;
        let r5 = h * (0..7).map(|j| D[j] * k[j]).sum::<f64>();
        let r4 = ydiff - h * k[6] - bspl;
        let coeffs = vec![y, ydiff + bspl, r4 + r5 - bspl, -r4 - 2.0 * r5, r5];
        StepOut {
            y: y5,
            err: (err_abs / sc).abs(),
            coeffs,
            overlapped: ov,
        }
    }

    /// Fixed-point iteration on the step polynomial when delayed arguments fall inside the step.
    fn step(&self, t: f64, y: f64, h: f64) -> Option<StepOut> {
        let mut out = self.attempt(t, y, h, None);
        if !out.overlapped {
            return Some(out);
        }
        for _ in 0..10 {
            let next = self.attempt(t, y, h, Some(&out.coeffs));
            let diff = (0..=4)
                .map(|i| {
                    let s = i as f64 / 4.0;
                    (horner(&next.coeffs, s) - horner(&out.coeffs, s)).abs()
                })
                .fold(0.0, f64::max);
            let sc = self.opts.abs_tol + self.opts.rel_tol * y.abs();
            out = next;
            if diff <= 1e-2 * sc {
                return Some(out);
            }
        }
        None
    }

    /// Worst relative residual of the step polynomial at interior points.
    fn defect(&self, t: f64, h: f64, c: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for s in [0.2, 0.5, 0.8] {
            let (u, du) = horner_d(c, s);
            let ts = t + s * h;
            let mut ov = false;
            let d = du / h - self.p.rhs(u, self.delayed(ts, u, t, h, Some(c), &mut ov));
            let sc = self.opts.abs_tol + self.opts.rel_tol * u.abs();
            worst = worst.max(d.abs() / sc);
        }
        worst
    }

    fn u_step(&self, s: f64, t: f64, h: f64, c: &[f64]) -> f64 {
        if s <= t {
            self.sol.eval(s)
        } else {
            horner(c, (s - t) / h)
        }
    }
}

struct Tracker {
    xi: f64,
    generation: u32,
    sign: f64,
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Solves the initial-value problem from `t = 0` with the given history.
pub fn integrate(
    p: &Params,
    history: &HistorySegment,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let d0 = 1.0 + history.eval(-p.b);
    if !(d0 > 0.0) {
        return Err(Error::Precondition(format!(
            "delay 1 + u(-b) = {d0} is not positive"
        )));
    }
    if !history.covers(p.b) {
        return Err(Error::Precondition(
            "history domain too short for the first delayed argument".into(),
        ));
    }
    let mut solver = Solver {
        p,
        opts,
        sol: history.poly().clone(),
        left: Vec::new(),
    };
    let mut t = 0.0;
    let mut y = history.eval(0.0);
    let mut h = opts.max_step.min(0.01).min(opts.t_end);
    let mut breakpoints = vec![Breakpoint {
        t: 0.0,
        generation: 0,
    }];
    let mut lag_queue: Vec<(f64, u32)> = Vec::new();
    let mut trackers: Vec<Tracker> = Vec::new();
    let mut events = Vec::new();
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut max_u = history.poly().max_abs();
    let spawn = |xi: f64, g: u32, lag: &mut Vec<(f64, u32)>, tr: &mut Vec<Tracker>| {
        if g >= opts.max_generations {
            return;
        }
        if p.b > 0.0 {
            lag.push((xi + p.b, g + 1));
        }
        tr.push(Tracker {
            xi,
            generation: g + 1,
            sign: -1.0,
        });
    };
    spawn(0.0, 0, &mut lag_queue, &mut trackers);

    while t < opts.t_end - 1e-14 * opts.t_end.max(1.0) {
        lag_queue.retain(|&(s, _)| s > t + opts.event_tol);
        lag_queue.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut hh = h.min(opts.max_step).min(opts.t_end - t);
        let mut lag_hit = None;
        if let Some(&(s, g)) = lag_queue.first() {
            if s <= t + hh {
                hh = s - t;
                lag_hit = Some(g);
            }
        }
        let h_min = 1e-13 * t.abs().max(1.0);
        if hh < h_min {
            return Err(Error::Convergence {
                at: t,
                reason: "step size underflow".into(),
            });
        }
        let Some(mut out) = solver.step(t, y, hh) else {
            rejected += 1;
            h = 0.5 * hh;
            continue;
        };
        let mut landed: Vec<usize> = Vec::new();
        let mut target: Vec<usize> = Vec::new();
        for _ in 0..8 {
            let c = &out.coeffs;
            let hc = hh;
            let dev = |s: f64, xi: f64| s - 1.0 - solver.u_step(s - p.b, t, hc, c) - xi;
            let t_end = t + hh;
            let mut first = f64::INFINITY;
            let mut hits = Vec::new();
            for (i, tr) in trackers.iter().enumerate() {
                let g_end = dev(t_end, tr.xi);
                let root = if g_end * tr.sign <= 0.0 {
                    Some(bisect(|s| dev(s, tr.xi), t, t_end, opts.event_tol * 0.25))
                } else if target.contains(&i) && dev(t + 1.5 * hh, tr.xi) * tr.sign < 0.0 {
                    Some(bisect(
                        |s| dev(s, tr.xi),
                        t_end,
                        t + 1.5 * hh,
                        opts.event_tol * 0.25,
                    ))
                } else {
                    None
                };
                let Some(root) = root else { continue };
                if root < first - opts.event_tol {
                    first = root;
                    hits.clear();
                }
                if (root - first).abs() <= opts.event_tol {
                    hits.push(i);
                }
            }
            if hits.is_empty() {
                break;
            }
            if (first - t_end).abs() <= opts.event_tol || first - t < h_min {
                landed = hits;
                break;
            }
            solver.left = hits.iter().map(|&i| trackers[i].xi).collect();
            target = hits;
            hh = first - t;
            lag_hit = None;
            match solver.step(t, y, hh) {
                Some(o) => out = o,
                None => break,
            }
        }
        if landed.is_empty() {
            solver.left.clear();
        }
        let defect = solver.defect(t, hh, &out.coeffs);
        solver.left.clear();
        if out.err > 1.0 || defect > 1.0 || !out.y.is_finite() {
            rejected += 1;
            let fac = 0.9 * out.err.powf(-0.2).min(defect.powf(-0.25));
            h = hh * fac.clamp(0.1, 0.9);
            continue;
        }
        let t_new = t + hh;
        let c = out.coeffs.clone();
        let delay = |s: f64| 1.0 + solver.u_step(s - p.b, t, hh, &c);
        let probes = 8;
        let mut event_at = None;
        for i in 1..=probes {
            let s = t + hh * i as f64 / probes as f64;
            if delay(s) <= 0.0 {
                let lo = t + hh * (i - 1) as f64 / probes as f64;
                event_at = Some(bisect(delay, lo, s, opts.event_tol));
                break;
            }
        }
        if let Some(te) = event_at {
            let mut c_cut = out.coeffs.clone();
            let r = (te - t) / hh;
            let mut f = 1.0;
            for ck in c_cut.iter_mut() {
                *ck *= f;
                f *= r;
            }
            if te > t {
                solver.sol.push(t, te, c_cut);
                t = te;
            }
            events.push(Event {
                t,
                kind: EventKind::DelayNonpositive,
            });
            break;
        }
        let dev_end: Vec<f64> = trackers
            .iter()
            .map(|tr| t_new - 1.0 - solver.u_step(t_new - p.b, t, hh, &c) - tr.xi)
            .collect();
        solver.sol.push(t, t_new, out.coeffs);
        t = t_new;
        y = out.y;
        steps += 1;
        max_u = max_u.max(y.abs());
        let n_tr = trackers.len();
        for i in 0..n_tr {
            if landed.contains(&i) || dev_end[i] * trackers[i].sign < 0.0 {
                trackers[i].sign = -trackers[i].sign;
                let g = trackers[i].generation;
                breakpoints.push(Breakpoint { t, generation: g });
                spawn(t, g, &mut lag_queue, &mut trackers);
            }
        }
        if let Some(g) = lag_hit {
            breakpoints.push(Breakpoint { t, generation: g });
            spawn(t, g, &mut lag_queue, &mut trackers);
        }
        let horizon = 2.0 * (1.0 + p.b + max_u) + 1.0;
        trackers.retain(|tr| t - tr.xi < horizon);
        let fac = 0.9
            * out
                .err
                .max(1e-10)
                .powf(-0.2)
                .min(defect.max(1e-10).powf(-0.25));
        h = hh * fac.clamp(0.2, 5.0);
    }
    breakpoints.sort_by(|a, b| a.t.total_cmp(&b.t));
    breakpoints.dedup_by(|a, b| (a.t - b.t).abs() <= opts.event_tol);
    Ok(Trajectory {
        t0: 0.0,
        t1: t,
        sol: solver.sol,
        breakpoints,
        events,
        steps,
        rejected,
    })
}

/// `t - 1 - u(t - b)` along a trajectory.
pub fn deviating_argument(traj: &Trajectory, t: f64, p: &Params) -> Result<f64> {
    let lo = traj.poly().start();
    if t - p.b < lo || t - p.b > traj.t1 + 1e-14 {
        return Err(Error::arg(format!(
            "t - b = {} outside the trajectory",
            t - p.b
        )));
    }
    Ok(t - 1.0 - traj.eval(t - p.b))
}

/// Times up to `horizon` where `t - b` or `t - 1 - u(t - b)` meets a breakpoint,
/// starting from the breakpoints stored on the trajectory.
pub fn propagate_breakpoints(
    traj: &Trajectory,
    p: &Params,
    horizon: f64,
    event_tol: f64,
) -> Vec<f64> {
    let end = horizon.min(traj.t1);
    let mut seeds: Vec<(f64, u32)> = traj.breakpoints.iter().map(|b| (b.t, 0)).collect();
    let mut found: Vec<f64> = Vec::new();
    let max_gen = 5;
    let dev = |s: f64| s - 1.0 - traj.eval(s - p.b);
    while let Some((xi, g)) = seeds.pop() {
        if g >= max_gen {
            continue;
        }
        let mut new = Vec::new();
        if p.b > 0.0 && xi + p.b <= end {
            new.push(xi + p.b);
        }
        let n = (((end - xi) / 0.01).ceil() as usize).max(1);
        let dt = (end - xi) / n as f64;
        let mut prev = dev(xi) - xi;
        for k in 1..=n {
            let s = xi + k as f64 * dt;
            let cur = dev(s) - xi;
            if prev != 0.0 && cur * prev <= 0.0 {
                new.push(bisect(|x| dev(x) - xi, s - dt, s, event_tol * 0.5));
            }
            prev = cur;
        }
        for t in new {
            if !found.iter().any(|&f| (f - t).abs() <= event_tol) {
                found.push(t);
                seeds.push((t, g + 1));
            }
        }
    }
    found.sort_by(f64::total_cmp);
    found
}
