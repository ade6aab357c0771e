//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs sequentially so that wall-time limits are meaningful. Pass criterion
//! numbers as arguments to run a subset.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use sdde::cmf::poly::{q, qi, Q};
use sdde::cmf::{basis_objects, emit_planar_vf, expand, lemma_check};
use sdde::continuation::{
    branch_from_hopf, continue_fold, continue_m, criticality, locate_gh, orbit_at,
    scaling_diagnostics, ContOptions, Criticality, Curve, Endpoint, EventKind,
};
use sdde::linstab::{char_fn, char_fn_d, rightmost_roots};
use sdde::model::{hopf_point, locus_l, straightline_slope};
use sdde::orbit::floquet;
use sdde::planar::{
    conserved_v_at, planar_bifurcation_sweep, simulate_planar, v_drift, PlanarOptions, SweepGrid,
};
use sdde::{Param, Params};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c01() -> Check {
    let p = Params::new(1.0, -1.0, 0.0).map_err(err)?;
    let r = rightmost_roots(&p, 4).map_err(err)?;
    let top = *r.rightmost().ok_or("no roots")?;
    let (f, df) = (
        char_fn(top.lambda, &p).norm(),
        char_fn_d(top.lambda, &p).norm(),
    );
    let msg = format!(
        "lambda = {:.2e}, multiplicity {}, |chi| = {f:.1e}, |chi'| = {df:.1e}",
        top.lambda.norm(),
        top.multiplicity
    );
    ensure(
        top.lambda.norm() < 1e-10 && top.multiplicity == 2 && f < 1e-10 && df < 1e-10,
        msg,
    )
}

fn c02() -> Check {
    let (a, b) = hopf_point(PI / 2.0).map_err(err)?;
    let e_pt = a.abs().max((b + PI / 2.0).abs());
    let r = rightmost_roots(&Params::new(a, b, 0.0).map_err(err)?, 2).map_err(err)?;
    let re = r.rightmost().ok_or("no roots")?.lambda.re.abs();
    let w = 1e-2;
    let (aw, bw) = hopf_point(w).map_err(err)?;
    let ea = ((1.0 - aw) / (w * w / 3.0) - 1.0).abs();
    let eb = ((-1.0 - bw) / (w * w / 6.0) - 1.0).abs();
    let msg = format!(
        "point error {e_pt:.1e}, |Re lambda| = {re:.1e}, Taylor rel. errors {ea:.1e}, {eb:.1e}"
    );
    ensure(e_pt < 1e-12 && re < 1e-8 && ea < 1e-3 && eb < 1e-3, msg)
}

fn c03() -> Check {
    let mut worst = 0.0f64;
    for b in [0.0, 0.1, 0.5] {
        for a in [0.0, 0.5] {
            let beta = locus_l(a, b).map_err(err)?;
            let k = straightline_slope(a, b).map_err(err)?;
            let p = Params::new(a, beta, b).map_err(err)?;
            let u = |t: f64| k * t;
            for j in 0..20 {
                let t = 0.37 + 0.5 * j as f64;
                worst = worst.max((k - p.rhs(u(t), u(t - 1.0 - u(t - b)))).abs());
            }
        }
    }
    ensure(worst < 1e-12, format!("max residual {worst:.1e}"))
}

fn c04() -> Check {
    let fast = ContOptions {
        floquet: false,
        period_cap: 100.0,
        ..ContOptions::default()
    };
    let first = branch_from_hopf(
        0.0,
        Param::Alpha,
        -1.7,
        0.01,
        &ContOptions {
            bounds: (-10.0, 0.0),
            ..fast.clone()
        },
    )
    .map_err(err)?;
    let o1 = orbit_at(&first, -0.1).map_err(err)?;
    let f1 = floquet(&o1).map_err(err)?;
    let second = branch_from_hopf(
        0.0,
        Param::Alpha,
        -1.1,
        0.01,
        &ContOptions {
            bounds: (0.2, 10.0),
            ..fast
        },
    )
    .map_err(err)?;
    let o2 = orbit_at(&second, 0.3).map_err(err)?;
    let f2 = floquet(&o2).map_err(err)?;
    let max_in = f1.nontrivial().map(|m| m.norm()).fold(0.0, f64::max);
    let msg = format!(
        "T = {:.4}, max |mu| = {max_in:.4}; T = {:.4}, unstable = {}",
        o1.period,
        o2.period,
        f2.n_unstable()
    );
    ensure(
        f1.n_unstable() == 0 && max_in < 1.0 && f2.n_unstable() == 1,
        msg,
    )
}

fn c05() -> Check {
    let opts = ContOptions {
        floquet: false,
        ..ContOptions::default()
    };
    let br = branch_from_hopf(0.0, Param::Alpha, -2.0, 0.02, &opts).map_err(err)?;
    let last = br.last();
    let sc = scaling_diagnostics(&br).map_err(err)?;
    let spread = sc.period_spread.ok_or("no period scaling")?;
    let m = last.metrics;
    let msg = format!(
        "T = {:.1}, min_u = {:.4}, slope = {:.4}, spread = {spread:.2e}",
        m.period, m.min_u, m.slope_est
    );
    ensure(
        m.period >= 500.0
            && (-1.0..=-0.95).contains(&m.min_u)
            && (0.9..=1.1).contains(&m.slope_est)
            && spread < 0.1,
        msg,
    )
}

fn c06() -> Check {
    let opts = ContOptions {
        floquet: false,
        ..ContOptions::default()
    };
    let br = branch_from_hopf(0.0, Param::Beta, 0.4, 0.02, &opts).map_err(err)?;
    let sc = scaling_diagnostics(&br).map_err(err)?;
    let spread = sc.amplitude_spread.ok_or("no amplitude scaling")?;
    let m = br.last().metrics;
    let msg = format!(
        "beta = {:.5}, slope = {:.4}, spread = {spread:.2e}",
        br.last().params().beta,
        m.slope_est
    );
    ensure((0.55..=0.65).contains(&m.slope_est) && spread < 0.1, msg)
}

fn gh_at(b: f64) -> Result<Criticality, String> {
    let th: Vec<f64> = (0..29).map(|k| 0.2 + 0.1 * k as f64).collect();
    let c = sdde::par::map(&th, |&t| criticality(t, b).ok().map(|k| k.c));
    for k in 1..th.len() {
        if let (Some(c0), Some(c1)) = (c[k - 1], c[k]) {
            if c0 * c1 < 0.0 {
                return locate_gh(b, (th[k - 1], th[k]), 1e-6).map_err(err);
            }
        }
    }
    Err("no sign change of the criticality coefficient".into())
}

fn c07() -> Check {
    let g = gh_at(0.0)?;
    let msg = format!(
        "alpha_GH = {:.4}, beta_GH = {:.4} (target [-0.70, -0.56])",
        g.alpha_h, g.beta_h
    );
    ensure((-0.70..=-0.56).contains(&g.alpha_h), msg)
}

fn both_sides(f: impl Fn(f64) -> sdde::Result<Curve> + Sync, d: f64) -> Result<[Curve; 2], String> {
    let r = sdde::par::map(&[-d, d], |&s| f(s));
    let [a, b]: [sdde::Result<Curve>; 2] = r.try_into().map_err(|_| "two sides")?;
    Ok([a.map_err(err)?, b.map_err(err)?])
}

fn c08() -> Check {
    let opts = ContOptions {
        floquet: false,
        period_cap: 200.0,
        ..ContOptions::default()
    };
    let br = branch_from_hopf(0.1, Param::Alpha, -2.0, 0.02, &opts).map_err(err)?;
    let hit = br
        .events_of(EventKind::MHit)
        .find(|e| e.orbit.is_some())
        .ok_or("no touching minimum")?;
    let (start, s) = (
        hit.orbit.clone().ok_or("no orbit")?,
        hit.s_star.ok_or("no s*")?,
    );
    let o = ContOptions {
        max_steps: 80,
        ..opts
    };
    let curves = both_sides(|d| continue_m(&start, s, d, &o), 0.01)?;
    let worst = curves
        .iter()
        .flat_map(|c| &c.points)
        .map(|p| (p.metrics.min_u + 1.0).abs())
        .fold(0.0, f64::max);
    let at = curves
        .iter()
        .flat_map(|c| &c.points)
        .find(|p| (p.orbit.params.beta + 2.0).abs() < 1e-9)
        .ok_or("curve misses beta = -2")?;
    let (t, a) = (at.metrics.period, at.orbit.params.alpha);
    let msg = format!(
        "at beta = -2: T = {t:.4}, alpha = {a:.5}, |min + 1| = {:.1e}; max along curve {worst:.1e}",
        (at.metrics.min_u + 1.0).abs()
    );
    ensure(
        t < 200.0 && (at.metrics.min_u + 1.0).abs() < 1e-6 && worst < 1e-6 && a.abs() > 1e-5,
        msg,
    )
}

fn folds_at(beta: f64) -> Result<usize, String> {
    let opts = ContOptions {
        floquet: false,
        period_cap: 200.0,
        ..ContOptions::default()
    };
    let br = branch_from_hopf(0.1, Param::Alpha, beta, 0.01, &opts).map_err(err)?;
    Ok(br.events_of(EventKind::Fold).count())
}

fn c09() -> Check {
    let gh = gh_at(0.1)?;
    let opts = ContOptions {
        floquet: false,
        period_cap: 200.0,
        max_steps: 400,
        ..ContOptions::default()
    };
    let br = branch_from_hopf(0.1, Param::Alpha, -1.8, 0.01, &opts).map_err(err)?;
    let fold = br
        .events_of(EventKind::Fold)
        .find_map(|e| e.orbit.clone())
        .ok_or("no fold at beta = -1.8")?;
    let curves = both_sides(|d| continue_fold(&fold, d, &opts), 0.005)?;
    let cp = curves
        .iter()
        .flat_map(|c| c.cusps.iter().map(move |&i| c.points[i].orbit.params.beta))
        .next()
        .ok_or("no cusp on F")?;
    let mf = curves
        .iter()
        .find(|c| c.endpoint == Endpoint::Mf)
        .map(|c| c.points.last().expect("points").orbit.params.beta)
        .ok_or("F does not end at MF")?;
    let (two, one) = (0.5 * (cp + mf), 0.5 * (mf + gh.beta_h));
    let (n2, n1) = (folds_at(two)?, folds_at(one)?);
    let near = |x: f64, y: f64| (x - y).abs() <= 0.05;
    let msg = format!(
        "CP = {cp:.4}, MF = {mf:.4}, GH = {:.4}; folds at beta = {two:.3}: {n2}, at {one:.3}: {n1}",
        gh.beta_h
    );
    ensure(
        near(cp, -1.57) && near(mf, -1.66) && near(gh.beta_h, -1.93) && n2 == 2 && n1 == 1,
        msg,
    )
}

fn c10() -> Check {
    let report = lemma_check(&expand(2));
    let bo = basis_objects();
    let printed: [[Q; 3]; 3] = [
        [Q::zero(), qi(-1), q(3, 2)],
        [Q::one(), Q::zero(), q(-1, 36)],
        [Q::zero(), Q::one(), q(-1, 3)],
    ];
    let failed: Vec<&str> = report
        .items
        .iter()
        .filter(|i| !i.ok)
        .map(|i| i.name.as_str())
        .collect();
    let msg = format!(
        "{} exact checks, failed {failed:?}, M as printed: {}",
        report.items.len(),
        bo.m == printed
    );
    ensure(report.passed && bo.m == printed, msg)
}

fn c11() -> Check {
    let vf = emit_planar_vf(&expand(2), 2).at_b(1.0 / 3.0);
    let p = -0.5;
    let tr = simulate_planar(&vf, [0.1, 0.0], p, 0.0, (0.0, 100.0), 1e-10).map_err(err)?;
    if tr.diverged.is_some() || tr.t_end() < 100.0 {
        return Err("trajectory stopped early".into());
    }
    let d = (conserved_v_at(tr.eval(100.0), p).map_err(err)?
        - conserved_v_at([0.1, 0.0], p).map_err(err)?)
    .abs();
    ensure(d < 1e-8, format!("|V(100) - V(0)| = {d:.1e}"))
}

fn c12() -> Check {
    let vf = emit_planar_vf(&expand(5), 5);
    let p: f64 = -0.01;
    let y0 = 0.1 * (-p).sqrt();
    let below = v_drift(&vf.at_b(1.0 / 3.0 - 0.02), p, 0.0, y0, 1e-11).map_err(err)?;
    let above = v_drift(&vf.at_b(1.0 / 3.0 + 0.02), p, 0.0, y0, 1e-11).map_err(err)?;
    let sweep = planar_bifurcation_sweep(&vf, &SweepGrid::default(), &PlanarOptions::default())
        .map_err(err)?;
    let b0 = sweep.gh_b_at_zero.ok_or("no GH extrapolation")?;
    let msg =
        format!("drift {below:.2e} (b < 1/3), {above:.2e} (b > 1/3); GH at p = 0: b = {b0:.4}");
    ensure(
        below > 0.0 && above < 0.0 && (0.32..=0.35).contains(&b0),
        msg,
    )
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Check);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "double zero root", Some(Duration::from_secs(1)), c01),
        (2, "Hopf curve", Some(Duration::from_secs(1)), c02),
        (3, "straight-line orbits", Some(Duration::from_secs(1)), c03),
        (
            4,
            "two periodic orbits and their stability",
            Some(Duration::from_secs(30)),
            c04,
        ),
        (5, "saw-tooth scaling in alpha", None, c05),
        (6, "saw-tooth scaling in beta", None, c06),
        (7, "generalized Hopf point at b = 0", None, c07),
        (8, "touching-minimum locus at b = 0.1", None, c08),
        (9, "fold structure at b = 0.1", None, c09),
        (
            10,
            "second-order center-manifold field",
            Some(Duration::from_secs(10)),
            c10,
        ),
        (11, "conserved quantity", Some(Duration::from_secs(5)), c11),
        (12, "planar unfolding", None, c12),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = vec![];
    for (id, name, limit, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        let slow = limit.is_some_and(|l| dt > l);
        let (ok, detail) = match r {
            Ok(m) => (!slow, m),
            Err(m) => (false, m),
        };
        let limit_note = match limit {
            Some(l) if slow => format!(" exceeds {:.0} s", l.as_secs_f64()),
            _ => String::new(),
        };
        println!(
            "criterion {id:2} {} {name}: {detail} [{:.2} s{limit_note}]",
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64()
        );
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
