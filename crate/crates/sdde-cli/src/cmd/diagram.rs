use sdde::continuation::{
    branch_from_hopf, continue_fold, continue_m, criticality, locate_gh, ContOptions, Criticality,
    Curve, Endpoint, EventKind,
};
use sdde::model::locus_l;
use sdde::table::{Cell, Table};
use sdde::{Error, Param};
use serde::Serialize;
use serde_json::{json, Value};

use super::stab::{hopf_table, zero_table};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub b: f64,
    /// Fixed beta of the fold probe; derived from the GH point when absent.
    pub fold_beta: Option<f64>,
    pub m_beta: f64,
    pub eps: f64,
    /// Theta grid on which the criticality sign is scanned.
    pub theta_grid: (f64, f64, usize),
    pub gh_tol: f64,
    pub fold_dbeta: f64,
    pub m_dbeta: f64,
    pub cont: ContOptions,
}

impl Opts {
    pub fn resolve(s: &Settings) -> Self {
        let mut cont = super::branch::cont_options(s, 200.0);
        if s.max_steps.is_none() {
            cont.max_steps = 400;
        }
        Opts {
            b: s.b.unwrap_or(0.1),
            fold_beta: s.fold_beta,
            m_beta: s.m_beta.unwrap_or(-2.0),
            eps: s.eps.unwrap_or(0.01),
            theta_grid: (0.2, 3.0, 29),
            gh_tol: 1e-6,
            fold_dbeta: 0.005,
            m_dbeta: 0.01,
            cont,
        }
    }
}

/// First sign change of the criticality coefficient on the grid, refined.
pub fn find_gh(b: f64, grid: (f64, f64, usize), tol: f64) -> Result<Criticality, Error> {
    let (lo, hi, n) = grid;
    let th: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let c = sdde::par::map(&th, |&t| criticality(t, b).ok().map(|k| k.c));
    for k in 1..n {
        if let (Some(c0), Some(c1)) = (c[k - 1], c[k]) {
            if c0 * c1 < 0.0 {
                return locate_gh(b, (th[k - 1], th[k]), tol);
            }
        }
    }
    Err(Error::numerical(format!(
        "no sign change of the criticality coefficient on theta in [{lo}, {hi}]"
    )))
}

/// Curve through a start point: the backward half reversed, then the forward half.
fn two_sided(down: &Curve, up: &Curve) -> Table {
    let mut t = Table::new(&["alpha", "beta", "b", "period", "s_star", "endpoint_kind"]);
    let nd = down.points.len();
    let rows = down
        .points
        .iter()
        .enumerate()
        .rev()
        .map(|(i, p)| {
            (
                p,
                if i + 1 == nd {
                    down.endpoint.to_string()
                } else if down.cusps.contains(&i) {
                    "CP".into()
                } else {
                    String::new()
                },
            )
        })
        .chain(up.points.iter().enumerate().skip(1).map(|(i, p)| {
            let kind = if i + 1 == up.points.len() {
                up.endpoint.to_string()
            } else if up.cusps.contains(&i) {
                "CP".into()
            } else {
                String::new()
            };
            (p, kind)
        }));
    for (p, kind) in rows {
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

enum Job {
    Fold,
    M,
}

struct CurvePair {
    start_beta: f64,
    down: Curve,
    up: Curve,
}

fn fold_curves(o: &Opts, gh: Option<&Criticality>) -> Result<CurvePair, Error> {
    let probes: Vec<f64> = match (o.fold_beta, gh) {
        (Some(b), _) => vec![b],
        (None, Some(g)) => [0.17, 0.25, 0.1].iter().map(|d| g.beta_h + d).collect(),
        (None, None) => {
            return Err(Error::numerical(
                "no fold probe: GH not found and no fold_beta given",
            ))
        }
    };
    let mut last = Error::numerical("no fold on the probed branches");
    for beta in probes {
        let br = match branch_from_hopf(o.b, Param::Alpha, beta, o.eps, &o.cont) {
            Ok(br) => br,
            Err(e) => {
                last = e;
                continue;
            }
        };
        let Some(start) = br.events_of(EventKind::Fold).find_map(|e| e.orbit.clone()) else {
            continue;
        };
        let sides = sdde::par::map(&[-o.fold_dbeta, o.fold_dbeta], |&d| {
            continue_fold(&start, d, &o.cont)
        });
        let [down, up]: [Result<Curve, Error>; 2] = sides.try_into().expect("two sides");
        return Ok(CurvePair {
            start_beta: beta,
            down: down?,
            up: up?,
        });
    }
    Err(last)
}

fn m_curves(o: &Opts) -> Result<CurvePair, Error> {
    let br = branch_from_hopf(o.b, Param::Alpha, o.m_beta, 2.0 * o.eps, &o.cont)?;
    let hit = br
        .events_of(EventKind::MHit)
        .find(|e| e.orbit.is_some() && e.s_star.is_some())
        .ok_or_else(|| {
            Error::numerical(format!(
                "branch at beta = {} has no touching minimum",
                o.m_beta
            ))
        })?;
    let (start, s) = (
        hit.orbit.clone().expect("checked"),
        hit.s_star.expect("checked"),
    );
    let opts = ContOptions {
        max_steps: o.cont.max_steps.min(80),
        ..o.cont.clone()
    };
    let sides = sdde::par::map(&[-o.m_dbeta, o.m_dbeta], |&d| {
        continue_m(&start, s, d, &opts)
    });
    let [down, up]: [Result<Curve, Error>; 2] = sides.try_into().expect("two sides");
    Ok(CurvePair {
        start_beta: o.m_beta,
        down: down?,
        up: up?,
    })
}

fn l_table(b: f64) -> Result<Table, CliError> {
    let mut t = Table::new(&["alpha", "beta"]);
    for k in 0..=100 {
        let a = k as f64 / 100.0;
        t.push(vec![Cell::F(a), Cell::F(locus_l(a, b)?)]);
    }
    Ok(t)
}

fn curve_summary(c: &Result<CurvePair, Error>) -> Value {
    match c {
        Ok(c) => json!({
            "start_beta": c.start_beta,
            "points": c.down.points.len() + c.up.points.len() - 1,
            "endpoints": [c.down.endpoint.to_string(), c.up.endpoint.to_string()],
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    w.put_table("H.csv", &hopf_table(400)?)?;
    w.put_table("Z.csv", &zero_table(-3.0, 3.0, 120))?;
    let has_l = (0.0..1.0).contains(&o.b);
    if has_l {
        w.put_table("L.csv", &l_table(o.b)?)?;
    }
    let gh = w.timed("gh", || find_gh(o.b, o.theta_grid, o.gh_tol));

    // the touching-minimum locus coincides with L when b = 0
    let m_is_l = o.b == 0.0;
    let jobs = if m_is_l {
        vec![Job::Fold]
    } else {
        vec![Job::Fold, Job::M]
    };
    let mut results = w.timed("curves", || {
        sdde::par::map(&jobs, |j| match j {
            Job::Fold => fold_curves(o, gh.as_ref().ok()),
            Job::M => m_curves(o),
        })
    });
    let m = if m_is_l { None } else { results.pop() };
    let f = results.pop().expect("fold job");

    let mut pts = Table::new(&["object", "alpha", "beta", "b"]);
    pts.push(vec!["DZ".into(), Cell::F(1.0), Cell::F(-1.0), Cell::F(o.b)]);
    if let Ok(g) = &gh {
        pts.push(vec![
            "GH".into(),
            Cell::F(g.alpha_h),
            Cell::F(g.beta_h),
            Cell::F(o.b),
        ]);
    }
    if let Ok(c) = &f {
        w.put_table("F.csv", &two_sided(&c.down, &c.up))?;
        for side in [&c.down, &c.up] {
            for &i in &side.cusps {
                let p = side.points[i].orbit.params;
                pts.push(vec![
                    "CP".into(),
                    Cell::F(p.alpha),
                    Cell::F(p.beta),
                    Cell::F(o.b),
                ]);
            }
            if side.endpoint == Endpoint::Mf {
                let p = side.points.last().expect("curve has points").orbit.params;
                pts.push(vec![
                    "MF".into(),
                    Cell::F(p.alpha),
                    Cell::F(p.beta),
                    Cell::F(o.b),
                ]);
            }
        }
    }
    match &m {
        Some(Ok(c)) => w.put_table("M.csv", &two_sided(&c.down, &c.up))?,
        None if has_l => w.put_table("M.csv", &l_table(o.b)?)?,
        _ => {}
    }
    w.put_table("points.csv", &pts)?;

    let gh_json = match &gh {
        Ok(g) => json!(g),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let m_json = match &m {
        Some(r) => curve_summary(r),
        None => json!({ "equals": "L" }),
    };
    w.put_json(
        "summary.json",
        &json!({ "b": o.b, "gh": gh_json, "F": curve_summary(&f), "M": m_json }),
    )?;

    // a missing curve is a numerical failure, reported after the partial output
    f?;
    if let Some(m) = m {
        m?;
    }
    Ok(())
}
