use sdde::continuation::{branch_from_hopf, scaling_diagnostics, Branch, ContOptions};
use sdde::table::{Cell, Table};
use sdde::Param;
use serde::Serialize;
use serde_json::json;

use crate::config::{Free, Settings};
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub b: f64,
    pub free: Free,
    /// Value of the parameter held fixed.
    pub fixed: f64,
    pub eps: f64,
    pub cont: ContOptions,
}

pub fn cont_options(s: &Settings, period_cap: f64) -> ContOptions {
    let d = ContOptions::default();
    ContOptions {
        period_cap: s.period_cap.unwrap_or(period_cap),
        mesh_tol: s.tol.unwrap_or(d.mesh_tol),
        max_steps: s.max_steps.unwrap_or(d.max_steps),
        ..d
    }
}

impl Opts {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let free = s.free.unwrap_or(Free::Alpha);
        let fixed = match free {
            Free::Alpha => s
                .beta
                .ok_or_else(|| CliError::Config("branch with free alpha needs --beta".into()))?,
            Free::Beta => s
                .alpha
                .ok_or_else(|| CliError::Config("branch with free beta needs --alpha".into()))?,
        };
        Ok(Opts {
            b: s.b.unwrap_or(0.0),
            free,
            fixed,
            eps: s.eps.unwrap_or(0.02),
            cont: cont_options(s, 500.0),
        })
    }
}

pub fn events_table(br: &Branch) -> Table {
    let mut t = Table::new(&["index", "kind", "alpha", "beta", "b", "residual", "s_star"]);
    for e in &br.events {
        t.push(vec![
            e.index.into(),
            Cell::S(e.kind.to_string()),
            e.params.alpha.into(),
            e.params.beta.into(),
            e.params.b.into(),
            e.residual.into(),
            e.s_star.into(),
        ]);
    }
    t
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    let free: Param = o.free.into();
    let br = w.timed("continuation", || {
        branch_from_hopf(o.b, free, o.fixed, o.eps, &o.cont)
    })?;
    w.put_table("branch.csv", &br.to_table())?;
    w.put_table("events.csv", &events_table(&br))?;
    for (k, e) in br.events.iter().enumerate() {
        if let Some(orb) = &e.orbit {
            w.put_json(
                &format!("orbits/event_{k:02}_{}.json", e.kind),
                &orb.to_json(),
            )?;
        }
    }
    w.put_json("orbits/last.json", &br.last().orbit.to_json())?;
    if let Ok(sc) = scaling_diagnostics(&br) {
        let mut t = Table::new(&["index", "period_scaled", "amplitude_scaled"]);
        for r in &sc.rows {
            t.push(vec![
                r.index.into(),
                r.period_scaled.into(),
                r.amplitude_scaled.into(),
            ]);
        }
        w.put_table("scaling.csv", &t)?;
        w.put_json(
            "scaling.json",
            &json!({
                "period_spread": sc.period_spread,
                "amplitude_spread": sc.amplitude_spread,
                "pre_asymptotic": sc.pre_asymptotic,
            }),
        )?;
    }
    Ok(())
}
