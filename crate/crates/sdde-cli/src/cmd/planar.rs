use sdde::cmf::{emit_planar_vf, expand};
use sdde::planar::{planar_bifurcation_sweep, PlanarOptions, SweepGrid};
use sdde::table::{Cell, Table};
use serde::Serialize;
use serde_json::json;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub order: usize,
    pub grid: SweepGrid,
    pub planar: PlanarOptions,
}

impl Opts {
    pub fn resolve(s: &Settings) -> Self {
        let mut grid = SweepGrid::default();
        if let Some(b) = s.b {
            grid.b = vec![b];
        }
        let mut planar = PlanarOptions::default();
        if let Some(cap) = s.period_cap {
            planar.period_cap = cap;
        }
        if let Some(n) = s.max_steps {
            planar.max_steps = n;
        }
        Opts {
            order: s.order.unwrap_or(5),
            grid,
            planar,
        }
    }
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    let vf = w.timed("expand", || emit_planar_vf(&expand(o.order), o.order));
    let res = w.timed("sweep", || {
        planar_bifurcation_sweep(&vf, &o.grid, &o.planar)
    })?;
    w.put_table("planar.csv", &res.to_table())?;
    let mut gh = Table::new(&["b", "p", "q", "c", "d", "r2"]);
    let mut crit = Table::new(&["b", "p", "c"]);
    for s in &res.sections {
        if let Some(g) = s.gh {
            gh.push(vec![
                Cell::F(s.b),
                Cell::F(g.p),
                Cell::F(g.q_h),
                Cell::F(g.c),
                Cell::F(g.d),
                Cell::F(g.r2),
            ]);
        }
        for (p, c) in o.grid.p.iter().zip(&s.c) {
            crit.push(vec![Cell::F(s.b), Cell::F(*p), (*c).into()]);
        }
    }
    w.put_table("gh.csv", &gh)?;
    w.put_table("criticality.csv", &crit)?;
    w.put_json(
        "summary.json",
        &json!({ "order": o.order, "gh_b_at_zero": res.gh_b_at_zero }),
    )?;
    Ok(())
}
