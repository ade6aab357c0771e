use std::f64::consts::PI;

use sdde::linstab::{char_fn, rightmost_roots};
use sdde::model::{hopf_point, zero_curve};
use sdde::table::{Cell, Table};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub alpha: f64,
    pub beta: f64,
    /// Roots reported at `(alpha, beta)`.
    pub n_roots: usize,
    /// `beta` range of the root scan at fixed `alpha`.
    pub scan: (f64, f64, usize),
}

impl Opts {
    pub fn resolve(s: &Settings) -> Self {
        Opts {
            alpha: s.alpha.unwrap_or(1.0),
            beta: s.beta.unwrap_or(-1.0),
            n_roots: 8,
            scan: (-3.0, 1.0, 201),
        }
    }
}

/// Hopf curve sampled over `theta` in `(0, pi)`.
pub fn hopf_table(n: usize) -> Result<Table, CliError> {
    let mut t = Table::new(&["theta", "alpha", "beta"]);
    for k in 1..n {
        let th = PI * k as f64 / n as f64;
        let (a, b) = hopf_point(th)?;
        t.push(vec![Cell::F(th), Cell::F(a), Cell::F(b)]);
    }
    Ok(t)
}

pub fn zero_table(lo: f64, hi: f64, n: usize) -> Table {
    super::xy_table(
        ["alpha", "beta"],
        (0..=n).map(|k| {
            let a = lo + (hi - lo) * k as f64 / n as f64;
            (a, zero_curve(a))
        }),
    )
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    w.put_table("H.csv", &hopf_table(400)?)?;
    w.put_table("Z.csv", &zero_table(-3.0, 3.0, 120))?;

    let p = super::params(o.alpha, o.beta, 0.0)?;
    let roots = w.timed("roots", || rightmost_roots(&p, o.n_roots))?;
    let mut t = Table::new(&["re", "im", "multiplicity", "abs_chi"]);
    for r in &roots.roots {
        t.push(vec![
            Cell::F(r.lambda.re),
            Cell::F(r.lambda.im),
            Cell::I(r.multiplicity as i64),
            Cell::F(char_fn(r.lambda, &p).norm()),
        ]);
    }
    w.put_table("roots.csv", &t)?;

    let (lo, hi, n) = o.scan;
    let betas: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let alpha = o.alpha;
    let scan = w.timed("scan", || {
        sdde::par::map(&betas, |&beta| {
            let p = sdde::Params::new(alpha, beta, 0.0)?;
            rightmost_roots(&p, 8).map(|r| (beta, r))
        })
    });
    let mut t = Table::new(&["alpha", "beta", "re_max", "im_max", "n_unstable"]);
    for row in scan {
        let (beta, r) = row?;
        let top = r.rightmost().map(|c| c.lambda);
        t.push(vec![
            Cell::F(alpha),
            Cell::F(beta),
            top.map(|z| z.re).into(),
            top.map(|z| z.im).into(),
            r.n_unstable().into(),
        ]);
    }
    w.put_table("scan.csv", &t)?;
    Ok(())
}
