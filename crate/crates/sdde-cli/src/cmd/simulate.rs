use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdde::simulate::{integrate, EventKind, IntegratorOptions};
use sdde::table::{Cell, Table};
use sdde::HistorySegment;
use serde::Serialize;
use serde_json::json;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub t_end: f64,
    pub tol: f64,
    pub seed: u64,
    pub history_amp: f64,
    pub history: Option<f64>,
    /// Sampling step of the written time series.
    pub dt: f64,
}

impl Opts {
    pub fn resolve(s: &Settings) -> Self {
        Opts {
            alpha: s.alpha.unwrap_or(-0.1),
            beta: s.beta.unwrap_or(-1.7),
            b: s.b.unwrap_or(0.0),
            t_end: s.t_end.unwrap_or(100.0),
            tol: s.tol.unwrap_or(1e-8),
            seed: s.seed.unwrap_or(0),
            history_amp: s.history_amp.unwrap_or(0.1),
            history: s.history,
            dt: 0.05,
        }
    }
}

/// Smooth random history: a constant plus three random modes, bounded by `amp`.
pub fn random_history(seed: u64, amp: f64, tau: f64) -> HistorySegment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0) * amp / 4.0);
    let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.5..3.0));
    let f = move |s: f64| {
        c[0] + c[1] * (w[0] * s).sin() + c[2] * (w[1] * s).cos() + c[3] * (w[2] * s).sin()
    };
    let df = move |s: f64| {
        c[1] * w[0] * (w[0] * s).cos() - c[2] * w[1] * (w[1] * s).sin()
            + c[3] * w[2] * (w[2] * s).cos()
    };
    HistorySegment::from_fn(tau, 64, f, df)
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    let p = super::params(o.alpha, o.beta, o.b)?;
    let h = match o.history {
        Some(c) => HistorySegment::constant(c, HistorySegment::default_tau(o.b, c.abs())),
        None => random_history(
            o.seed,
            o.history_amp,
            HistorySegment::default_tau(o.b, o.history_amp),
        ),
    };
    let iopts = IntegratorOptions::default().with_tol(o.tol).until(o.t_end);
    let tr = w.timed("integrate", || integrate(&p, &h, &iopts))?;

    let n = ((tr.t1 - tr.t0) / o.dt).ceil().max(1.0) as usize;
    let mut ts = Table::new(&["t", "u"]);
    for (t, u) in tr.sample(n) {
        ts.push(vec![Cell::F(t), Cell::F(u)]);
    }
    w.put_table("timeseries.csv", &ts)?;
    let mut bp = Table::new(&["t", "generation"]);
    for b in &tr.breakpoints {
        bp.push(vec![Cell::F(b.t), Cell::I(b.generation as i64)]);
    }
    w.put_table("breakpoints.csv", &bp)?;
    w.put_json(
        "summary.json",
        &json!({ "t_end": tr.t1, "steps": tr.steps, "rejected": tr.rejected, "events": tr.events }),
    )?;
    if let Some(e) = tr
        .events
        .iter()
        .find(|e| e.kind == EventKind::DelayNonpositive)
    {
        return Err(CliError::Stop(format!(
            "total delay vanished at t = {}",
            e.t
        )));
    }
    Ok(())
}
