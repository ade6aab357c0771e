use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdde::simulate::{
    deviating_argument, integrate, propagate_breakpoints, EventKind, IntegratorOptions,
};
use sdde::{HistorySegment, Params};

fn params(a: f64, b: f64, c: f64) -> Params {
    Params::new(a, b, c).unwrap()
}

#[test]
fn equilibrium_family_is_preserved() {
    let p = params(0.5, -0.5, 0.0);
    let tr = integrate(
        &p,
        &HistorySegment::constant(0.2, 2.0),
        &IntegratorOptions::default(),
    )
    .unwrap();
    for k in 0..=100 {
        assert!((tr.eval(0.1 * k as f64) - 0.2).abs() < 1e-13);
    }
    let p = params(-0.3, -1.9, 0.4);
    let tr = integrate(
        &p,
        &HistorySegment::constant(0.0, 2.0),
        &IntegratorOptions::default(),
    )
    .unwrap();
    assert!(tr.sample(200).iter().all(|&(_, u)| u == 0.0));
}

fn random_history(rng: &mut ChaCha8Rng, amp: f64) -> HistorySegment {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-amp..amp)).collect();
    let f = move |s: f64| c[0] + c[1] * (1.3 * s).sin() + c[2] * (2.1 * s).cos() + c[3] * s;
    let g = f.clone();
    let df = move |s: f64| (g(s + 1e-6) - g(s - 1e-6)) / 2e-6;
    HistorySegment::from_fn(3.0, 60, f, df)
}

#[test]
fn residual_at_random_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = params(-0.1, -1.7, 0.0);
    let opts = IntegratorOptions::default().until(40.0);
    let tr = integrate(&p, &random_history(&mut rng, 0.05), &opts).unwrap();
    for _ in 0..50 {
        let t = rng.gen_range(0.0..40.0);
        let bound = 10.0 * (opts.abs_tol + opts.rel_tol * tr.eval(t).abs());
        assert!(tr.residual(t, &p).abs() < bound, "residual at t = {t}");
    }
    assert!(tr.poly().max_gap() < 1e-12);
}

#[test]
fn halving_tolerance_changes_little() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = params(-0.1, -1.7, 0.1);
    let h = random_history(&mut rng, 0.1);
    let coarse = IntegratorOptions::default().with_tol(1e-7).until(30.0);
    let fine = IntegratorOptions::default().with_tol(5e-8).until(30.0);
    let a = integrate(&p, &h, &coarse).unwrap().eval(30.0);
    let b = integrate(&p, &h, &fine).unwrap().eval(30.0);
    assert!((a - b).abs() < 5.0 * 1e-7, "{a} vs {b}");
}

#[test]
fn constant_lag_and_zero_solution_breakpoints() {
    let p = params(-0.5, -1.0, 0.5);
    let tr = integrate(
        &p,
        &HistorySegment::constant(0.3, 2.0),
        &IntegratorOptions::default().until(3.0),
    )
    .unwrap();
    let bp = propagate_breakpoints(&tr, &p, 3.0, 1e-10);
    assert!(bp.iter().any(|&t| (t - 0.5).abs() < 1e-10));
    assert!(tr
        .breakpoint_times()
        .iter()
        .any(|&t| (t - 0.5).abs() < 1e-10));

    let p = params(-0.5, -1.0, 0.0);
    let tr = integrate(
        &p,
        &HistorySegment::constant(0.0, 2.0),
        &IntegratorOptions::default().until(3.0),
    )
    .unwrap();
    let bp = propagate_breakpoints(&tr, &p, 3.0, 1e-10);
    assert!((bp[0] - 1.0).abs() < 1e-10);
    assert!((deviating_argument(&tr, 2.0, &p).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn propagated_breakpoints_are_sign_changes() {
    let p = params(-0.2, -1.6, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tr = integrate(
        &p,
        &random_history(&mut rng, 0.3),
        &IntegratorOptions::default().until(6.0),
    )
    .unwrap();
    let found = propagate_breakpoints(&tr, &p, 6.0, 1e-10);
    assert!(!found.is_empty());
    // sources: the initial point, recorded breakpoints, and earlier propagated ones
    let mut sources = tr.breakpoint_times();
    sources.push(0.0);
    sources.extend(found.iter().copied());
    for &t in &found {
        let hit = sources.iter().any(|&xi| {
            let g = |s: f64| s - 1.0 - tr.eval(s - p.b) - xi;
            (t - p.b - xi).abs() < 1e-9 || g(t - 1e-7) * g(t + 1e-7) <= 0.0
        });
        assert!(hit, "breakpoint {t} is not a crossing");
    }
    for w in tr.breakpoints.windows(2) {
        assert!(w[0].t < w[1].t);
    }
}

#[test]
fn second_derivative_jumps_shrink_by_generation() {
    let p = params(-0.4, -1.2, 0.0);
    let opts = IntegratorOptions::default().with_tol(1e-11).until(5.0);
    let tr = integrate(&p, &HistorySegment::constant(0.4, 2.0), &opts).unwrap();
    let pp = tr.poly();
    let mut jumps = Vec::new();
    for bp in tr
        .breakpoints
        .iter()
        .filter(|b| b.generation >= 1 && b.generation <= 3)
    {
        let i = pp.locate(bp.t);
        let (a, _, _) = pp.piece(i);
        assert!(
            (a - bp.t).abs() < 1e-9,
            "breakpoint {} is not a mesh point",
            bp.t
        );
        let left = pp.eval_dd(bp.t - 1e-9);
        let right = pp.eval_dd(bp.t + 1e-9);
        jumps.push((bp.generation, (left - right).abs()));
    }
    assert!(jumps.len() >= 3);
    for w in jumps.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-6, "{jumps:?}");
    }
    assert!(jumps[0].1 > 1e-2);
}

#[test]
fn delay_event_matches_exact_time() {
    let p = params(1.0, 0.0, 0.0);
    let opts = IntegratorOptions::default().until(5.0);
    let tr = integrate(&p, &HistorySegment::constant(-0.5, 2.0), &opts).unwrap();
    assert_eq!(tr.events.len(), 1);
    assert_eq!(tr.events[0].kind, EventKind::DelayNonpositive);
    assert!((tr.events[0].t - 2f64.ln()).abs() < 1e-8);

    let p = params(1.0, 0.4, 0.3);
    let tr = integrate(&p, &HistorySegment::constant(-0.5, 2.0), &opts).unwrap();
    let ev = tr.events[0];
    assert!((1.0 + tr.eval(ev.t - p.b)).abs() <= 1e-9);
}

#[test]
fn rejects_bad_start() {
    let p = params(0.0, -2.0, 0.0);
    assert!(integrate(
        &p,
        &HistorySegment::constant(-1.5, 3.0),
        &IntegratorOptions::default()
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn residual_holds_for_random_constant_histories(
        a in -1.0f64..0.3, be in -2.2f64..-1.0, b in 0.0f64..0.6, c in -0.3f64..0.3
    ) {
        let p = params(a, be, b);
        let opts = IntegratorOptions::default().until(8.0);
        let tr = integrate(&p, &HistorySegment::constant(c, 3.0), &opts).unwrap();
        for k in 0..40 {
            let t = 0.013 + k as f64 * (tr.t1 - 0.02) / 40.0;
            let bound = 10.0 * (opts.abs_tol + opts.rel_tol * tr.eval(t).abs());
            prop_assert!(tr.residual(t, &p).abs() < bound);
        }
    }
}
