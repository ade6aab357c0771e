use num_complex::Complex64;
use proptest::prelude::*;
use sdde::linstab::{
    char_fn, generator_eigenvalues, hopf_theta_at, hopf_theta_at_beta, rightmost_roots,
};
use sdde::model::{hopf_point, zero_curve};
use sdde::Params;

fn params(a: f64, b: f64) -> Params {
    Params::new(a, b, 0.0).unwrap()
}

#[test]
fn pure_imaginary_pair_on_the_hopf_curve() {
    for th in [0.3, 1.0, 2.0, 2.9] {
        let (a, b) = hopf_point(th).unwrap();
        let p = params(a, b);
        // direct evaluation at i theta
        assert!(char_fn(Complex64::new(0.0, th), &p).norm() < 1e-12);
        let top = rightmost_roots(&p, 2).unwrap();
        let r = top.rightmost().unwrap().lambda;
        assert!(
            r.re.abs() < 1e-9 && (r.im - th).abs() < 1e-9,
            "{r} at theta {th}"
        );
    }
}

#[test]
fn generator_reproduces_a_known_real_root() {
    // chi(l) = l - alpha - beta e^{-l} vanishes at l = 0.5 when beta = (0.5 - alpha) e^{0.5}
    let alpha = -0.3;
    let p = params(alpha, (0.5 - alpha) * 0.5f64.exp());
    let ev = generator_eigenvalues(&p, 40);
    assert!(ev
        .iter()
        .any(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn roots_are_zeros_sorted_and_paired(a in -3.0f64..1.5, b in -4.0f64..1.0) {
        let p = params(a, b);
        let rs = rightmost_roots(&p, 6).unwrap();
        prop_assert!(!rs.roots.is_empty());
        for w in rs.roots.windows(2) {
            prop_assert!(w[0].lambda.re >= w[1].lambda.re - 1e-12);
        }
        for r in &rs.roots {
            let scale = 1.0 + r.lambda.norm() + b.abs() * (-r.lambda.re).exp();
            prop_assert!(char_fn(r.lambda, &p).norm() < 1e-9 * scale);
            if r.lambda.im != 0.0 {
                prop_assert!(rs.roots.iter().any(|s| (s.lambda - r.lambda.conj()).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn zero_is_a_root_on_z(a in -3.0f64..0.9) {
        let p = params(a, zero_curve(a));
        let rs = rightmost_roots(&p, 4).unwrap();
        prop_assert!(rs.roots.iter().any(|r| r.lambda.norm() < 1e-9));
    }

    #[test]
    fn theta_inverses_agree(th in 0.01f64..3.1) {
        let (a, b) = hopf_point(th).unwrap();
        prop_assert!((hopf_theta_at(a).unwrap() - th).abs() < 1e-8);
        prop_assert!((hopf_theta_at_beta(b).unwrap() - th).abs() < 1e-8);
    }

    #[test]
    fn unstable_count_changes_only_across_hopf(th in 0.2f64..2.9, d in 0.01f64..0.2) {
        // crossing H at fixed beta by increasing alpha destabilizes a pair;
        // the step stays short of the line Z (alpha = -beta)
        let (a, b) = hopf_point(th).unwrap();
        let d = d.min(0.5 * (-b - a));
        let below = rightmost_roots(&params(a - d, b), 6).unwrap().n_unstable();
        let above = rightmost_roots(&params(a + d, b), 6).unwrap().n_unstable();
        prop_assert_eq!(above, below + 2);
    }
}
