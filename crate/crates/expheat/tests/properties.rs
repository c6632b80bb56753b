//! Randomized property tests for the structural invariants: norm axioms,
//! semigroup laws, exponent bookkeeping, and the log-log fitter.

use proptest::prelude::*;

use expheat::decay::{exponent_selector, fit_loglog, theoretical_exponent};
use expheat::grid::{make_grid, Field};
use expheat::orlicz::{luxemburg_norm, OrliczParams};
use expheat::semigroup::{apply_semigroup, DiffusionSpec};

fn field_from(values: Vec<f64>) -> Field {
    let n = 64;
    let g = make_grid(1, n, 8.0).unwrap();
    let mut v = values;
    v.resize(n, 0.0);
    Field::from_values(g, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn luxemburg_norm_is_a_norm(
        values in proptest::collection::vec(-2.0f64..2.0, 64),
        c in 0.05f64..20.0,
        r in 1.0f64..4.0,
    ) {
        let f = field_from(values);
        prop_assume!(f.max_abs() > 1e-6);
        let p = OrliczParams::new(r).unwrap();
        let norm = luxemburg_norm(&f, &p).unwrap();
        prop_assert!(norm > 0.0);
        // absolute homogeneity
        let scaled = luxemburg_norm(&f.scale(c), &p).unwrap();
        prop_assert!((scaled - c * norm).abs() <= 1e-8 * (1.0 + c * norm));
        // |f| <= |g| pointwise implies ||f|| <= ||g||
        let bigger = f.map(|v| v.abs() + 0.25);
        let norm_big = luxemburg_norm(&bigger, &p).unwrap();
        prop_assert!(norm <= norm_big * (1.0 + 1e-10));
        // triangle inequality against itself: ||2f|| = 2||f||, and
        // ||f + g|| <= ||f|| + ||g|| for g = |f|
        let sum = f.axpy(1.0, &f.map(f64::abs)).unwrap();
        let norm_sum = luxemburg_norm(&sum, &p).unwrap();
        prop_assert!(norm_sum <= 2.0 * norm * (1.0 + 1e-8));
    }

    #[test]
    fn semigroup_contracts_and_conserves_mass(
        values in proptest::collection::vec(-1.0f64..1.0, 64),
        t in 0.01f64..5.0,
        theta in 0.5f64..2.0,
    ) {
        let f = field_from(values);
        prop_assume!(f.lp_norm(1.0).unwrap() > 1e-6);
        let d = DiffusionSpec::new(theta, 1).unwrap();
        let u = apply_semigroup(&f, t, &d).unwrap();
        prop_assert!((u.mass() - f.mass()).abs() <= 1e-10 * f.mass().abs().max(1.0));
        for q in [1.0, 2.0, f64::INFINITY] {
            let before = f.lp_norm(q).unwrap();
            let after = u.lp_norm(q).unwrap();
            prop_assert!(after <= before * (1.0 + 1e-10), "q={q}: {after} > {before}");
        }
    }

    #[test]
    fn exponent_formula_is_monotone(
        p in 1.0f64..2.0,
        q_step in 0.1f64..50.0,
        theta in 0.5f64..2.0,
    ) {
        // larger q decays faster; larger p* decays slower
        let q1 = p + q_step;
        let q2 = q1 + q_step;
        let e1 = theoretical_exponent(1, theta, p, q1).unwrap();
        let e2 = theoretical_exponent(1, theta, p, q2).unwrap();
        prop_assert!(e2 >= e1);
        let s = exponent_selector(p, 1, theta, 2.0).unwrap();
        prop_assert!(s.p_star >= p - 1e-15);
        prop_assert!(s.p1 >= 1.0 && s.p2 >= 1.0);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(
        alpha in 0.01f64..3.0,
        scale in 0.1f64..10.0,
    ) {
        let ts: Vec<f64> = (0..60).map(|i| 0.5 * 1.12f64.powi(i)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| scale * t.powf(-alpha)).collect();
        let (slope, intercept, r2, m) = fit_loglog(&ts, &ys, (0.4, 1e4)).unwrap();
        prop_assert!((slope + alpha).abs() < 1e-9);
        prop_assert!((intercept - scale.ln()).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-9);
        prop_assert_eq!(m, 60);
    }
}
