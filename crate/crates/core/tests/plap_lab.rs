use nonlocal_core::estimate_verifier::standard_field;
use nonlocal_core::plap_lab::{difference_quotient, effective_kernel, ftc_constant, scalar_identity};
use nonlocal_core::rng;
use nonlocal_core::torus_field::{lp_norm, GridFunction, TorusGrid};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scalar_ftc_identity(a in -3.0f64..3.0, b in -3.0f64..3.0, p in 2.0f64..6.0) {
        let (l, r) = scalar_identity(a, b, p);
        prop_assert!((l - r).abs() <= 1e-9 * (a.abs().powf(p - 1.0) + b.abs().powf(p - 1.0)).max(1e-300));
    }
}

#[test]
fn grid_identity_on_random_pairs() {
    let g = TorusGrid::new(2, 32).unwrap();
    let u = standard_field(&g, 5);
    for p in [2.5, 3.0, 4.0] {
        assert_eq!(ftc_constant(p), p - 1.0);
        let k = effective_kernel(&u, &[3.0 / 32.0, -1.0 / 32.0], p).unwrap();
        let mut r = rng::stream(77, p.to_bits());
        for _ in 0..300 {
            let (x, y) = (rng::index(&mut r, g.len()), rng::index(&mut r, g.len()));
            let res = k.identity_check(x, y).unwrap();
            assert!(res.residual <= 1e-9 * res.scale.max(1e-300), "{res:?}");
        }
    }
}

#[test]
fn effective_kernel_bounded_by_lipschitz_power() {
    let g = TorusGrid::new(1, 128).unwrap();
    let u = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).sin() / (2.0 * PI) + 0.1 * (4.0 * PI * x[0]).cos());
    let k = effective_kernel(&u, &[4.0 / 128.0], 4.0).unwrap();
    let bound = k.upper_estimate();
    for i in 0..200 {
        let x = -0.5 + i as f64 / 200.0;
        for r in [0.0, 0.01, 0.05, 0.1] {
            for h in [1.0, -1.0] {
                assert!(k.eval(&[x], r, &[h]) <= bound * (1.0 + 1e-3));
            }
        }
    }
}

#[test]
fn shifted_source_bounded_by_shift() {
    let g = TorusGrid::new(1, 256).unwrap();
    let f = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).sin() + 0.5 * (6.0 * PI * x[0]).cos());
    let grad = 2.0 * PI * (1.0 + 1.5);
    for j in [1, 2, 5, 16] {
        let tau = j as f64 / 256.0;
        let d = difference_quotient(&f, &[tau]).unwrap();
        for seed in 0..5 {
            let psi = standard_field(&g, seed);
            let c = d.inner(&psi).unwrap().abs() / (tau * grad * lp_norm(&psi, 1.0));
            assert!(c <= 1.0 + 1e-12, "{c}");
        }
    }
}
