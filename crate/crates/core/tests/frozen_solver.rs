use nonlocal_core::const_solver::seminorm;
use nonlocal_core::estimate_verifier::standard_field;
use nonlocal_core::frozen_solver::{
    assemble_forms, build_localization, fixed_point_solve, Domain, FixedPointOptions, FrozenForms, Source,
};
use nonlocal_core::kernels::modulated_kernel;
use nonlocal_core::torus_field::{lp_norm, GridFunction, RegularityOrders};
use std::f64::consts::PI;

fn setup(eps: f64) -> (FrozenForms, GridFunction) {
    let d = Domain::new(1, 256, 1.0, true).unwrap();
    let loc = build_localization(&d, &[0.0], 0.25 / 30.0).unwrap();
    let k = modulated_kernel(1.0, eps, 1.0, 0, 0.5, 1).unwrap();
    let u = GridFunction::from_fn(d.grid().unwrap(), |x| (2.0 * PI * x[0]).cos() + 0.3 * (6.0 * PI * x[0]).sin());
    (assemble_forms(&k, &loc, 0.5).unwrap(), u)
}

#[test]
fn decomposition_identity_on_probes() {
    let (forms, u) = setup(0.05);
    let terms = forms.terms(&u, &Source::Manufactured).unwrap();
    for seed in 0..8 {
        let c = forms.identity_check(&u, &terms, &standard_field(&forms.loc.cell, seed)).unwrap();
        assert!(c.relative < 1e-10, "{c:?}");
    }
}

#[test]
fn rate_grows_with_oscillation() {
    let o = RegularityOrders::new(0.5, 0.6, 2.0).unwrap();
    let rates: Vec<f64> = [0.0125, 0.025, 0.05]
        .iter()
        .map(|&eps| {
            let (forms, u) = setup(eps);
            let res = fixed_point_solve(&forms, &u, &Source::Manufactured, &o, &FixedPointOptions::default()).unwrap();
            assert!(res.plateau_error < 1e-9);
            res.trace.asymptotic_rate().unwrap()
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
}

#[test]
fn lower_order_forms_have_finite_constants() {
    let (forms, u) = setup(0.05);
    let terms = forms.terms(&u, &Source::Manufactured).unwrap();
    let v = forms.localized(&u);
    let (s, t, p) = (0.5, 0.5, 2.0);
    let left = lp_norm(&v, 2.0) + seminorm(&v, s, 2.0).unwrap() + seminorm(&v, t, p).unwrap();
    for seed in 0..6 {
        let psi = standard_field(&forms.loc.cell, 20 + seed);
        let right = lp_norm(&psi, 2.0) + seminorm(&psi, 0.25, 2.0).unwrap();
        for gi in &terms.g {
            let c = gi.inner(&psi).unwrap().abs() / (left * right);
            assert!(c.is_finite());
        }
    }
}
