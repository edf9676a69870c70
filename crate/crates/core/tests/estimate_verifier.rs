use nonlocal_core::estimate_verifier::{
    nearest_index, radial_cutoff, standard_field, suite_refinement, verify_caccioppoli, PairKernel, SuiteParams,
};
use nonlocal_core::kernels::{constant_kernel, modulated_kernel};
use nonlocal_core::torus_field::TorusGrid;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn caccioppoli_scales_quadratically(lambda in 0.1f64..10.0, seed in 0u64..50) {
        let g = TorusGrid::new(1, 32).unwrap();
        let k = modulated_kernel(1.0, 0.2, 1.0, 0, 0.4, 1).unwrap();
        let pk = PairKernel::new(&k, &g).unwrap();
        let u = standard_field(&g, seed);
        let lo = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let v = u.map(|x| x - lo);
        let f = pk.manufactured(&v);
        let c = nearest_index(&g, &[0.0]);
        let (cut, grad) = radial_cutoff(&g, c, 0.1, 0.2).unwrap();
        let a = verify_caccioppoli(&k, &v, &f, c, 0.3, &cut, grad).unwrap();
        let b = verify_caccioppoli(&k, &v.scale(lambda), &f.scale(lambda), c, 0.3, &cut, grad).unwrap();
        let l2 = lambda * lambda;
        prop_assert!((b.lhs - l2 * a.lhs).abs() <= 1e-12 * b.lhs);
        prop_assert!((b.terms[0].1 - l2 * a.terms[0].1).abs() <= 1e-12 * b.terms[0].1);
    }
}

#[test]
fn constants_are_stable_under_refinement() {
    let p = SuiteParams::default();
    for k in [constant_kernel(1.0, 0.4, 1).unwrap(), modulated_kernel(1.0, 0.3, 1.0, 0, 0.6, 1).unwrap()] {
        for r in suite_refinement(&k, &[64, 128], &p).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }
}
