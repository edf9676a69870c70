use nonlocal_core::const_solver::{energy_ratio, h2s_constant, quadrature_form, solve_const, RhsFamily, WeakForm};
use nonlocal_core::kernels::{cone_indicator_kernel, constant_kernel, Cone, Outside};
use nonlocal_core::symbolics::{compute_symbol, default_truncation, periodize, Symbol};
use nonlocal_core::torus_field::{frac_laplacian, GridFunction, TorusGrid};
use proptest::prelude::*;
use std::f64::consts::PI;

fn bandlimited(grid: TorusGrid, coeffs: &[(f64, f64)]) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        coeffs.iter().enumerate().map(|(j, (a, b))| {
            let ph = 2.0 * PI * (j + 1) as f64 * (x[0] + 0.5 * x.get(1).copied().unwrap_or(0.0));
            a * ph.cos() + b * ph.sin()
        }).sum()
    })
}

fn cone_symbol(size: usize) -> Symbol {
    let cone = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
    let k = cone_indicator_kernel(cone, 1.0, 1.0, 0.5, Outside::Eta).unwrap();
    let mu = periodize(&k, &[0.0, 0.0], 0.5, default_truncation(2)).unwrap();
    compute_symbol(&mu, &TorusGrid::new(2, size).unwrap(), size / 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grid_quadrature_diagonalizes(c1 in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
                                     c2 in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5)) {
        let g = TorusGrid::new(1, 32).unwrap();
        let k = constant_kernel(1.0, 0.4, 1).unwrap();
        let mu = periodize(&k, &[0.0], 0.4, 64).unwrap();
        let w = mu.grid_weights(&g);
        let sym = Symbol::discrete(&mu, &g).unwrap();
        let (u, phi) = (bandlimited(g, &c1), bandlimited(g, &c2));
        let a = quadrature_form(&w, &u, &phi).unwrap();
        let b = WeakForm::new(sym).unwrap().apply(&u, &phi).unwrap();
        let scale = quadrature_form(&w, &u, &u).unwrap().sqrt() * quadrature_form(&w, &phi, &phi).unwrap().sqrt();
        prop_assert!((a - b).abs() < 1e-8 * scale.max(1e-300));
    }

    #[test]
    fn solver_commutes_with_fractional_powers(c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6), order in -1.0f64..1.0) {
        let sym = cone_symbol(16);
        let g = bandlimited(sym.grid, &c).minus_mean();
        let a = frac_laplacian(&solve_const(&sym, &g).unwrap().u, order).unwrap();
        let b = solve_const(&sym, &frac_laplacian(&g, order).unwrap()).unwrap().u;
        let diff = a.zip(&b, |x, y| x - y).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * a.max_abs().max(1e-300));
    }
}

#[test]
fn energy_coercivity_constant_is_finite() {
    let sym = cone_symbol(16);
    let rhs = RhsFamily { band: 6, ..RhsFamily::for_dim(2) }.build(&sym.grid).unwrap();
    let kappa = rhs.iter().map(|u| energy_ratio(&sym, u).unwrap()).fold(0.0, f64::max);
    assert!(kappa.is_finite() && kappa > 0.0);
}

#[test]
fn h2s_constant_is_stable_under_refinement() {
    let k = constant_kernel(1.0, 0.4, 1).unwrap();
    let mu = periodize(&k, &[0.0], 0.4, default_truncation(1)).unwrap();
    let fam = RhsFamily::default();
    let c: Vec<f64> = [32, 64]
        .iter()
        .map(|&m| {
            let g = TorusGrid::new(1, m).unwrap();
            h2s_constant(&compute_symbol(&mu, &g, m / 2).unwrap(), &fam.build(&g).unwrap()).unwrap()
        })
        .collect();
    assert!((c[1] - c[0]).abs() < 0.1 * c[0], "{c:?}");
}
