use nonlocal_core::estimate_verifier::standard_field;
use nonlocal_core::torus_field::{
    bessel_seminorm, dft, export_csv, frac_laplacian, gagliardo_multiplier, gagliardo_seminorm, import_csv, lp_norm,
    read_field, write_field, GridFunction, TorusGrid,
};
use proptest::prelude::*;

fn field(grid: TorusGrid, values: &[f64]) -> GridFunction {
    GridFunction::new(grid, values[..grid.len()].to_vec()).unwrap()
}

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![Just((1, 8)), Just((1, 16)), Just((1, 32)), Just((2, 8)), Just((3, 4))]
        .prop_map(|(n, m)| TorusGrid::new(n, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel(g in grid_strategy(), vals in prop::collection::vec(-1.0f64..1.0, 64)) {
        let f = field(g, &vals);
        let lhs = lp_norm(&f, 2.0).powi(2);
        let rhs: f64 = dft(&f).coeffs.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1e-300));
    }

    #[test]
    fn fractional_powers_compose(vals in prop::collection::vec(-1.0f64..1.0, 32), a in -1.5f64..1.0, b in -0.4f64..1.0) {
        let f = field(TorusGrid::new(1, 32).unwrap(), &vals).minus_mean();
        let ab = frac_laplacian(&frac_laplacian(&f, a).unwrap(), b).unwrap();
        let direct = frac_laplacian(&f, a + b).unwrap();
        let scale = direct.max_abs().max(ab.max_abs()).max(1e-300);
        let diff = ab.zip(&direct, |x, y| x - y).unwrap().max_abs();
        prop_assert!(diff <= 1e-10 * scale);
    }

    #[test]
    fn gagliardo_is_translation_invariant(vals in prop::collection::vec(-1.0f64..1.0, 64), shift in -20i64..20, order in 0.1f64..0.9) {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = field(g, &vals);
        let a = gagliardo_seminorm(&f, order, 3.0).unwrap();
        let b = gagliardo_seminorm(&f.shifted(&[shift, 3 * shift]), order, 3.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn quadratic_gagliardo_is_diagonal(vals in prop::collection::vec(-1.0f64..1.0, 32), order in 0.1f64..0.9) {
        let g = TorusGrid::new(1, 32).unwrap();
        let f = field(g, &vals);
        let lhs = gagliardo_seminorm(&f, order, 2.0).unwrap().powi(2);
        let c = gagliardo_multiplier(&g, order);
        let rhs: f64 = dft(&f).coeffs.iter().zip(&c).map(|(z, w)| z.norm_sqr() * w).sum();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-10);
    }
}

#[test]
fn sobolev_embedding_constant_is_stable() {
    let (sigma, p, q) = (0.4, 2.0, 10.0);
    let ratios: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&m| {
            let g = TorusGrid::new(1, m).unwrap();
            let f = standard_field(&g, 3).minus_mean();
            lp_norm(&f, q) / bessel_seminorm(&f, sigma, p).unwrap()
        })
        .collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 1.05, "{ratios:?}");
}

#[test]
fn field_files_round_trip() {
    let g = TorusGrid::new(2, 8).unwrap();
    let f = standard_field(&g, 9);
    let dir = std::env::temp_dir().join(format!("nonlocal-field-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let base = dir.join("u");
    write_field(&base, &f, "u").unwrap();
    let (back, meta) = read_field(&base).unwrap();
    assert_eq!(back, f);
    assert_eq!((meta.n, meta.size), (2, 8));
    let csv = import_csv(&export_csv(&f).unwrap()).unwrap();
    assert!(csv.zip(&f, |a, b| a - b).unwrap().max_abs() < 1e-12);
    std::fs::remove_dir_all(&dir).unwrap();
}
