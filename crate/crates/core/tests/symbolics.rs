use nonlocal_core::kernels::{cone_indicator_kernel, constant_kernel, Cone, Outside};
use nonlocal_core::symbolics::{
    compute_symbol, default_truncation, explicit_constant, gauss_legendre, periodize, tail_bound, verify_coercivity,
};
use nonlocal_core::torus_field::TorusGrid;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// `∫_{R^n} (1 - cos ξ·h) |h|^{-n-2s} dh = |ξ|^{2s} / C_{n,s}`.
fn flat_symbol(n: usize, s: f64, xi: f64) -> f64 {
    let nf = n as f64;
    let c = s * 4f64.powf(s) * gamma(nf / 2.0 + s) / (PI.powf(nf / 2.0) * gamma(1.0 - s));
    xi.powf(2.0 * s) / c
}

#[test]
fn constant_kernel_matches_gamma_closed_form() {
    for (n, size, s) in [(1, 64, 0.25), (1, 64, 0.5), (1, 64, 0.8), (2, 16, 0.3), (2, 16, 0.7)] {
        let k = constant_kernel(1.0, s, n).unwrap();
        let mu = periodize(&k, &vec![0.0; n], s, default_truncation(n)).unwrap();
        let g = TorusGrid::new(n, size).unwrap();
        let sym = compute_symbol(&mu, &g, size / 2).unwrap();
        for (kv, m, _) in sym.modes() {
            let knorm = kv.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            let expect = flat_symbol(n, s, 2.0 * PI * knorm);
            assert!((m / expect - 1.0).abs() < 1e-5, "n={n} s={s} k={kv:?}: {m} vs {expect}");
        }
    }
}

#[test]
fn periodization_matches_direct_lattice_sum() {
    let s = 0.35;
    let k = constant_kernel(1.0, s, 1).unwrap();
    let mu = periodize(&k, &[0.0], s, default_truncation(1)).unwrap();
    let e = -1.0 - 2.0 * s;
    for h in [0.03, 0.17, 0.31, 0.5] {
        let big = 200_000i64;
        let mut direct: f64 = (-big..=big).map(|m| (h + m as f64).abs().powf(e)).sum();
        direct += 2.0 * (big as f64 + 0.5).powf(-2.0 * s) / (2.0 * s);
        assert!((mu.eval(&[h]) / direct - 1.0).abs() < 1e-6, "{h}");
    }
}

#[test]
fn truncation_error_within_tail_bound() {
    let cone = Cone::cap(2, &[1.0, 1.0], PI / 5.0, true).unwrap();
    let k = cone_indicator_kernel(cone, 1.0, 1.0, 0.4, Outside::Zero).unwrap();
    let m = 4;
    let a = periodize(&k, &[0.0, 0.0], 0.4, m).unwrap();
    let b = periodize(&k, &[0.0, 0.0], 0.4, 4 * m).unwrap();
    let g = TorusGrid::new(2, 8).unwrap();
    let (wa, wb) = (a.grid_weights(&g), b.grid_weights(&g));
    let bound = tail_bound(2, 0.4, 1.0, m);
    for (x, y) in wa.iter().zip(&wb) {
        assert!((x - y).abs() <= bound);
    }
}

#[test]
fn symbol_is_homogeneous_along_rays() {
    let cone = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
    let s = 0.6;
    let k = cone_indicator_kernel(cone, 1.0, 1.0, s, Outside::Zero).unwrap();
    let mu = periodize(&k, &[0.0, 0.0], s, default_truncation(2)).unwrap();
    let g = TorusGrid::new(2, 64).unwrap();
    let sym = compute_symbol(&mu, &g, 32).unwrap();
    for base in [[4i64, 0], [4, 3], [1, 4]] {
        for lam in [2i64, 3, 4, 6] {
            let kk = [base[0] * lam, base[1] * lam];
            if kk.iter().any(|c| c.abs() > 32) {
                continue;
            }
            let ratio = sym.value(&kk) / sym.value(&base);
            assert!((ratio / (lam as f64).powf(2.0 * s) - 1.0).abs() < 0.02);
        }
    }
}

fn fmin_oracle(half_angle: f64) -> f64 {
    let (x, w) = gauss_legendre(40);
    let moment = |psi: f64| {
        let mut total = 0.0;
        for centre in [0.0, PI] {
            let (a, b) = (centre - half_angle, centre + half_angle);
            for (xi, wi) in x.iter().zip(&w) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                total += 0.5 * (b - a) * wi * (t - psi).cos().powi(2);
            }
        }
        total
    };
    (0..=20_000).map(|i| moment(PI * i as f64 / 20_000.0)).fold(f64::INFINITY, f64::min)
}

#[test]
fn explicit_constant_matches_independent_quadrature() {
    for half in [PI / 4.0, PI / 7.0, PI / 3.0] {
        let cone = Cone::cap(2, &[1.0, 0.0], half, true).unwrap();
        let c = explicit_constant(&cone, 1.0, 0.5).unwrap();
        assert!((c.f_min - fmin_oracle(half)).abs() < 1e-6, "{half}");
    }
    let full = explicit_constant(&Cone::full(2), 1.0, 0.5).unwrap();
    assert!((full.f_min - PI).abs() < 1e-10);
}

#[test]
fn certificate_holds_for_cone_suite() {
    let cones = [
        Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap(),
        Cone::cap(2, &[1.0, 2.0], PI / 8.0, true).unwrap(),
        Cone::union(&[Cone::cap(2, &[1.0, 0.0], PI / 10.0, true).unwrap(), Cone::cap(2, &[0.0, 1.0], PI / 10.0, true).unwrap()])
            .unwrap(),
    ];
    for cone in cones {
        let k = cone_indicator_kernel(cone.clone(), 0.5, 1.0, 0.45, Outside::Eta).unwrap();
        let mu = periodize(&k, &[0.0, 0.0], 0.45, default_truncation(2)).unwrap();
        let sym = compute_symbol(&mu, &TorusGrid::new(2, 32).unwrap(), 16).unwrap();
        let cert = verify_coercivity(&sym, &cone, 0.5).unwrap();
        assert!(cert.pass, "{}", cert.report());
    }
}
