use nonlocal_core::const_solver::{h2s_constant, measure_estimate, quadrature_form, solve_const, RhsFamily};
use nonlocal_core::estimate_verifier::{standard_field, suite_refinement, SuiteParams};
use nonlocal_core::frozen_solver::{
    assemble_forms, build_localization, fixed_point_solve, Domain, FixedPointOptions, Source,
};
use nonlocal_core::kernels::{cone_indicator_kernel, constant_kernel, modulated_kernel, Cone, Kernel, Outside};
use nonlocal_core::plap_lab::{cone_certificate, effective_kernel, ftc_constant, scalar_identity, CONE_FLOOR};
use nonlocal_core::rng;
use nonlocal_core::symbolics::{compute_symbol, default_truncation, gauss_legendre, periodize, verify_coercivity, Symbol};
use nonlocal_core::torus_field::{lp_norm, GridFunction, RegularityOrders, TorusGrid};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn symbol_of(k: &Kernel, size: usize) -> Symbol {
    let n = k.dim;
    let mu = periodize(k, &vec![0.0; n], k.s, default_truncation(n)).unwrap();
    compute_symbol(&mu, &TorusGrid::new(n, size).unwrap(), size / 2).unwrap()
}

fn flat_symbol(n: usize, s: f64, xi: f64) -> f64 {
    let nf = n as f64;
    let c = s * 4f64.powf(s) * gamma(nf / 2.0 + s) / (PI.powf(nf / 2.0) * gamma(1.0 - s));
    xi.powf(2.0 * s) / c
}

fn symbol_closed_form() -> Outcome {
    let t = Instant::now();
    let sym = symbol_of(&constant_kernel(1.0, 0.5, 1).unwrap(), 64);
    let mut worst: f64 = 0.0;
    for (k, m, _) in sym.modes() {
        let kn = k[0].abs() as f64;
        if kn == 0.0 || kn > 32.0 {
            continue;
        }
        let closed = 2.0 * PI * PI * kn;
        worst = worst.max((m / closed - 1.0).abs()).max((m / flat_symbol(1, 0.5, 2.0 * PI * kn) - 1.0).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(worst < 1e-4 && secs < 10.0, format!("max rel error {worst:.2e}, {secs:.1}s"))
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

fn coercivity_certificate() -> Outcome {
    let t = Instant::now();
    let oracle = fmin_oracle(PI / 4.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let cone = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
        let k = cone_indicator_kernel(cone.clone(), 1.0, 1.0, s, Outside::Zero).unwrap();
        let cert = verify_coercivity(&symbol_of(&k, 64), &cone, 1.0).unwrap();
        let c = cert.constant;
        let formula = c.r0.powf(2.0 - 2.0 * s) * c.f_min / (8.0 * (1.0 - s));
        let fmin_err = (c.f_min - oracle).abs();
        pass &= cert.pass && cert.kmax >= 32 && fmin_err < 1e-6 && (formula / c.c_explicit - 1.0).abs() < 1e-12;
        parts.push(format!("s={s}: min m/|k|^2s = {:.4e} vs c = {:.4e}, f_min err {fmin_err:.1e}", cert.min_ratio, c.c_explicit));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(pass && secs < 120.0, format!("{}; {secs:.1}s", parts.join("; ")))
}

fn random_band(grid: TorusGrid, seed: u64, id: u64) -> GridFunction {
    let mut st = rng::stream(seed, id);
    let c: Vec<f64> = (0..12).map(|_| rng::normal(&mut st)).collect();
    GridFunction::from_fn(grid, |x| {
        (1..=6).map(|j| {
            let ph = 2.0 * PI * j as f64 * x[0];
            c[2 * j - 2] * ph.cos() + c[2 * j - 1] * ph.sin()
        }).sum()
    })
}

fn constant_solver() -> Outcome {
    let cone = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
    let sym = symbol_of(&cone_indicator_kernel(cone, 1.0, 1.0, 0.5, Outside::Eta).unwrap(), 32);
    let mut mode_err: f64 = 0.0;
    for k in [[1i64, 0], [0, 3], [2, -5], [7, 4], [-11, 9]] {
        let g = GridFunction::from_fn(sym.grid, |x| (2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).cos());
        let u = solve_const(&sym, &g).unwrap().u;
        let scale = 1.0 / (2.0 * sym.value(&k));
        let d = u.zip(&g, |a, b| a - b * scale).unwrap().max_abs();
        mode_err = mode_err.max(d / scale);
    }
    let s = 0.4;
    let grid = TorusGrid::new(1, 32).unwrap();
    let mu = periodize(&constant_kernel(1.0, s, 1).unwrap(), &[0.0], s, 64).unwrap();
    let w = mu.grid_weights(&grid);
    let dsym = Symbol::discrete(&mu, &grid).unwrap();
    let mut weak: f64 = 0.0;
    for i in 0..50 {
        let g = random_band(grid, 31, 2 * i);
        let phi = random_band(grid, 31, 2 * i + 1);
        let u = solve_const(&dsym, &g).unwrap().u;
        let r = (quadrature_form(&w, &u, &phi).unwrap() - g.inner(&phi).unwrap()).abs();
        weak = weak.max(r / (lp_norm(&g, 2.0) * lp_norm(&phi, 2.0)));
    }
    outcome(mode_err < 1e-10 && weak < 1e-8, format!("single-mode rel error {mode_err:.2e}, weak residual {weak:.2e}"))
}

fn h2s_drift() -> Outcome {
    let k = constant_kernel(1.0, 0.4, 1).unwrap();
    let fam = RhsFamily::default();
    let c: Vec<f64> = [32, 64]
        .iter()
        .map(|&m| {
            let sym = symbol_of(&k, m);
            let rhs = fam.build(&sym.grid).unwrap();
            assert_eq!(rhs.len(), 20);
            h2s_constant(&sym, &rhs).unwrap()
        })
        .collect();
    let drift = (c[1] - c[0]).abs() / c[0];
    outcome(drift < 0.1, format!("C(32) = {:.5e}, C(64) = {:.5e}, drift {:.2}%", c[0], c[1], 100.0 * drift))
}

fn frozen_rate(eps: f64) -> (f64, f64) {
    let d = Domain::new(1, 64, 1.0, true).unwrap();
    let loc = build_localization(&d, &[0.0], 1.0 / 120.0).unwrap();
    let k = modulated_kernel(1.0, eps, 1.0, 0, 0.5, 1).unwrap();
    let u = GridFunction::from_fn(d.grid().unwrap(), |x| (2.0 * PI * x[0]).cos() + 0.3 * (6.0 * PI * x[0]).sin());
    let forms = assemble_forms(&k, &loc, 0.5).unwrap();
    let terms = forms.terms(&u, &Source::Manufactured).unwrap();
    let identity = (0..8)
        .map(|seed| forms.identity_check(&u, &terms, &standard_field(&forms.loc.cell, seed)).unwrap().relative)
        .fold(0.0, f64::max);
    let o = RegularityOrders::new(0.5, 0.6, 2.0).unwrap();
    let res = fixed_point_solve(&forms, &u, &Source::Manufactured, &o, &FixedPointOptions::default()).unwrap();
    (identity, res.trace.asymptotic_rate().unwrap_or(f64::INFINITY))
}

fn frozen_identity() -> Outcome {
    let t = Instant::now();
    let (id_full, rho) = frozen_rate(0.05);
    let (id_half, rho_half) = frozen_rate(0.025);
    let factor = rho / rho_half;
    let identity = id_full.max(id_half);
    let secs = t.elapsed().as_secs_f64();
    let pass = identity < 1e-7 && rho <= 0.5 && (1.6..=2.4).contains(&factor) && secs < 300.0;
    outcome(pass, format!("identity {identity:.2e}, rho {rho:.4}, halving factor {factor:.3}, {secs:.1}s"))
}

fn estimate_drift() -> Outcome {
    let k = constant_kernel(1.0, 0.4, 1).unwrap();
    let mut orders = RegularityOrders::new(0.4, 0.6, 4.0).unwrap();
    orders.t_tilde = Some(0.2);
    let fam = RhsFamily::default();
    let c: Vec<f64> = [32, 64]
        .iter()
        .map(|&m| {
            let sym = symbol_of(&k, m);
            measure_estimate(&sym, &orders, &fam.build(&sym.grid).unwrap()).unwrap().constant
        })
        .collect();
    let drift = (c[1] - c[0]).abs() / c[0];
    outcome(drift < 0.15, format!("C(32) = {:.5e}, C(64) = {:.5e}, drift {:.2}%", c[0], c[1], 100.0 * drift))
}

fn ftc_identity() -> Outcome {
    let g = TorusGrid::new(2, 32).unwrap();
    let u = standard_field(&g, 5);
    let mut worst: f64 = 0.0;
    let mut cp_ok = true;
    for p in [3.0, 4.0] {
        cp_ok &= ftc_constant(p) == p - 1.0;
        let k = effective_kernel(&u, &[3.0 / 32.0, -1.0 / 32.0], p).unwrap();
        let mut r = rng::stream(2024, p.to_bits());
        for _ in 0..1000 {
            let (x, y) = (rng::index(&mut r, g.len()), rng::index(&mut r, g.len()));
            let res = k.identity_check(x, y).unwrap();
            worst = worst.max(res.residual / res.scale.max(1e-300));
        }
    }
    let (l, r) = scalar_identity(0.0, 1.0, 4.0);
    let pass = worst < 1e-9 && cp_ok && l == 1.0 && r == 1.0;
    outcome(pass, format!("max rel residual {worst:.2e}, scalar (0,1) p=4 gives {l} = {r}"))
}

fn plap_cone() -> Outcome {
    let p = 4.0;
    let g = TorusGrid::new(1, 256).unwrap();
    let u = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).sin() / (2.0 * PI));
    let cert = cone_certificate(&u, &[0.0], &[1.0 / 256.0], p, CONE_FLOOR).unwrap();
    let cp = ftc_constant(p);
    let mut worst: f64 = 0.0;
    let mut raw = Vec::new();
    for s in &cert.samples {
        let ratio = s.value / s.gradient_power;
        raw.push(ratio);
        worst = worst.max((ratio / cp - 1.0).abs());
    }
    let pass = cert.eta_eff > 0.0 && worst < 0.05;
    outcome(pass, format!("eta_eff {:.4}, max |K/(c_p |grad u.h|^(p-2)) - 1| {worst:.2e}, raw ratios {raw:.4?}", cert.eta_eff))
}

fn appendix_inequalities() -> Outcome {
    let t = Instant::now();
    let p = SuiteParams::default();
    let cone = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
    let suite: Vec<(&str, Kernel, Vec<usize>)> = vec![
        ("const", constant_kernel(1.0, 0.4, 1).unwrap(), vec![64, 128]),
        ("mod", modulated_kernel(1.0, 0.3, 1.0, 0, 0.6, 1).unwrap(), vec![64, 128]),
        ("cone", cone_indicator_kernel(cone, 1.0, 1.0, 0.5, Outside::Eta).unwrap(), vec![32, 64]),
    ];
    let mut pass = true;
    let mut worst = (0.0f64, String::new());
    for (tag, k, sizes) in &suite {
        for r in suite_refinement(k, sizes, &p).unwrap() {
            pass &= r.pass && r.drift < 0.25 && r.constants.iter().all(|c| c.is_finite());
            if r.drift >= worst.0 {
                worst = (r.drift, format!("{tag}/{}", r.name));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(pass && secs < 600.0, format!("max drift {:.2}% ({}), {secs:.1}s", 100.0 * worst.0, worst.1))
}

const GOLDEN: [&str; 14] = [
    "symbol",
    "coercivity",
    "solve_const",
    "solve_frozen",
    "bootstrap",
    "plap_identity",
    "plap_certificate",
    "plap_bootstrap",
    "verify_coercivity",
    "verify_caccioppoli",
    "verify_linfty",
    "verify_log",
    "verify_poincare",
    "norms",
];

fn run_golden(name: &str, out: &Path) -> Option<i32> {
    let mut words: Vec<String> = match name.split_once('_') {
        Some((head @ ("plap" | "verify"), mode)) => vec![head.into(), mode.into()],
        _ => vec![name.replace('_', "-")],
    };
    words.push("--config".into());
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.toml"));
    Command::new(env!("CARGO_BIN_EXE_nonlocal")).args(words).arg(cfg).arg("--output").arg(out).status().ok()?.code()
}

fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("nonlocal-acceptance-{}", std::process::id()));
    let mut bad = Vec::new();
    for name in GOLDEN {
        let (a, b) = (root.join(format!("{name}-a")), root.join(format!("{name}-b")));
        if run_golden(name, &a) != Some(0) || run_golden(name, &b) != Some(0) {
            bad.push(format!("{name} (exit)"));
            continue;
        }
        let manifest = std::fs::read(a.join("manifest.txt")).unwrap_or_default();
        let mut same = manifest == std::fs::read(b.join("manifest.txt")).unwrap_or_default();
        for line in String::from_utf8_lossy(&manifest).lines() {
            if let Some((_, file)) = line.split_once("  ") {
                same &= std::fs::read(a.join(file)).ok() == std::fs::read(b.join(file)).ok();
            }
        }
        if !same {
            bad.push(name.to_string());
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    outcome(bad.is_empty(), format!("{} golden runs, differing: {bad:?}", GOLDEN.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("symbol closed form", symbol_closed_form),
        ("coercivity certificate", coercivity_certificate),
        ("constant solver exactness", constant_solver),
        ("H^2s constant refinement", h2s_drift),
        ("freezing identity and rate", frozen_identity),
        ("regularity estimate refinement", estimate_drift),
        ("p-Laplacian FTC identity", ftc_identity),
        ("p-Laplacian cone certificate", plap_cone),
        ("appendix inequalities", appendix_inequalities),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!("acceptance {:>2} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
