use crate::artifacts::Artifacts;
use crate::config::{missing, RunConfig};
use nonlocal_core::const_solver::{h2s_constant, measure_estimate, solve_const, RhsFamily};
use nonlocal_core::estimate_verifier::{
    ball, log_truncation, nearest_index, radial_cutoff, standard_field, suite_refinement, verify_caccioppoli,
    verify_coercivity_form, verify_linfty_bound, verify_log_lemma, verify_poincare, InequalityReport, PairKernel,
    SuiteParams,
};
use nonlocal_core::frozen_solver::{
    assemble_forms, bootstrap_regularity, build_localization, cover_centers, fixed_point_solve, BootstrapTarget, Domain,
    FixedPointOptions, Source,
};
use nonlocal_core::kernels::Kernel;
use nonlocal_core::plap_lab::{bootstrap_hoelder, cone_certificate, effective_kernel, plap_residual, CONE_FLOOR};
use nonlocal_core::symbolics::{compute_symbol, default_truncation, periodize, verify_coercivity, Symbol};
use nonlocal_core::torus_field::{
    bessel_seminorm, gagliardo_estimate, lp_norm, read_field, GagliardoMode, GridFunction, TorusGrid, EXACT_LIMIT,
};
use nonlocal_core::{rng, Error, Result};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlapMode {
    Identity,
    Certificate,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyKind {
    Coercivity,
    Caccioppoli,
    Linfty,
    Log,
    Poincare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Symbol,
    Coercivity,
    SolveConst,
    SolveFrozen,
    Bootstrap,
    Plap(PlapMode),
    Verify(VerifyKind),
    Norms,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let cmd = match words.as_slice() {
            ["symbol"] => Command::Symbol,
            ["coercivity"] => Command::Coercivity,
            ["solve-const"] => Command::SolveConst,
            ["solve-frozen"] => Command::SolveFrozen,
            ["bootstrap"] => Command::Bootstrap,
            ["norms"] => Command::Norms,
            ["plap", "identity"] => Command::Plap(PlapMode::Identity),
            ["plap", "certificate"] => Command::Plap(PlapMode::Certificate),
            ["plap", "bootstrap"] => Command::Plap(PlapMode::Bootstrap),
            ["verify", "coercivity"] => Command::Verify(VerifyKind::Coercivity),
            ["verify", "caccioppoli"] => Command::Verify(VerifyKind::Caccioppoli),
            ["verify", "linfty"] => Command::Verify(VerifyKind::Linfty),
            ["verify", "log"] => Command::Verify(VerifyKind::Log),
            ["verify", "poincare"] => Command::Verify(VerifyKind::Poincare),
            _ => return Err(Error::Config { location: "command".into(), message: format!("unknown command '{s}'") }),
        };
        Ok(cmd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
        }
    }
}

struct Report(String);

impl Report {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut r = Report(String::new());
        r.line("command", command);
        r.line("seed", cfg.seed);
        r
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }

    fn num(&mut self, key: &str, value: f64) {
        let _ = writeln!(self.0, "{key} = {value:.12e}");
    }
}

fn kernel(cfg: &RunConfig) -> Result<Kernel> {
    cfg.kernel_spec()?.build(&cfg.base_dir)
}

fn symbol(cfg: &RunConfig, k: &Kernel, grid: &TorusGrid) -> Result<Symbol> {
    let mu = periodize(k, &vec![0.0; k.dim], k.s, default_truncation(k.dim))?;
    compute_symbol(&mu, grid, grid.size() / 2).map_err(|e| match e {
        Error::Config { .. } => e,
        other => {
            let _ = cfg;
            other
        }
    })
}

fn input_field(cfg: &RunConfig, grid: &TorusGrid, path: Option<&String>) -> Result<GridFunction> {
    match path {
        Some(p) => {
            let (f, _) = read_field(&cfg.resolve(p))?;
            grid.check_same(&f.grid)?;
            Ok(f)
        }
        None => Ok(standard_field(grid, cfg.seed)),
    }
}

/// Runs one command and writes its artifacts plus the manifest into `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut art = Artifacts::create(out)?;
    let outcome = match command {
        Command::Symbol => run_symbol(cfg, &mut art, false)?,
        Command::Coercivity => run_symbol(cfg, &mut art, true)?,
        Command::SolveConst => run_solve_const(cfg, &mut art)?,
        Command::SolveFrozen => run_frozen(cfg, &mut art)?,
        Command::Bootstrap => run_bootstrap(cfg, &mut art)?,
        Command::Plap(mode) => run_plap(cfg, mode, &mut art)?,
        Command::Verify(kind) => run_verify(cfg, kind, &mut art)?,
        Command::Norms => run_norms(cfg, &mut art)?,
    };
    art.finish()?;
    Ok(outcome)
}

fn run_symbol(cfg: &RunConfig, art: &mut Artifacts, certify: bool) -> Result<Outcome> {
    let k = kernel(cfg)?;
    let grid = cfg.grid()?;
    let sym = symbol(cfg, &k, &grid)?;
    art.write("symbol.csv", &sym.to_csv())?;
    if !certify {
        let mut r = Report::new("symbol", cfg);
        r.line("family", &k.family);
        r.line("n", grid.dim());
        r.line("N", grid.size());
        r.num("s", k.s);
        r.line("kmax", sym.kmax);
        r.line("modes", sym.modes().len());
        art.write("report.txt", &r.0)?;
        return Ok(Outcome::Pass);
    }
    let cert = verify_coercivity(&sym, &k.cone, k.eta)?;
    let mut csv = String::from("k,m,k_pow,ratio,error,pass\n");
    for m in &cert.modes {
        let key: Vec<String> = m.k.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(csv, "{},{:.12e},{:.12e},{:.12e},{:.3e},{}", key.join(" "), m.m, m.k_pow, m.ratio, m.error, m.pass);
    }
    art.write("modes.csv", &csv)?;
    art.write("certificate.txt", &cert.report())?;
    Ok(Outcome::from(cert.pass))
}

fn run_solve_const(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let k = kernel(cfg)?;
    let grid = cfg.grid()?;
    let sym = symbol(cfg, &k, &grid)?;
    let family = RhsFamily { seed: cfg.seed, ..RhsFamily::for_dim(grid.dim()) };
    let rhs = family.build(&grid)?;
    let mut r = Report::new("solve-const", cfg);
    r.line("rhs_count", rhs.len());
    r.num("h2s_constant", h2s_constant(&sym, &rhs)?);
    let u = solve_const(&sym, &rhs[rhs.len() - 1])?.u;
    art.field("solution", &u)?;
    if cfg.orders.is_some() {
        let rep = measure_estimate(&sym, &cfg.orders()?, &rhs)?;
        r.num("spectral_residual", rep.residual);
        r.num("estimate_constant", rep.constant);
        r.line("worst_rhs", rep.worst);
        let mut csv = String::from("rhs,dual_bound,ratio\n");
        for (i, (d, q)) in rep.dual_bounds.iter().zip(&rep.ratios).enumerate() {
            let _ = writeln!(csv, "{i},{d:.12e},{q:.12e}");
        }
        art.write("estimate.csv", &csv)?;
        let mut lad = String::from("order,exponent,value\n");
        for e in &rep.ladder {
            let _ = writeln!(lad, "{:.6},{:.6},{:.12e}", e.order, e.exponent, e.value);
        }
        art.write("ladder.csv", &lad)?;
    }
    art.write("report.txt", &r.0)?;
    Ok(Outcome::Pass)
}

fn fixed_point_options(cfg: &RunConfig) -> FixedPointOptions {
    FixedPointOptions { tol: cfg.tolerances.tol, max_iter: cfg.tolerances.max_iter, rho_max: cfg.tolerances.rho_max }
}

fn run_frozen(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let k = kernel(cfg)?;
    let grid = cfg.grid()?;
    let orders = cfg.orders()?;
    let loc_spec = cfg.localization()?;
    let domain = Domain::new(grid.dim(), grid.size(), 1.0, true)?;
    let loc = build_localization(&domain, &loc_spec.x0, loc_spec.radius)?;
    let forms = assemble_forms(&k, &loc, k.s)?;
    let u = input_field(cfg, &grid, cfg.field.as_ref())?;
    let res = fixed_point_solve(&forms, &u, &Source::Manufactured, &orders, &fixed_point_options(cfg))?;
    art.write("trace.csv", &res.trace.to_csv())?;
    let mut csv = String::from("probe,lhs,rhs,residual,relative\n");
    let mut worst: f64 = 0.0;
    for i in 0..8u64 {
        let psi = standard_field(&loc.cell, cfg.seed.wrapping_add(100 + i));
        let c = forms.identity_check(&u, &res.terms, &psi)?;
        worst = worst.max(c.relative);
        let _ = writeln!(csv, "{i},{:.12e},{:.12e},{:.3e},{:.3e}", c.lhs, c.rhs, c.residual, c.relative);
    }
    art.write("identity.csv", &csv)?;
    art.field("solution", &res.v)?;
    let mut r = Report::new("solve-frozen", cfg);
    r.line("cell_size", loc.cell_size());
    r.line("iterations", res.trace.increments.len());
    r.num("rate", res.trace.asymptotic_rate().unwrap_or(0.0));
    r.num("plateau_error", res.plateau_error);
    r.num("identity_relative", worst);
    r.num("spectral_residual", res.trace.residual);
    art.write("report.txt", &r.0)?;
    Ok(Outcome::Pass)
}

fn run_bootstrap(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let k = kernel(cfg)?;
    let grid = cfg.grid()?;
    let orders = cfg.orders()?;
    let loc = cfg.localization()?;
    let b = cfg.bootstrap.as_ref().ok_or_else(|| missing("bootstrap"))?;
    let domain = Domain::new(grid.dim(), grid.size(), 1.0, true)?;
    let centers = if b.extent > 0.0 { cover_centers(&domain, loc.radius, b.extent) } else { vec![loc.x0.clone()] };
    let u = input_field(cfg, &grid, cfg.field.as_ref())?;
    let target = BootstrapTarget { order: b.order, exponent: b.exponent };
    let rep = bootstrap_regularity(
        &k,
        &domain,
        &u,
        &Source::Manufactured,
        &orders,
        &target,
        loc.radius,
        &centers,
        &fixed_point_options(cfg),
    )?;
    art.write("ladder.csv", &rep.to_csv())?;
    let mut r = Report::new("bootstrap", cfg);
    r.line("balls", rep.centers.len());
    r.line("rungs", rep.rungs.len());
    r.num("max_rate", rep.rates.iter().cloned().fold(0.0, f64::max));
    r.num("plateau_error", rep.plateau_error);
    art.write("report.txt", &r.0)?;
    Ok(Outcome::Pass)
}

fn plap_field(cfg: &RunConfig, grid: &TorusGrid) -> Result<GridFunction> {
    match &cfg.field {
        Some(p) => input_field(cfg, grid, Some(p)),
        None => Ok(GridFunction::from_fn(*grid, |x| (2.0 * PI * x[0]).sin() / (2.0 * PI))),
    }
}

fn run_plap(cfg: &RunConfig, mode: PlapMode, art: &mut Artifacts) -> Result<Outcome> {
    let pc = cfg.plap.as_ref().ok_or_else(|| missing("plap"))?;
    let grid = cfg.grid()?;
    let u = plap_field(cfg, &grid)?;
    let mut r = Report::new("plap", cfg);
    r.num("p", pc.p);
    r.num("c_p", pc.p - 1.0);
    match mode {
        PlapMode::Identity => {
            let ek = effective_kernel(&u, &pc.tau, pc.p)?;
            let mut st = rng::stream(cfg.seed, 0);
            let mut csv = String::from("x,y,lhs,rhs,residual,scale\n");
            let mut worst: f64 = 0.0;
            for _ in 0..cfg.tolerances.probes {
                let (x, y) = (rng::index(&mut st, grid.len()), rng::index(&mut st, grid.len()));
                let c = ek.identity_check(x, y)?;
                let rel = if c.scale > 0.0 { c.residual / c.scale } else { c.residual };
                worst = worst.max(rel);
                let _ = writeln!(csv, "{x},{y},{:.15e},{:.15e},{:.3e},{:.6e}", c.lhs, c.rhs, c.residual, c.scale);
            }
            art.write("identity.csv", &csv)?;
            r.line("probes", cfg.tolerances.probes);
            r.num("worst_relative", worst);
            art.write("report.txt", &r.0)?;
            Ok(Outcome::from(worst < 1e-9))
        }
        PlapMode::Certificate => {
            let cert = cone_certificate(&u, &pc.x0, &pc.tau, pc.p, CONE_FLOOR)?;
            let mut csv = String::from("h1,h2,h3,value,gradient_power\n");
            for s in &cert.samples {
                let _ = writeln!(csv, "{:.9},{:.9},{:.9},{:.12e},{:.12e}", s.dir[0], s.dir[1], s.dir[2], s.value, s.gradient_power);
            }
            art.write("samples.csv", &csv)?;
            let mut cont = String::from("scale,oscillation\n");
            for (l, o) in &cert.continuity.table {
                let _ = writeln!(cont, "{l:.6},{o:.12e}");
            }
            art.write("continuity.csv", &cont)?;
            r.num("eta_eff", cert.eta_eff);
            r.num("gradient_floor", cert.gradient_floor);
            r.line("gradient", format!("{:?}", &cert.gradient[..grid.dim()]));
            art.write("report.txt", &r.0)?;
            Ok(Outcome::from(cert.eta_eff > 0.0))
        }
        PlapMode::Bootstrap => {
            let f = plap_residual(&u, pc.p, pc.s)?;
            let rep = bootstrap_hoelder(&u, &f, pc)?;
            art.write("hoelder.csv", &rep.to_csv())?;
            let mut csv = String::from("tau,eta_eff,rate,iterations,plateau_error,hoelder,quotient,quotient_lipschitz\n");
            for t in &rep.taus {
                let _ = writeln!(
                    csv,
                    "{:.12e},{:.12e},{:.12e},{},{:.3e},{:.12e},{:.12e},{:.12e}",
                    t.tau, t.eta_eff, t.rate, t.iterations, t.plateau_error, t.hoelder, t.quotient, t.quotient_lipschitz
                );
            }
            art.write("taus.csv", &csv)?;
            r.num("linear_order", rep.linear_order);
            r.num("beta", rep.beta);
            r.num("drift", rep.quotient_drift(false));
            r.num("drift_lipschitz", rep.quotient_drift(true));
            art.write("report.txt", &r.0)?;
            Ok(Outcome::Pass)
        }
    }
}

fn suite_params(cfg: &RunConfig) -> SuiteParams {
    let d = SuiteParams::default();
    let v = &cfg.verify;
    SuiteParams {
        seed: cfg.seed,
        cacc_radius: v.radius.unwrap_or(d.cacc_radius),
        linfty_radius: v.radius.unwrap_or(d.linfty_radius),
        log_inner: v.inner.unwrap_or(d.log_inner),
        log_outer: v.outer.unwrap_or(d.log_outer),
        log_shift: v.shift.unwrap_or(d.log_shift),
        poincare_radius: v.radius.unwrap_or(d.poincare_radius),
        truncation: v.truncation.unwrap_or(d.truncation),
    }
}

fn verify_once(cfg: &RunConfig, kind: VerifyKind, k: &Kernel, grid: &TorusGrid) -> Result<InequalityReport> {
    let p = suite_params(cfg);
    if kind == VerifyKind::Coercivity {
        let probes: Vec<GridFunction> = match cfg.verify.inputs.as_slice() {
            [] => (0..8).map(|i| standard_field(grid, cfg.seed.wrapping_add(i))).collect(),
            paths => paths.iter().map(|q| input_field(cfg, grid, Some(q))).collect::<Result<_>>()?,
        };
        return verify_coercivity_form(k, &probes);
    }
    let pk = PairKernel::new(k, grid)?;
    let center = nearest_index(grid, &vec![0.0; grid.dim()]);
    let u = input_field(cfg, grid, cfg.verify.inputs.first())?;
    let lo = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let v = u.map(|c| c - lo + 0.1);
    match kind {
        VerifyKind::Caccioppoli => {
            let f = pk.manufactured(&v);
            let (cut, grad) = radial_cutoff(grid, center, 0.375 * p.cacc_radius, 0.75 * p.cacc_radius)?;
            verify_caccioppoli(k, &v, &f, center, p.cacc_radius, &cut, grad)
        }
        VerifyKind::Linfty => verify_linfty_bound(k, &u, &pk.manufactured(&u), center, p.linfty_radius),
        VerifyKind::Log => verify_log_lemma(k, &v, &pk.manufactured(&v), center, p.log_inner, p.log_outer, p.log_shift),
        VerifyKind::Poincare => {
            let b = ball(grid, center, p.poincare_radius);
            let a = b.iter().map(|&i| v.values[i]).fold(0.0, f64::max);
            let w = log_truncation(&v, a, p.log_shift, p.truncation)?;
            verify_poincare(k, &w, center, p.poincare_radius)
        }
        VerifyKind::Coercivity => unreachable!(),
    }
}

fn run_verify(cfg: &RunConfig, kind: VerifyKind, art: &mut Artifacts) -> Result<Outcome> {
    let k = kernel(cfg)?;
    let grid = cfg.grid()?;
    let rep = verify_once(cfg, kind, &k, &grid)?;
    art.write("report.txt", &rep.report())?;
    art.write("report.csv", &rep.to_csv())?;
    let mut pass = rep.pass;
    if !cfg.verify.sizes.is_empty() && kind != VerifyKind::Coercivity {
        let runs = suite_refinement(&k, &cfg.verify.sizes, &suite_params(cfg))?;
        let mut csv = String::from("name,size,implied_constant,drift,pass\n");
        for r in &runs {
            for (size, c) in r.sizes.iter().zip(&r.constants) {
                let _ = writeln!(csv, "{},{size},{c:.12e},{:.6e},{}", r.name, r.drift, r.pass);
            }
        }
        art.write("refinement.csv", &csv)?;
        pass &= runs.iter().find(|r| r.name == rep.name).is_none_or(|r| r.pass);
    }
    Ok(Outcome::from(pass))
}

fn run_norms(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let f = input_field(cfg, &grid, cfg.norms.field.as_ref())?;
    let order = cfg.norms.order.unwrap_or(0.5);
    let p = cfg.norms.p.unwrap_or(2.0);
    let mode = if grid.len() <= EXACT_LIMIT {
        GagliardoMode::Exact
    } else {
        GagliardoMode::MonteCarlo { samples: 400_000, seed: cfg.seed }
    };
    let g = gagliardo_estimate(&f, order, p, mode)?;
    let mut csv = String::from("quantity,value,rel_std_error\n");
    for (name, v) in [("l1", lp_norm(&f, 1.0)), ("l2", lp_norm(&f, 2.0)), ("linf", lp_norm(&f, f64::INFINITY))] {
        let _ = writeln!(csv, "{name},{v:.12e},0");
    }
    let _ = writeln!(csv, "gagliardo,{:.12e},{:.3e}", g.value, g.rel_std_error);
    let _ = writeln!(csv, "bessel,{:.12e},0", bessel_seminorm(&f.minus_mean(), order, p)?);
    art.write("norms.csv", &csv)?;
    Ok(Outcome::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        assert_eq!("verify log".parse::<Command>().unwrap(), Command::Verify(VerifyKind::Log));
        assert_eq!("plap  certificate".parse::<Command>().unwrap(), Command::Plap(PlapMode::Certificate));
        assert!("verify".parse::<Command>().is_err());
    }
}
