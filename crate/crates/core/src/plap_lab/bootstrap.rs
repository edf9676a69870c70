use super::{cone_certificate, difference_quotient, effective_kernel, PlapConfig};
use crate::const_solver::seminorm;
use crate::error::{invalid, Result};
use crate::frozen_solver::{
    assemble_forms, build_localization, fixed_point_solve, ladder, BootstrapTarget, Domain, FixedPointOptions, Source, PLATEAU,
};
use crate::torus_field::{GridFunction, RegularityOrders};
use rayon::prelude::*;

/// Hölder margin `ε` below `α_eff`.
pub const HOELDER_MARGIN: f64 = 0.05;
/// Inner-product floor of the certificate cone.
pub const CONE_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct HoelderRow {
    pub tau: f64,
    pub rung: usize,
    pub order: f64,
    pub exponent: f64,
    pub norm: f64,
    /// `norm / |τ|^s`.
    pub quotient: f64,
    /// `norm / |τ|`.
    pub quotient_lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSummary {
    pub tau: f64,
    pub eta_eff: f64,
    pub rate: f64,
    pub iterations: usize,
    pub plateau_error: f64,
    /// Discrete `[δ_τ u]_{C^β}` on the plateau ball.
    pub hoelder: f64,
    pub quotient: f64,
    pub quotient_lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoelderReport {
    pub config: PlapConfig,
    pub linear_order: f64,
    pub beta: f64,
    pub rows: Vec<HoelderRow>,
    pub taus: Vec<TauSummary>,
}

impl HoelderReport {
    /// `tau,rung,order,exponent,norm,quotient,quotient_lipschitz` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,rung,order,exponent,norm,quotient,quotient_lipschitz\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.12e},{},{:.6},{:.6},{:.12e},{:.12e},{:.12e}\n",
                r.tau, r.rung, r.order, r.exponent, r.norm, r.quotient, r.quotient_lipschitz
            ));
        }
        out
    }

    /// Largest relative change of the Hölder quotient (divided by `|τ|^γ`) between consecutive shifts.
    pub fn quotient_drift(&self, lipschitz: bool) -> f64 {
        self.taus
            .windows(2)
            .map(|w| {
                let (a, b) = if lipschitz { (w[0].quotient_lipschitz, w[1].quotient_lipschitz) } else { (w[0].quotient, w[1].quotient) };
                (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

fn plateau_hoelder(values: &[(usize, [f64; 3], f64)], beta: f64) -> f64 {
    let mut best: f64 = 0.0;
    for (i, (_, x, a)) in values.iter().enumerate() {
        for (_, y, b) in &values[i + 1..] {
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
            best = best.max((a - b).abs() / d.powf(beta));
        }
    }
    best
}

/// Shifts `τ, τ/2, τ/4` that stay on the grid.
fn tau_sweep(cfg: &PlapConfig, size: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for j in 0..3 {
        let t: Vec<f64> = cfg.tau.iter().map(|c| c / f64::from(1u32 << j)).collect();
        let on_grid = t.iter().all(|c| {
            let v = c * size as f64;
            (v - v.round()).abs() < 1e-9
        });
        if !on_grid || t.iter().all(|&c| c == 0.0) {
            break;
        }
        out.push(t);
    }
    out
}

/// Frozen solves of the shifted equation with kernel `K̃_τ` over a shift sweep,
/// with rung seminorms and Hölder quotients of `δ_τ u` near `x₀`.
pub fn bootstrap_hoelder(u: &GridFunction, f_rhs: &GridFunction, cfg: &PlapConfig) -> Result<HoelderReport> {
    cfg.validate()?;
    u.grid.check_same(&f_rhs.grid)?;
    let n = u.grid.dim();
    if cfg.x0.len() != n {
        return invalid("base point dimension differs from field");
    }
    let domain = Domain::new(n, u.grid.size(), 1.0, true)?;
    let sigma = cfg.linear_order();
    let orders = RegularityOrders::new(sigma, sigma, 2.0)?;
    let cap = (2.0 * sigma).min(1.0);
    let steps = ladder(&orders, &BootstrapTarget { order: 0.5 * (sigma + cap), exponent: 4.0 }, n, false)?;
    let beta = (cfg.alpha_eff() - HOELDER_MARGIN).max(HOELDER_MARGIN);
    let taus = tau_sweep(cfg, u.grid.size());
    if taus.is_empty() {
        return invalid("shift is not a nonzero multiple of the grid spacing");
    }
    let loc = build_localization(&domain, &cfg.x0, cfg.radius)?;
    let per_tau: Vec<Result<(Vec<HoelderRow>, TauSummary)>> = taus
        .par_iter()
        .map(|tau| {
            let tn = tau.iter().map(|c| c * c).sum::<f64>().sqrt();
            let ek = effective_kernel(u, tau, cfg.p)?;
            let cert = cone_certificate(u, &cfg.x0, tau, cfg.p, CONE_FLOOR)?;
            let kernel = ek.to_kernel(sigma, cert.cone.clone(), cert.eta_eff)?;
            let w = difference_quotient(u, tau)?;
            let ft = difference_quotient(f_rhs, tau)?;
            let forms = assemble_forms(&kernel, &loc, sigma)?;
            let res = fixed_point_solve(&forms, &w, &Source::Field(ft), &orders, &FixedPointOptions::default())?;
            let mut rows = Vec::with_capacity(steps.len());
            for (rung, &(order, exponent)) in steps.iter().enumerate() {
                let norm = seminorm(&res.v, order, exponent)?;
                rows.push(HoelderRow {
                    tau: tn,
                    rung,
                    order,
                    exponent,
                    norm,
                    quotient: norm / tn.powf(cfg.s),
                    quotient_lipschitz: norm / tn,
                });
            }
            let mean = forms.localized(&w).mean();
            let plateau: Vec<(usize, [f64; 3], f64)> = (0..loc.offsets.len())
                .filter(|&x| loc.normalized_radius(x) <= PLATEAU)
                .map(|x| (x, domain.point(x), res.v.values[loc.in_cell[x].unwrap()] + mean))
                .collect();
            let hoelder = plateau_hoelder(&plateau, beta);
            Ok((
                rows,
                TauSummary {
                    tau: tn,
                    eta_eff: cert.eta_eff,
                    rate: res.trace.asymptotic_rate().unwrap_or(0.0),
                    iterations: res.trace.increments.len(),
                    plateau_error: res.plateau_error,
                    hoelder,
                    quotient: hoelder / tn.powf(cfg.s),
                    quotient_lipschitz: hoelder / tn,
                },
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for r in per_tau {
        let (rw, sm) = r?;
        rows.extend(rw);
        summaries.push(sm);
    }
    Ok(HoelderReport { config: cfg.clone(), linear_order: sigma, beta, rows, taus: summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plap_lab::plap_residual;
    use crate::torus_field::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn manufactured_sine_is_bounded_and_stable() {
        let g = TorusGrid::new(1, 512).unwrap();
        let u = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).sin() / (2.0 * PI) + 0.02 * (6.0 * PI * x[0]).cos());
        let f = plap_residual(&u, 3.0, 0.8).unwrap();
        let cfg = PlapConfig { p: 3.0, s: 0.8, tau: vec![4.0 / 512.0], x0: vec![0.0], radius: 1.0 / 120.0 };
        let rep = bootstrap_hoelder(&u, &f, &cfg).unwrap();
        assert_eq!(rep.taus.len(), 3);
        for t in &rep.taus {
            assert!(t.plateau_error < 1e-8 * (1.0 + t.hoelder), "{t:?}");
            assert!(t.rate < 1.0);
        }
        assert!(rep.rows.iter().all(|r| r.norm.is_finite()));
        assert!(rep.quotient_drift(true) < 0.2, "{:?}", rep.taus);
    }
}
