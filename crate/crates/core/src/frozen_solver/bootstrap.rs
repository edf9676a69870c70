use super::forms::{assemble_forms, Source};
use super::iterate::{fixed_point_solve, FixedPointOptions, FixedPointResult};
use super::{build_localization, Domain};
use crate::const_solver::{differentiate_equation, seminorm};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::torus_field::{GridFunction, RegularityOrders};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapTarget {
    pub order: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub order: f64,
    pub exponent: f64,
    /// Largest measured seminorm over the cover balls.
    pub value: f64,
    pub differentiated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub centers: Vec<Vec<f64>>,
    pub rungs: Vec<Rung>,
    /// Iterations and last contraction rate per ball.
    pub iterations: Vec<usize>,
    pub rates: Vec<f64>,
    pub plateau_error: f64,
}

impl LadderReport {
    /// `rung,order,exponent,value,differentiated` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rung,order,exponent,value,differentiated\n");
        for (i, r) in self.rungs.iter().enumerate() {
            out.push_str(&format!("{},{:.6},{:.6},{:.12e},{}\n", i, r.order, r.exponent, r.value, r.differentiated));
        }
        out
    }
}

/// Grid points on a lattice of spacing about `5R` inside `[-extent, extent]^n`.
pub fn cover_centers(domain: &Domain, radius: f64, extent: f64) -> Vec<Vec<f64>> {
    let h = domain.spacing();
    let step = ((5.0 * radius / h).round().max(1.0)) as i64;
    let reach = (extent / h).floor() as i64;
    let count = reach / step;
    let axis: Vec<f64> = (-count..=count).map(|j| (j * step) as f64 * h).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..domain.dim {
        out = out.into_iter().flat_map(|p| axis.iter().map(move |&c| [p.clone(), vec![c]].concat())).collect();
    }
    out
}

/// Orders and exponents from `(s1, p)` to the target.
pub fn ladder(orders: &RegularityOrders, target: &BootstrapTarget, dim: usize, hoelder: bool) -> Result<Vec<(f64, f64)>> {
    let cap = if hoelder { 2.0 * orders.s } else { (2.0 * orders.s).min(1.0) };
    if target.order >= cap || target.exponent < orders.p {
        return Err(Error::LadderStalled { order: target.order, exponent: target.exponent });
    }
    let n = dim as f64;
    let (mut t, mut p) = (orders.s1, orders.p);
    let mut out = vec![(t, p)];
    while t < target.order && out.len() < 64 {
        let next = target.order.min(0.5 * (t + cap));
        let dt = next - t;
        p = if dt * p >= n { target.exponent } else { target.exponent.min(p * n / (n - dt * p)) };
        t = next;
        if target.order - t < 1e-12 {
            t = target.order;
            p = target.exponent;
        }
        out.push((t, p));
    }
    if t < target.order {
        return Err(Error::LadderStalled { order: t, exponent: p });
    }
    Ok(out)
}

fn measure(res: &FixedPointResult, order: f64, exponent: f64, s: f64) -> Result<(f64, bool)> {
    if order < 1.0 {
        return Ok((seminorm(&res.v, order, exponent)?, false));
    }
    let rhs = res.terms.total();
    let d = differentiate_equation(&res.v, &rhs, order - s, s)?;
    Ok((seminorm(&d.v, s, exponent)?, true))
}

/// Frozen solves on a ball cover, then the seminorm ladder on every ball.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_regularity(
    k: &Kernel,
    domain: &Domain,
    u: &GridFunction,
    source: &Source,
    orders: &RegularityOrders,
    target: &BootstrapTarget,
    radius: f64,
    centers: &[Vec<f64>],
    opts: &FixedPointOptions,
) -> Result<LadderReport> {
    let steps = ladder(orders, target, domain.dim, k.hoelder.is_some())?;
    let solved: Vec<Result<FixedPointResult>> = centers
        .par_iter()
        .map(|c| {
            let loc = build_localization(domain, c, radius)?;
            let forms = assemble_forms(k, &loc, orders.s)?;
            fixed_point_solve(&forms, u, source, orders, opts)
        })
        .collect();
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rungs = Vec::with_capacity(steps.len());
    for &(order, exponent) in &steps {
        let mut value: f64 = 0.0;
        let mut differentiated = false;
        for res in &solved {
            let (v, d) = measure(res, order, exponent, orders.s)?;
            value = value.max(v);
            differentiated = d;
        }
        rungs.push(Rung { order, exponent, value, differentiated });
    }
    Ok(LadderReport {
        centers: centers.to_vec(),
        rungs,
        iterations: solved.iter().map(|r| r.trace.increments.len()).collect(),
        rates: solved.iter().map(|r| r.trace.asymptotic_rate().unwrap_or(0.0)).collect(),
        plateau_error: solved.iter().map(|r| r.plateau_error).fold(0.0, f64::max),
    })
}
