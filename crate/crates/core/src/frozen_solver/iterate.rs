use super::forms::{FormTerms, FrozenForms, Source};
use crate::const_solver::{seminorm, solve_const, spectral_residual};
use crate::error::{Error, Result};
use crate::torus_field::{GridFunction, RegularityOrders};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rho_max: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-8, max_iter: 60, rho_max: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// `[v_k]` per step.
    pub seminorms: Vec<f64>,
    /// `[v_k - v_{k-1}]` per step.
    pub increments: Vec<f64>,
    /// `[w_k] / [w_{k-1}]` from the second step on.
    pub rates: Vec<f64>,
    /// Spectral residual of the last solve.
    pub residual: f64,
    /// Order and exponent of the increment seminorm.
    pub order: f64,
    pub exponent: f64,
}

impl IterationTrace {
    pub fn asymptotic_rate(&self) -> Option<f64> {
        self.rates.last().copied()
    }

    /// `k,increment,rate` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,seminorm,increment,rate\n");
        for (k, (v, w)) in self.seminorms.iter().zip(&self.increments).enumerate() {
            let rate = if k == 0 { String::new() } else { format!("{:.12e}", self.rates[k - 1]) };
            out.push_str(&format!("{},{:.12e},{:.12e},{}\n", k + 1, v, w, rate));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    /// Limit on the period cell, mean zero.
    pub v: GridFunction,
    pub trace: IterationTrace,
    pub terms: FormTerms,
    /// `max |v + mean(ηu) - u|` over the plateau.
    pub plateau_error: f64,
}

/// `2s - t̃` with `t̃` the midpoint of its admissible interval when unset.
pub fn increment_order(orders: &RegularityOrders) -> f64 {
    let s = orders.s;
    let tt = orders.t_tilde.unwrap_or_else(|| 0.5 * ((2.0 * s - 1.0).max(0.0) + 2.0 * s - orders.t));
    2.0 * s - tt
}

/// `v_{k+1}` solves the frozen torus problem with right side `g[ηψ̃] + 𝓗(v_k, ψ) + 𝓖(u, ψ)`, from `v₀ = 0`.
pub fn fixed_point_solve(
    forms: &FrozenForms,
    u: &GridFunction,
    source: &Source,
    orders: &RegularityOrders,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult> {
    orders.validate()?;
    let terms = forms.terms(u, source)?;
    let fixed = terms.total();
    let order = increment_order(orders);
    let exponent = orders.q_conj();
    let semi = |f: &GridFunction| seminorm(f, order, exponent);
    let single = forms.deviation_vanishes();
    let mut trace = IterationTrace { order, exponent, ..Default::default() };
    let mut v = GridFunction::zeros(forms.loc.cell);
    let mut rhs = fixed.clone();
    let mut high = 0usize;
    for k in 0..opts.max_iter {
        if k > 0 {
            let h = forms.h_representer(&v);
            rhs = fixed.zip(&h, |a, b| a + b)?;
        }
        let next = solve_const(&forms.symbol, &rhs)?.u;
        let w = next.zip(&v, |a, b| a - b)?;
        let wn = semi(&w)?;
        let vn = semi(&next)?;
        if let Some(&prev) = trace.increments.last() {
            let rate = if prev > 0.0 { wn / prev } else { 0.0 };
            trace.rates.push(rate);
            high = if rate >= 1.0 { high + 1 } else { 0 };
        }
        trace.seminorms.push(vn);
        trace.increments.push(wn);
        v = next;
        if single || wn == 0.0 {
            break;
        }
        let recent = trace.rates.len().min(3);
        let small = trace.rates[trace.rates.len() - recent..].iter().all(|&r| r <= opts.rho_max);
        if wn < opts.tol * (1.0 + vn) && recent > 0 && small {
            break;
        }
        if high >= 3 {
            return Err(Error::NoContraction { rates: trace.rates.clone() });
        }
        if k + 1 == opts.max_iter {
            return Err(Error::MaxIter { iterations: opts.max_iter, increment: wn });
        }
    }
    trace.residual = spectral_residual(&forms.symbol, &v, &rhs)?;
    let plateau_error = plateau_error(forms, u, &v);
    Ok(FixedPointResult { v, trace, terms, plateau_error })
}

fn plateau_error(forms: &FrozenForms, u: &GridFunction, v: &GridFunction) -> f64 {
    let eta_u = forms.localized(u);
    let mean = eta_u.mean();
    let mut worst: f64 = 0.0;
    for (x, c) in forms.loc.in_cell.iter().enumerate() {
        if let Some(c) = c {
            if forms.loc.eta[x] == 1.0 {
                worst = worst.max((v.values[*c] + mean - u.values[x]).abs());
            }
        }
    }
    worst
}
