//! Constant-coefficient solution operator on the torus by Fourier division,
//! differentiation of the equation, and measured regularity estimates.

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::symbolics::{compute_symbol, PeriodizedKernel, Symbol};
use crate::torus_field::{
    dft, frac_laplacian, gagliardo_estimate, gagliardo_multiplier, idft, lp_norm, dual_norm_bound, GagliardoMode,
    GridFunction, RegularityOrders, TorusGrid, EXACT_LIMIT,
};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

/// Relative size below which a symbol value counts as vanishing.
pub const SINGULAR_SLACK: f64 = 1e-12;

/// `B(u, φ) = ∬ μ(x-y)(u(x)-u(y))(φ(x)-φ(y)) = Σ_k 2 m(k) û(k) conj(φ̂(k))`.
#[derive(Debug, Clone)]
pub struct WeakForm {
    pub symbol: Symbol,
}

fn check_complete(sym: &Symbol) -> Result<()> {
    for idx in 0..sym.grid.len() {
        if !sym.values[idx].is_finite() {
            return Err(Error::IncompleteSymbol { mode: sym.grid.frequency(idx)[..sym.grid.dim()].to_vec() });
        }
    }
    Ok(())
}

impl WeakForm {
    pub fn new(symbol: Symbol) -> Result<Self> {
        check_complete(&symbol)?;
        Ok(WeakForm { symbol })
    }

    pub fn apply(&self, u: &GridFunction, phi: &GridFunction) -> Result<f64> {
        self.symbol.grid.check_same(&u.grid)?;
        self.symbol.grid.check_same(&phi.grid)?;
        let (a, b) = (dft(u), dft(phi));
        Ok(a.coeffs.iter().zip(&b.coeffs).zip(&self.symbol.values).map(|((x, y), m)| 2.0 * m * (x * y.conj()).re).sum())
    }
}

/// Grid quadrature `h^{2n} Σ_x Σ_o w(o)(u(x)-u(x+o))(φ(x)-φ(x+o))` with offset weights `w`.
pub fn quadrature_form(weights: &[f64], u: &GridFunction, phi: &GridFunction) -> Result<f64> {
    u.grid.check_same(&phi.grid)?;
    let g = u.grid;
    if weights.len() != g.len() {
        return Err(Error::GridMismatch("weight table size differs from grid".into()));
    }
    let n = g.dim();
    let vol = g.cell_volume();
    let total: f64 = (1..g.len())
        .into_par_iter()
        .map(|o| {
            let om = g.multi_index(o);
            let mut acc = 0.0;
            for x in 0..g.len() {
                let xm = g.multi_index(x);
                let mut y = [0i64; 3];
                for a in 0..n {
                    y[a] = (xm[a] + om[a]) as i64;
                }
                let yi = g.wrapped_index(&y[..n]);
                acc += (u.values[x] - u.values[yi]) * (phi.values[x] - phi.values[yi]);
            }
            weights[o] * acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(vol * vol * total)
}

/// Solution of the weak form with its removed right-hand-side mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstSolution {
    pub u: GridFunction,
    pub removed_mean: f64,
}

/// `û(k) = ĝ(k) / (2 m(k))` for `k ≠ 0`, `û(0) = 0`.
pub fn solve_const(sym: &Symbol, g: &GridFunction) -> Result<ConstSolution> {
    sym.grid.check_same(&g.grid)?;
    check_complete(sym)?;
    let scale = sym.values.iter().cloned().fold(1.0, f64::max);
    let mut spec = dft(g);
    let removed_mean = spec.coeffs[0].re;
    for (idx, c) in spec.coeffs.iter_mut().enumerate() {
        if idx == 0 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let m = sym.values[idx];
        if m <= SINGULAR_SLACK * scale {
            return Err(Error::SingularSymbol { mode: sym.grid.frequency(idx)[..sym.grid.dim()].to_vec() });
        }
        *c /= 2.0 * m;
    }
    Ok(ConstSolution { u: idft(&spec), removed_mean })
}

/// Sup over exponential test modes of `|B(u, e_k) - g[e_k]| / B(e_k, e_k)^{1/2}`.
pub fn spectral_residual(sym: &Symbol, u: &GridFunction, g: &GridFunction) -> Result<f64> {
    sym.grid.check_same(&u.grid)?;
    let (a, b) = (dft(u), dft(g));
    let mut worst: f64 = 0.0;
    for idx in 1..sym.grid.len() {
        let m = sym.values[idx];
        if m > 0.0 {
            worst = worst.max((2.0 * m * a.coeffs[idx] - b.coeffs[idx]).norm() / (2.0 * m).sqrt());
        }
    }
    Ok(worst)
}

/// `v = Δ^{σ/2} u` and the differentiated right side `g' = Δ^{σ/2} g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentiatedEquation {
    pub v: GridFunction,
    pub g: GridFunction,
}

pub fn differentiate_equation(u: &GridFunction, g: &GridFunction, sigma: f64, s: f64) -> Result<DifferentiatedEquation> {
    if !(sigma > -2.0 * s && sigma < 2.0 - 2.0 * s) {
        return invalid(format!("differentiation order {sigma} outside ({}, {})", -2.0 * s, 2.0 - 2.0 * s));
    }
    if sigma == 0.0 {
        return Ok(DifferentiatedEquation { v: u.clone(), g: g.clone() });
    }
    Ok(DifferentiatedEquation { v: frac_laplacian(u, sigma)?, g: frac_laplacian(g, sigma)? })
}

/// Gagliardo seminorm, exact on small grids and sampled above the exact limit.
pub fn seminorm(f: &GridFunction, order: f64, p: f64) -> Result<f64> {
    let mode = if f.grid.len() <= EXACT_LIMIT {
        GagliardoMode::Exact
    } else {
        GagliardoMode::MonteCarlo { samples: 400_000, seed: 0x51ab }
    };
    Ok(gagliardo_estimate(f, order, p, mode)?.value)
}

/// `[u]²_{W^{s,2}} / B(u, u)`.
pub fn energy_ratio(sym: &Symbol, u: &GridFunction) -> Result<f64> {
    let form = WeakForm::new(sym.clone())?.apply(u, u)?;
    let c = gagliardo_multiplier(&u.grid, sym.s);
    let semi: f64 = dft(u).coeffs.iter().zip(&c).map(|(z, w)| z.norm_sqr() * w).sum();
    if form <= 0.0 {
        return Ok(if semi == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(semi / form)
}

/// `‖u‖_{H^{2s}} = (‖u‖²_{L²} + ‖Δ^{s} u‖²_{L²})^{1/2}`.
pub fn h2s_norm(u: &GridFunction, s: f64) -> Result<f64> {
    let a = lp_norm(u, 2.0);
    let b = lp_norm(&frac_laplacian(u, 2.0 * s)?, 2.0);
    Ok((a * a + b * b).sqrt())
}

/// Largest `‖Tg‖_{H^{2s}} / ‖g‖_{L²}` over the given right sides.
pub fn h2s_constant(sym: &Symbol, rhs: &[GridFunction]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in rhs {
        let g0 = g.minus_mean();
        let gn = lp_norm(&g0, 2.0);
        if gn == 0.0 {
            continue;
        }
        let u = solve_const(sym, &g0)?.u;
        worst = worst.max(h2s_norm(&u, sym.s)? / gn);
    }
    Ok(worst)
}

/// Deterministic family of right sides, identical in continuum across grid sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsFamily {
    pub random: usize,
    pub band: i64,
    /// Coefficient decay `(1+|k|²)^{-decay/2}`.
    pub decay: f64,
    pub modes: Vec<Vec<i64>>,
    pub seed: u64,
}

impl Default for RhsFamily {
    fn default() -> Self {
        RhsFamily { random: 16, band: 6, decay: 0.0, modes: vec![vec![1], vec![2], vec![4], vec![-3]], seed: 7 }
    }
}

impl RhsFamily {
    pub fn for_dim(dim: usize) -> Self {
        let mut f = RhsFamily::default();
        f.modes = f
            .modes
            .iter()
            .map(|k| {
                let mut v = vec![0; dim];
                v[0] = k[0];
                if dim > 1 {
                    v[1] = 1;
                }
                v
            })
            .collect();
        f
    }

    pub fn len(&self) -> usize {
        self.random + self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn build(&self, grid: &TorusGrid) -> Result<Vec<GridFunction>> {
        let n = grid.dim();
        if self.band as usize >= grid.size() / 2 {
            return invalid(format!("rhs band {} needs N > {}", self.band, 2 * self.band));
        }
        let tau = 2.0 * std::f64::consts::PI;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.random {
            let mut r = rng::stream(self.seed, i as u64);
            let mut spec = dft(&GridFunction::zeros(*grid));
            let b = self.band;
            let ks: Vec<[i64; 3]> = cube(n, b).into_iter().filter(half_lattice).collect();
            for k in ks {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                let amp = (1.0 + k2).powf(-self.decay / 2.0);
                let c = Complex64::new(rng::normal(&mut r), rng::normal(&mut r)) * amp;
                let idx = grid.frequency_index(&k[..n]);
                spec.coeffs[idx] = c;
                let neg: Vec<i64> = k[..n].iter().map(|v| -v).collect();
                spec.coeffs[grid.frequency_index(&neg)] = c.conj();
            }
            out.push(idft(&spec));
        }
        for k in &self.modes {
            if k.len() != n {
                return invalid("rhs mode dimension differs from grid");
            }
            out.push(GridFunction::from_fn(*grid, |x| (tau * (0..n).map(|a| k[a] as f64 * x[a]).sum::<f64>()).cos()));
        }
        Ok(out)
    }
}

fn cube(n: usize, b: i64) -> Vec<[i64; 3]> {
    let mut v = Vec::new();
    let r = |a: usize| if a < n { -b..=b } else { 0..=0 };
    for i in r(0) {
        for j in r(1) {
            for l in r(2) {
                v.push([i, j, l]);
            }
        }
    }
    v
}

fn half_lattice(k: &[i64; 3]) -> bool {
    matches!(k.iter().find(|&&c| c != 0), Some(&c) if c > 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub order: f64,
    pub exponent: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub residual: f64,
    pub ladder: Vec<LadderEntry>,
    /// Largest `[u]_{W^{s1,p}} / (Λ_g + ‖u‖_{L²})` over the family.
    pub constant: f64,
    pub ratios: Vec<f64>,
    /// Dual-norm bounds `Λ_g` of the normalized right sides.
    pub dual_bounds: Vec<f64>,
    pub worst: usize,
}

/// Number of dual probes used to normalize right sides.
pub const DUAL_PROBES: usize = 48;

/// Solves for each right side, normalized to unit dual bound in `(W^{s2,p'})^*`,
/// and records `[u]_{W^{s1,p}} / (Λ_g + ‖u‖_{L²})`.
pub fn measure_estimate(sym: &Symbol, orders: &RegularityOrders, rhs: &[GridFunction]) -> Result<SolveReport> {
    orders.validate()?;
    let p = orders.p;
    let mut ratios = Vec::with_capacity(rhs.len());
    let mut duals = Vec::with_capacity(rhs.len());
    let mut residual: f64 = 0.0;
    let mut sols = Vec::with_capacity(rhs.len());
    for g in rhs {
        let g0 = g.minus_mean();
        let lam = dual_norm_bound(&g0, orders.s2, p, DUAL_PROBES)?;
        if lam == 0.0 || g0.max_abs() == 0.0 {
            ratios.push(0.0);
            duals.push(0.0);
            sols.push(GridFunction::zeros(g.grid));
            continue;
        }
        let gn = g0.scale(1.0 / lam);
        let u = solve_const(sym, &gn)?.u;
        residual = residual.max(spectral_residual(sym, &u, &gn)?);
        let semi = seminorm(&u, orders.s1, p)?;
        ratios.push(semi / (1.0 + lp_norm(&u, 2.0)));
        duals.push(1.0);
        sols.push(u);
    }
    let worst = (0..ratios.len()).max_by(|&a, &b| ratios[a].total_cmp(&ratios[b])).unwrap_or(0);
    let constant = ratios.get(worst).copied().unwrap_or(0.0);
    let mut ladder = Vec::new();
    if let Some(u) = sols.get(worst) {
        for &(order, exponent) in &[(orders.s, 2.0), (orders.s, p), (0.5 * (orders.s + orders.s1), p), (orders.s1, p)] {
            ladder.push(LadderEntry { order, exponent, value: seminorm(u, order, exponent)? });
        }
    }
    Ok(SolveReport { residual, ladder, constant, ratios, dual_bounds: duals, worst })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub sizes: Vec<usize>,
    pub constants: Vec<f64>,
    /// `|C_last - C_first| / C_first`.
    pub drift: f64,
}

/// `measure_estimate` on each grid size with the symbol recomputed per grid.
pub fn estimate_refinement(
    mu: &PeriodizedKernel,
    orders: &RegularityOrders,
    family: &RhsFamily,
    sizes: &[usize],
) -> Result<RefinementReport> {
    let mut constants = Vec::new();
    for &size in sizes {
        let grid = TorusGrid::new(mu.dim, size)?;
        let sym = compute_symbol(mu, &grid, size / 2)?;
        let rhs = family.build(&grid)?;
        constants.push(measure_estimate(&sym, orders, &rhs)?.constant);
    }
    let drift = match (constants.first(), constants.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => (b - a).abs() / a,
        _ => 0.0,
    };
    Ok(RefinementReport { sizes: sizes.to_vec(), constants, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::constant_kernel;
    use crate::symbolics::periodize;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (Symbol, TorusGrid) {
        let k = constant_kernel(1.0, 0.5, 1).unwrap();
        let mu = periodize(&k, &[0.0], 0.5, 64).unwrap();
        let grid = TorusGrid::new(1, n).unwrap();
        (compute_symbol(&mu, &grid, n / 2).unwrap(), grid)
    }

    #[test]
    fn single_mode_solution() {
        let (sym, grid) = setup(32);
        let g = GridFunction::from_fn(grid, |x| (2.0 * PI * x[0]).cos());
        let u = solve_const(&sym, &g).unwrap().u;
        for (i, v) in u.values.iter().enumerate() {
            let x = grid.point(i)[0];
            assert!((v - (2.0 * PI * x).cos() / (4.0 * PI * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_and_mean_removal() {
        let (sym, grid) = setup(16);
        let sol = solve_const(&sym, &GridFunction::constant(grid, 2.5)).unwrap();
        assert!(sol.u.max_abs() < 1e-14);
        assert!((sol.removed_mean - 2.5).abs() < 1e-14);
    }

    #[test]
    fn differentiation_round_trip() {
        let (sym, grid) = setup(32);
        let g = GridFunction::from_fn(grid, |x| (2.0 * PI * x[0]).cos() + (6.0 * PI * x[0]).sin());
        let u = solve_const(&sym, &g).unwrap().u;
        let d = differentiate_equation(&u, &g, 0.5, 0.5).unwrap();
        assert!(spectral_residual(&sym, &d.v, &d.g).unwrap() < 1e-12);
        let back = differentiate_equation(&d.v, &d.g, -0.5, 0.5).unwrap();
        let diff = back.v.zip(&u, |a, b| a - b).unwrap();
        assert!(diff.max_abs() < 1e-14);
        assert!(differentiate_equation(&u, &g, 1.2, 0.5).is_err());
    }

    #[test]
    fn incomplete_symbol_rejected() {
        let k = constant_kernel(1.0, 0.5, 1).unwrap();
        let mu = periodize(&k, &[0.0], 0.5, 8).unwrap();
        let grid = TorusGrid::new(1, 16).unwrap();
        let sym = compute_symbol(&mu, &grid, 4).unwrap();
        let g = GridFunction::zeros(grid);
        assert!(matches!(solve_const(&sym, &g), Err(Error::IncompleteSymbol { .. })));
    }
}
