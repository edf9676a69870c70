//! Discrete checks of the coercivity, Caccioppoli, local boundedness,
//! logarithmic and Poincaré inequalities for general bounded kernels on the
//! unit torus. Balls are wrapped balls; every report carries both sides, the
//! implied constant and a digest of its inputs.

use crate::error::{invalid, Error, Result};
use crate::frozen_solver::smooth_step;
use crate::kernels::Kernel;
use crate::rng;
use crate::torus_field::{GridFunction, TorusGrid};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Relative slack of the weak subsolution test.
pub const SUBSOLUTION_TOL: f64 = 1e-9;
/// Largest relative change of an implied constant under one refinement.
pub const REFINEMENT_DRIFT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    /// Right side without its constant.
    pub rhs: f64,
    pub terms: Vec<(String, f64)>,
    pub implied_constant: f64,
    pub pass: bool,
    pub digest: String,
}

impl InequalityReport {
    fn new(name: &str, lhs: f64, terms: Vec<(String, f64)>, digest: String) -> Self {
        let rhs: f64 = terms.iter().map(|t| t.1).sum();
        let implied_constant = if lhs == 0.0 {
            0.0
        } else if rhs > 0.0 {
            lhs / rhs
        } else {
            f64::INFINITY
        };
        let pass = lhs >= 0.0 && rhs.is_finite() && rhs >= 0.0 && implied_constant.is_finite();
        InequalityReport { name: name.to_string(), lhs, rhs, terms, implied_constant, pass, digest }
    }

    /// Structured text report.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[{}]", self.name);
        let _ = writeln!(out, "pass = {}", self.pass);
        let _ = writeln!(out, "lhs = {:.12e}", self.lhs);
        let _ = writeln!(out, "rhs = {:.12e}", self.rhs);
        for (k, v) in &self.terms {
            let _ = writeln!(out, "rhs.{k} = {v:.12e}");
        }
        let _ = writeln!(out, "implied_constant = {:.12e}", self.implied_constant);
        let _ = writeln!(out, "digest = \"{}\"", self.digest);
        out
    }

    /// `lhs,rhs,<terms>,implied_constant` header and row.
    pub fn to_csv(&self) -> String {
        let mut head = String::from("name,lhs,rhs");
        let mut row = format!("{},{:.12e},{:.12e}", self.name, self.lhs, self.rhs);
        for (k, v) in &self.terms {
            head.push(',');
            head.push_str(k);
            let _ = write!(row, ",{v:.12e}");
        }
        format!("{head},implied_constant\n{row},{:.12e}\n", self.implied_constant)
    }
}

fn digest(parts: &[&[f64]], tag: &str) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    for p in parts {
        for v in *p {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Symmetrized pair weights `K(x,y) |x-y|^{-n-2s}` on the unit torus, nearest image.
#[derive(Debug, Clone)]
pub struct PairKernel {
    pub kernel: Kernel,
    pub grid: TorusGrid,
}

impl PairKernel {
    pub fn new(kernel: &Kernel, grid: &TorusGrid) -> Result<Self> {
        if kernel.dim != grid.dim() {
            return Err(Error::GridMismatch("kernel and grid dimensions differ".into()));
        }
        Ok(PairKernel { kernel: kernel.clone(), grid: *grid })
    }

    fn s(&self) -> f64 {
        self.kernel.s
    }

    fn distance(&self, x: usize, y: usize) -> ([f64; 3], f64) {
        let d = self.grid.displacement(y, x);
        (d, (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
    }

    /// `|x-y|^{-n-2s}`.
    pub fn flat(&self, x: usize, y: usize) -> f64 {
        self.distance(x, y).1.powf(-(self.grid.dim() as f64) - 2.0 * self.s())
    }

    /// `½(K(x,r,θ) + K(y,r,-θ)) r^{-n-2s}` with `θ = (x-y)/r`.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let n = self.grid.dim();
        let (d, r) = self.distance(x, y);
        let mut th = [0.0; 3];
        let mut mth = [0.0; 3];
        for a in 0..n {
            th[a] = d[a] / r;
            mth[a] = -th[a];
        }
        let (px, py) = (self.grid.point(x), self.grid.point(y));
        let k = 0.5 * (self.kernel.eval(&px[..n], r, &th[..n]) + self.kernel.eval(&py[..n], r, &mth[..n]));
        k * r.powf(-(n as f64) - 2.0 * self.s())
    }

    fn pair_sum(&self, xs: &[usize], ys: &[usize], term: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
        let vol = self.grid.cell_volume();
        let parts: Vec<f64> = xs.par_iter().map(|&x| ys.iter().filter(|&&y| y != x).map(|&y| term(x, y)).sum::<f64>()).collect();
        vol * vol * parts.iter().sum::<f64>()
    }

    fn all(&self) -> Vec<usize> {
        (0..self.grid.len()).collect()
    }

    /// `𝓛_K u[φ] = Σ_{x≠y} W (u(y)-u(x))(φ(y)-φ(x)) h^{2n}`.
    pub fn apply(&self, u: &GridFunction, phi: &GridFunction) -> f64 {
        let all = self.all();
        self.pair_sum(&all, &all, |x, y| self.weight(x, y) * (u.values[y] - u.values[x]) * (phi.values[y] - phi.values[x]))
    }

    /// `[φ]²_{H^s_K}`.
    pub fn energy(&self, phi: &GridFunction) -> f64 {
        self.apply(phi, phi)
    }

    /// `[φ]²_{H^s}` with the flat kernel.
    pub fn flat_energy(&self, phi: &GridFunction) -> f64 {
        let all = self.all();
        self.pair_sum(&all, &all, |x, y| self.flat(x, y) * (phi.values[y] - phi.values[x]).powi(2))
    }

    /// Field `f` with `𝓛_K u[φ] = Σ f φ hⁿ` for every `φ`.
    pub fn manufactured(&self, u: &GridFunction) -> GridFunction {
        let vol = self.grid.cell_volume();
        let len = self.grid.len();
        let values = (0..len)
            .into_par_iter()
            .map(|x| vol * (0..len).filter(|&y| y != x).map(|y| 2.0 * self.weight(x, y) * (u.values[x] - u.values[y])).sum::<f64>())
            .collect();
        GridFunction { grid: self.grid, values }
    }

    /// `hⁿ Σ_{|y-c| ≥ ρ} g(y) |y - c|^{-n-2s}` with `g = |u|` or `u₋`.
    fn tail(&self, u: &GridFunction, center: usize, rho: f64, negative: bool) -> f64 {
        let vol = self.grid.cell_volume();
        (0..self.grid.len())
            .filter(|&y| self.distance(center, y).1 >= rho)
            .map(|y| {
                let v = if negative { (-u.values[y]).max(0.0) } else { u.values[y].abs() };
                v * self.flat(center, y)
            })
            .sum::<f64>()
            * vol
    }
}

/// Grid points of the wrapped ball `B(center, r)`.
pub fn ball(grid: &TorusGrid, center: usize, r: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&y| {
            let d = grid.displacement(center, y);
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < r
        })
        .collect()
}

/// Grid index of the point nearest `x`.
pub fn nearest_index(grid: &TorusGrid, x: &[f64]) -> usize {
    let m = grid.size() as f64;
    let idx: Vec<i64> = x.iter().map(|&c| ((c + 0.5) * m).round() as i64).collect();
    grid.wrapped_index(&idx)
}

fn norm_on(f: &GridFunction, set: &[usize], p: f64) -> f64 {
    let vol = f.grid.cell_volume();
    if p.is_infinite() {
        return set.iter().map(|&i| f.values[i].abs()).fold(0.0, f64::max);
    }
    (vol * set.iter().map(|&i| f.values[i].abs().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `φ(x) = 1 - step((|x-c| - inner)/(outer - inner))` with a bound on `|∇φ|`.
pub fn radial_cutoff(grid: &TorusGrid, center: usize, inner: f64, outer: f64) -> Result<(GridFunction, f64)> {
    if !(inner >= 0.0 && outer > inner) {
        return invalid("cutoff radii must satisfy 0 <= inner < outer");
    }
    let w = outer - inner;
    let values = (0..grid.len())
        .map(|y| {
            let d = grid.displacement(center, y);
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            1.0 - smooth_step((r - inner) / w)
        })
        .collect();
    let slope = (1..4000)
        .map(|i| {
            let t = i as f64 / 4000.0;
            let e = 1e-6;
            (smooth_step(t + e) - smooth_step(t - e)) / (2.0 * e)
        })
        .fold(0.0, f64::max);
    Ok((GridFunction { grid: *grid, values }, 1.001 * slope / w))
}

/// Largest `[φ]²_{H^s} / [φ]²_{H^s_K}` over the probes.
pub fn verify_coercivity_form(k: &Kernel, probes: &[GridFunction]) -> Result<InequalityReport> {
    let grid = probes.first().map(|p| p.grid).ok_or_else(|| Error::InvalidInput("no probes".into()))?;
    let pk = PairKernel::new(k, &grid)?;
    let mut best = (0.0, 0.0, 0.0);
    for p in probes {
        grid.check_same(&p.grid)?;
        let (a, b) = (pk.flat_energy(p), pk.energy(p));
        let ratio = if a == 0.0 { 0.0 } else { a / b };
        if ratio > best.0 || best.1 == 0.0 {
            best = (ratio, a, b);
        }
    }
    let values: Vec<&[f64]> = probes.iter().map(|p| p.values.as_slice()).collect();
    Ok(InequalityReport::new("coercivity", best.1, vec![("energy_k".into(), best.2)], digest(&values, "coercivity")))
}

/// Weak check `𝓛_K v[φ] ≤ ∫ f φ` on nonnegative probes; returns the worst defect.
pub fn subsolution_defect(pk: &PairKernel, v: &GridFunction, f: &GridFunction, probes: &[GridFunction]) -> Result<()> {
    for (i, p) in probes.iter().enumerate() {
        if p.values.iter().any(|&c| c < 0.0) {
            return invalid("subsolution probes must be nonnegative");
        }
        let l = pk.apply(v, p);
        let r = f.inner(p)?;
        let defect = l - r;
        if defect > SUBSOLUTION_TOL * (l.abs() + r.abs() + f64::MIN_POSITIVE) {
            return Err(Error::NotSubsolution { defect, probe: i });
        }
    }
    Ok(())
}

fn bump_probes(grid: &TorusGrid, center: usize, radius: f64) -> Result<Vec<GridFunction>> {
    let mut out = vec![radial_cutoff(grid, center, 0.0, radius)?.0];
    let n = grid.dim();
    for j in 0..2 * n {
        let mut off = [0.0; 3];
        off[j / 2] = if j % 2 == 0 { 0.5 * radius } else { -0.5 * radius };
        let c = grid.point(center);
        let mut p = [0.0; 3];
        for a in 0..n {
            p[a] = c[a] + off[a];
        }
        let idx = nearest_index(grid, &p[..n]);
        out.push(radial_cutoff(grid, idx, 0.0, 0.5 * radius)?.0);
    }
    Ok(out)
}

/// Caccioppoli inequality for a nonnegative subsolution `v` on `B(c, R)` with cutoff `φ`;
/// the tail is the largest `Σ_{y∉B_R} |v(y)||x-y|^{-n-2s}` over `x ∈ supp φ`.
pub fn verify_caccioppoli(
    k: &Kernel,
    v: &GridFunction,
    f: &GridFunction,
    center: usize,
    radius: f64,
    cutoff: &GridFunction,
    grad_bound: f64,
) -> Result<InequalityReport> {
    let grid = v.grid;
    grid.check_same(&f.grid)?;
    grid.check_same(&cutoff.grid)?;
    let pk = PairKernel::new(k, &grid)?;
    let b = ball(&grid, center, radius);
    if b.iter().any(|&i| v.values[i] < 0.0) {
        return invalid("Caccioppoli needs v >= 0 on the ball");
    }
    if (0..grid.len()).any(|i| cutoff.values[i] != 0.0 && !b.contains(&i)) {
        return invalid("cutoff must vanish outside the ball");
    }
    let mut probes = bump_probes(&grid, center, radius)?;
    probes.push(v.zip(cutoff, |a, c| a.max(0.0) * c * c)?);
    subsolution_defect(&pk, v, f, &probes)?;
    let pv = v.zip(cutoff, |a, c| a * c)?;
    let lhs = 0.5 * pk.flat_energy(&pv);
    let s = k.s;
    let t1 = grad_bound * grad_bound * radius.powf(2.0 - 2.0 * s) * norm_on(v, &b, 2.0).powi(2);
    let outside: Vec<usize> = (0..grid.len()).filter(|i| b.binary_search(i).is_err()).collect();
    let support: Vec<usize> = b.iter().copied().filter(|&i| cutoff.values[i] != 0.0).collect();
    let vol = grid.cell_volume();
    let tails: Vec<f64> =
        support.par_iter().map(|&x| vol * outside.iter().map(|&y| v.values[y].abs() * pk.flat(x, y)).sum::<f64>()).collect();
    let tail = tails.into_iter().fold(0.0, f64::max);
    let t2 = norm_on(cutoff, &b, f64::INFINITY) * (tail + norm_on(f, &b, f64::INFINITY)) * norm_on(&pv, &b, 1.0);
    Ok(InequalityReport::new(
        "caccioppoli",
        lhs,
        vec![("gradient".into(), t1), ("tail".into(), t2)],
        digest(&[&v.values, &f.values, &cutoff.values, &[radius, grad_bound]], "caccioppoli"),
    ))
}

/// `sup_{B_r}|u| ≤ C(r^{-n/2}‖u‖_{L²(B_{2r})} + r^{2s} tail + r^{2s}‖f‖_{L^∞(B_{2r})})`.
pub fn verify_linfty_bound(k: &Kernel, u: &GridFunction, f: &GridFunction, center: usize, r: f64) -> Result<InequalityReport> {
    let grid = u.grid;
    grid.check_same(&f.grid)?;
    let pk = PairKernel::new(k, &grid)?;
    let n = grid.dim() as f64;
    let s = k.s;
    let (b1, b2) = (ball(&grid, center, r), ball(&grid, center, 2.0 * r));
    let lhs = norm_on(u, &b1, f64::INFINITY);
    let terms = vec![
        ("l2".to_string(), r.powf(-n / 2.0) * norm_on(u, &b2, 2.0)),
        ("tail".to_string(), r.powf(2.0 * s) * pk.tail(u, center, r / 2.0, false)),
        ("source".to_string(), r.powf(2.0 * s) * norm_on(f, &b2, f64::INFINITY)),
    ];
    Ok(InequalityReport::new("linfty", lhs, terms, digest(&[&u.values, &f.values, &[r]], "linfty")))
}

/// Logarithmic lemma on `B_r` for `u ≥ 0` on `B(R)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_log_lemma(
    k: &Kernel,
    u: &GridFunction,
    f: &GridFunction,
    center: usize,
    r: f64,
    big_r: f64,
    d: f64,
) -> Result<InequalityReport> {
    let grid = u.grid;
    grid.check_same(&f.grid)?;
    if !(d > 0.0) || !(r > 0.0 && r < big_r / 2.0) {
        return invalid("log lemma needs d > 0 and 0 < r < R/2");
    }
    let pk = PairKernel::new(k, &grid)?;
    let bb = ball(&grid, center, big_r);
    if bb.iter().any(|&i| u.values[i] < 0.0) {
        return invalid("log lemma needs u >= 0 on B(R)");
    }
    let probes = bump_probes(&grid, center, big_r)?;
    subsolution_defect(&pk, u, f, &probes)?;
    let b = ball(&grid, center, r);
    let lhs = pk.pair_sum(&b, &b, |x, y| pk.weight(x, y) * ((u.values[x] + d) / (u.values[y] + d)).ln().powi(2));
    let n = grid.dim() as f64;
    let s = k.s;
    let pre = r.powf(n - 2.0 * s);
    let terms = vec![
        ("tail".to_string(), pre * (r / big_r).powf(2.0 * s) / d * pk.tail(u, center, big_r / 2.0, true)),
        ("source".to_string(), pre * r.powf(2.0 * s) / d * norm_on(f, &b, f64::INFINITY)),
        ("unit".to_string(), pre),
    ];
    Ok(InequalityReport::new("log", lhs, terms, digest(&[&u.values, &f.values, &[r, big_r, d]], "log")))
}

/// `w = min((log(a+d) - log(u+d))₊, log b)`.
pub fn log_truncation(u: &GridFunction, a: f64, d: f64, b: f64) -> Result<GridFunction> {
    if !(b > 1.0) {
        return Err(Error::BadTruncation { b });
    }
    if !(a > 0.0 && d > 0.0) {
        return invalid("log truncation needs a, d > 0");
    }
    let top = (a + d).ln();
    Ok(u.map(|v| (top - (v + d).max(f64::MIN_POSITIVE).ln()).max(0.0).min(b.ln())))
}

/// `∫_{B_r}|w - (w)_{B_r}|² ≤ C r^{2s-n} Σ_{B_r×B_r} (w(x)-w(y))² K`.
pub fn verify_poincare(k: &Kernel, w: &GridFunction, center: usize, r: f64) -> Result<InequalityReport> {
    let grid = w.grid;
    let pk = PairKernel::new(k, &grid)?;
    let b = ball(&grid, center, r);
    if b.is_empty() {
        return invalid("ball contains no grid points");
    }
    let mean = b.iter().map(|&i| w.values[i]).sum::<f64>() / b.len() as f64;
    let lhs = grid.cell_volume() * b.iter().map(|&i| (w.values[i] - mean).powi(2)).sum::<f64>();
    let n = grid.dim() as f64;
    let e = pk.pair_sum(&b, &b, |x, y| pk.weight(x, y) * (w.values[x] - w.values[y]).powi(2));
    let terms = vec![("energy".to_string(), r.powf(2.0 * k.s - n) * e)];
    Ok(InequalityReport::new("poincare", lhs, terms, digest(&[&w.values, &[r]], "poincare")))
}

/// Bandlimited field with seeded coefficients on modes `|k|_∞ ≤ 2`, identical in continuum across grids.
pub fn standard_field(grid: &TorusGrid, seed: u64) -> GridFunction {
    let n = grid.dim();
    let mut modes = Vec::new();
    let r = 2i64;
    for a in -r..=r {
        for b in if n > 1 { -r..=r } else { 0..=0 } {
            for c in if n > 2 { -r..=r } else { 0..=0 } {
                let k = [a, b, c];
                let first = k.iter().find(|&&v| v != 0);
                if matches!(first, Some(&v) if v > 0) {
                    modes.push(k);
                }
            }
        }
    }
    let coeffs: Vec<(f64, f64)> = modes
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut st = rng::stream(seed, i as u64);
            (rng::normal(&mut st), rng::normal(&mut st))
        })
        .collect();
    GridFunction::from_fn(*grid, |x| {
        modes
            .iter()
            .zip(&coeffs)
            .map(|(k, (a, b))| {
                let ph = 2.0 * PI * (0..n).map(|i| k[i] as f64 * x[i]).sum::<f64>();
                let w = 1.0 / (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                w * (a * ph.cos() + b * ph.sin())
            })
            .sum()
    })
}

/// Radii and parameters of the standard suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteParams {
    pub seed: u64,
    pub cacc_radius: f64,
    pub linfty_radius: f64,
    pub log_inner: f64,
    pub log_outer: f64,
    pub log_shift: f64,
    pub poincare_radius: f64,
    pub truncation: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 11,
            cacc_radius: 0.3,
            linfty_radius: 0.125,
            log_inner: 0.15,
            log_outer: 0.4,
            log_shift: 0.5,
            poincare_radius: 0.2,
            truncation: 10.0,
        }
    }
}

/// Caccioppoli, local L∞, logarithmic and Poincaré reports on the manufactured standard solution.
pub fn standard_suite(k: &Kernel, grid: &TorusGrid, params: &SuiteParams) -> Result<Vec<InequalityReport>> {
    let pk = PairKernel::new(k, grid)?;
    let n = grid.dim();
    let center = nearest_index(grid, &vec![0.0; n]);
    let u = standard_field(grid, params.seed);
    let f = pk.manufactured(&u);
    let lo = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let v = u.map(|c| c - lo + 0.1);
    let (cut, grad) = radial_cutoff(grid, center, 0.375 * params.cacc_radius, 0.75 * params.cacc_radius)?;
    let cacc = verify_caccioppoli(k, &v, &f, center, params.cacc_radius, &cut, grad)?;
    let linf = verify_linfty_bound(k, &u, &f, center, params.linfty_radius)?;
    let log = verify_log_lemma(k, &v, &f, center, params.log_inner, params.log_outer, params.log_shift)?;
    let b = ball(grid, center, params.poincare_radius);
    let a = b.iter().map(|&i| v.values[i]).fold(0.0, f64::max);
    let w = log_truncation(&v, a, params.log_shift, params.truncation)?;
    let poin = verify_poincare(k, &w, center, params.poincare_radius)?;
    Ok(vec![cacc, linf, log, poin])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedReport {
    pub name: String,
    pub sizes: Vec<usize>,
    pub constants: Vec<f64>,
    pub drift: f64,
    pub pass: bool,
}

/// Standard suite on each grid size with the drift of every implied constant.
pub fn suite_refinement(k: &Kernel, sizes: &[usize], params: &SuiteParams) -> Result<Vec<RefinedReport>> {
    let mut runs = Vec::new();
    for &size in sizes {
        runs.push(standard_suite(k, &TorusGrid::new(k.dim, size)?, params)?);
    }
    let count = runs.first().map_or(0, |r| r.len());
    Ok((0..count)
        .map(|i| {
            let constants: Vec<f64> = runs.iter().map(|r| r[i].implied_constant).collect();
            let drift = constants
                .windows(2)
                .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let pass = runs.iter().all(|r| r[i].pass) && drift < REFINEMENT_DRIFT;
            RefinedReport { name: runs[0][i].name.clone(), sizes: sizes.to_vec(), constants, drift, pass }
        })
        .collect())
}
