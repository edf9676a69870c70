//! Fractional p-Laplacian experiments on the unit torus: the discrete weak
//! form, shifted differences, the effective linear kernel obtained from the
//! fundamental theorem of calculus, its cone certificate, and a Hölder
//! bootstrap through the frozen-coefficient solver.

mod bootstrap;

pub use bootstrap::{bootstrap_hoelder, HoelderReport, HoelderRow, TauSummary, CONE_FLOOR, HOELDER_MARGIN};

use crate::error::{invalid, Error, Result};
use crate::kernels::{fibonacci_point, probes, Cone, ContinuityReport, Kernel};
use crate::symbolics::gauss_legendre;
use crate::torus_field::{dft, GridFunction, SpectralField, TorusGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Gauss–Legendre nodes of the `t`-integral.
pub const FTC_NODES: usize = 32;
/// Radius of the continuity probe ball around `x₀`.
pub const CONTINUITY_RADIUS: f64 = 1.0 / 16.0;
pub const CONTINUITY_SCALES: [f64; 4] = [0.125, 0.25, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlapConfig {
    pub p: f64,
    pub s: f64,
    pub tau: Vec<f64>,
    pub x0: Vec<f64>,
    pub radius: f64,
}

impl PlapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return invalid(format!("p = {} must be at least 2", self.p));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return invalid(format!("s = {} outside (0,1)", self.s));
        }
        if self.s * self.p - self.p + 2.0 <= 0.0 {
            return invalid(format!("s = {} must exceed (p-2)/p = {}", self.s, (self.p - 2.0) / self.p));
        }
        if self.tau.len() != self.x0.len() {
            return invalid("shift and base point dimensions differ");
        }
        let t = self.tau.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(t < self.radius) {
            return invalid(format!("|tau| = {t} must be below R = {}", self.radius));
        }
        Ok(())
    }

    /// `min(sp - p + 2, 1)`.
    pub fn alpha_eff(&self) -> f64 {
        (self.s * self.p - self.p + 2.0).min(1.0)
    }

    /// Order of the linear kernel: `|x-y|^{-n-sp} |x-y|^{p-2} = |x-y|^{-n-2σ}`.
    pub fn linear_order(&self) -> f64 {
        0.5 * (self.s * self.p - self.p + 2.0)
    }
}

/// `p - 1`, the constant for which the difference identity holds.
pub fn ftc_constant(p: f64) -> f64 {
    p - 1.0
}

fn signed_power(z: f64, p: f64) -> f64 {
    z.abs().powf(p - 2.0) * z
}

/// `∫₀¹ |t a + (1-t) b|^{p-2} dt`: antiderivative when `a` and `b` are apart,
/// Gauss–Legendre when they nearly agree.
pub fn ftc_integral(a: f64, b: f64, p: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let q = p - 2.0;
    if (a - b).abs() > 1e-3 * a.abs().max(b.abs()) {
        let prim = |z: f64| z.abs().powf(q + 1.0) * z.signum() / (q + 1.0);
        return (prim(a) - prim(b)) / (a - b);
    }
    let (gx, gw) = gauss_legendre(FTC_NODES);
    gx.iter()
        .zip(&gw)
        .map(|(x, w)| {
            let t = 0.5 * (x + 1.0);
            0.5 * w * (t * a + (1.0 - t) * b).abs().powf(q)
        })
        .sum()
}

/// `|b|^{p-2}b - |a|^{p-2}a` and `c_p ∫₀¹|ta + (1-t)b|^{p-2}dt (b - a)`.
pub fn scalar_identity(a: f64, b: f64, p: f64) -> (f64, f64) {
    (signed_power(b, p) - signed_power(a, p), ftc_constant(p) * ftc_integral(a, b, p) * (b - a))
}

fn grid_shift(grid: &TorusGrid, tau: &[f64]) -> Result<Vec<i64>> {
    if tau.len() != grid.dim() {
        return invalid("shift dimension differs from grid");
    }
    let n = grid.size() as f64;
    let mut out = Vec::with_capacity(tau.len());
    for &t in tau {
        let j = t * n;
        if (j - j.round()).abs() > 1e-9 * j.abs().max(1.0) {
            return Err(Error::OffGridShift { shift: tau.to_vec() });
        }
        out.push(j.round() as i64);
    }
    Ok(out)
}

/// `δ_τ f(x) = f(x + τ) - f(x)` with periodic wrap.
pub fn difference_quotient(f: &GridFunction, tau: &[f64]) -> Result<GridFunction> {
    let shift = grid_shift(&f.grid, tau)?;
    let g = f.shifted(&shift);
    f.zip(&g, |a, b| b - a)
}

/// Nearest-image weights `|o|^{-n-sp}` on the unit torus, zero at the origin.
pub fn plap_weights(grid: &TorusGrid, p: f64, s: f64) -> Vec<f64> {
    let n = grid.dim();
    let m = grid.size() as i64;
    let e = -(n as f64) - s * p;
    (0..grid.len())
        .map(|i| {
            let mi = grid.multi_index(i);
            let mut r2 = 0.0;
            for a in 0..n {
                let c = (mi[a] as i64 + m / 2).rem_euclid(m) - m / 2;
                let x = c as f64 / m as f64;
                r2 += x * x;
            }
            if r2 == 0.0 {
                0.0
            } else {
                r2.sqrt().powf(e)
            }
        })
        .collect()
}

fn offset_sum(grid: &TorusGrid, weights: &[f64], term: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let n = grid.dim();
    (1..grid.len())
        .into_par_iter()
        .map(|o| {
            let om = grid.multi_index(o);
            let mut acc = 0.0;
            for x in 0..grid.len() {
                let xm = grid.multi_index(x);
                let mut y = [0i64; 3];
                for a in 0..n {
                    y[a] = (xm[a] + om[a]) as i64;
                }
                acc += term(x, grid.wrapped_index(&y[..n]));
            }
            weights[o] * acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `h^{2n} Σ_x Σ_{o≠0} |o|^{-n-sp} |u(x)-u(x+o)|^{p-2}(u(x)-u(x+o))(φ(x)-φ(x+o))`.
pub fn plap_form(u: &GridFunction, phi: &GridFunction, p: f64, s: f64) -> Result<f64> {
    u.grid.check_same(&phi.grid)?;
    if !(p >= 2.0) {
        return invalid("p-Laplacian form needs p >= 2");
    }
    let g = u.grid;
    let w = plap_weights(&g, p, s);
    let vol = g.cell_volume();
    let total = offset_sum(&g, &w, |x, y| signed_power(u.values[x] - u.values[y], p) * (phi.values[x] - phi.values[y]));
    Ok(vol * vol * total)
}

/// Field `f` with `plap_form(u, φ) = Σ f φ hⁿ` for every `φ`.
pub fn plap_residual(u: &GridFunction, p: f64, s: f64) -> Result<GridFunction> {
    if !(p >= 2.0) {
        return invalid("p-Laplacian form needs p >= 2");
    }
    let g = u.grid;
    let n = g.dim();
    let w = plap_weights(&g, p, s);
    let vol = g.cell_volume();
    let values = (0..g.len())
        .into_par_iter()
        .map(|x| {
            let xm = g.multi_index(x);
            let mut acc = 0.0;
            for o in 1..g.len() {
                let om = g.multi_index(o);
                let mut y = [0i64; 3];
                for a in 0..n {
                    y[a] = (xm[a] + om[a]) as i64;
                }
                acc += w[o] * signed_power(u.values[x] - u.values[g.wrapped_index(&y[..n])], p);
            }
            2.0 * vol * acc
        })
        .collect();
    Ok(GridFunction { grid: g, values })
}

/// `K̃_τ(x, r, h) = r^{2-p} c_p ∫₀¹ |t(u(x) - u(x - rh)) + (1-t)(u(x+τ) - u(x+τ-rh))|^{p-2} dt`.
#[derive(Debug, Clone)]
pub struct EffectiveKernel {
    pub u: GridFunction,
    pub tau: Vec<f64>,
    pub p: f64,
    pub c_p: f64,
    spectrum: SpectralField,
}

pub fn effective_kernel(u: &GridFunction, tau: &[f64], p: f64) -> Result<EffectiveKernel> {
    if !(p >= 2.0 && p.is_finite()) {
        return invalid("effective kernel needs p >= 2");
    }
    grid_shift(&u.grid, tau)?;
    Ok(EffectiveKernel { u: u.clone(), tau: tau.to_vec(), p, c_p: ftc_constant(p), spectrum: dft(u) })
}

/// Both sides of the shifted-difference identity at one pair of grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
}

impl EffectiveKernel {
    pub fn dim(&self) -> usize {
        self.u.grid.dim()
    }

    /// `u(x)`, read from the grid when `x` is a grid point and interpolated otherwise.
    pub fn value(&self, x: &[f64]) -> f64 {
        let g = self.u.grid;
        let m = g.size() as f64;
        let mut idx = [0i64; 3];
        for a in 0..g.dim() {
            let j = (x[a] + 0.5) * m;
            let r = j.round();
            if (j - r).abs() > 1e-8 {
                return self.spectrum.eval_at(x);
            }
            idx[a] = r as i64;
        }
        self.u.values[g.wrapped_index(&idx[..g.dim()])]
    }

    /// Gradient of the trigonometric interpolant.
    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.spectrum.derivative_at(x, a);
        }
        out
    }

    fn shifted_point(&self, x: &[f64]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for a in 0..self.dim() {
            y[a] = x[a] + self.tau[a];
        }
        y
    }

    pub fn eval(&self, x: &[f64], r: f64, h: &[f64]) -> f64 {
        let n = self.dim();
        if self.p == 2.0 {
            return 1.0;
        }
        let xt = self.shifted_point(x);
        if r == 0.0 {
            let (g0, g1) = (self.gradient(x), self.gradient(&xt[..n]));
            let a: f64 = (0..n).map(|c| g0[c] * h[c]).sum();
            let b: f64 = (0..n).map(|c| g1[c] * h[c]).sum();
            return self.c_p * ftc_integral(a, b, self.p);
        }
        let mut y = [0.0; 3];
        let mut yt = [0.0; 3];
        for c in 0..n {
            y[c] = x[c] - r * h[c];
            yt[c] = xt[c] - r * h[c];
        }
        let a = self.value(x) - self.value(&y[..n]);
        let b = self.value(&xt[..n]) - self.value(&yt[..n]);
        r.powf(2.0 - self.p) * self.c_p * ftc_integral(a, b, self.p)
    }

    /// `δ_τ(|u(x)-u(y)|^{p-2}(u(x)-u(y)))` against `|x-y|^{p-2} K̃_τ(x, |x-y|, (x-y)/|x-y|)(δ_τu(x) - δ_τu(y))`.
    pub fn identity_check(&self, x: usize, y: usize) -> Result<IdentityResidual> {
        let g = self.u.grid;
        let n = g.dim();
        let shift = grid_shift(&g, &self.tau)?;
        let (xm, ym) = (g.multi_index(x), g.multi_index(y));
        let m = g.size() as i64;
        let mut xs = [0i64; 3];
        let mut ys = [0i64; 3];
        let mut d = [0.0; 3];
        for a in 0..n {
            xs[a] = xm[a] as i64 + shift[a];
            ys[a] = ym[a] as i64 + shift[a];
            d[a] = ((xm[a] as i64 - ym[a] as i64 + m / 2).rem_euclid(m) - m / 2) as f64 / m as f64;
        }
        let u = &self.u.values;
        let a = u[x] - u[y];
        let b = u[g.wrapped_index(&xs[..n])] - u[g.wrapped_index(&ys[..n])];
        let lhs = signed_power(b, self.p) - signed_power(a, self.p);
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if r == 0.0 {
            return Ok(IdentityResidual { lhs, rhs: 0.0, residual: lhs.abs(), scale: 0.0 });
        }
        let mut h = [0.0; 3];
        for c in 0..n {
            h[c] = d[c] / r;
        }
        let rhs = r.powf(self.p - 2.0) * self.eval(&g.point(x)[..n], r, &h[..n]) * (b - a);
        let scale = signed_power(a, self.p).abs() + signed_power(b, self.p).abs();
        Ok(IdentityResidual { lhs, rhs, residual: (lhs - rhs).abs(), scale })
    }

    /// `c_p (max |∇u|)^{p-2}` over the grid, a bound for `K̃_τ` at Lipschitz `u`.
    pub fn upper_estimate(&self) -> f64 {
        let g = self.u.grid;
        let n = g.dim();
        let lip = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let gr = self.gradient(&g.point(i)[..n]);
                (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt()
            })
            .reduce(|| 0.0, f64::max);
        self.c_p * lip.powf(self.p - 2.0)
    }

    /// The kernel as a [`Kernel`] of order `s` with direction set `cone` and lower bound `eta`.
    pub fn to_kernel(&self, s: f64, cone: Cone, eta: f64) -> Result<Kernel> {
        let upper = self.upper_estimate().max(eta);
        let me = Arc::new(self.clone());
        Kernel::from_fn("effective", self.dim(), s, upper, eta, cone, move |x, r, h| me.eval(x, r, h))
    }
}

/// Direction sample of the certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSample {
    pub dir: [f64; 3],
    pub value: f64,
    /// `|∇u(x₀)·h|^{p-2}`.
    pub gradient_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeCertificate {
    pub cone: Cone,
    pub gradient: [f64; 3],
    pub gradient_floor: f64,
    pub eta_eff: f64,
    pub samples: Vec<DirectionSample>,
    pub continuity: ContinuityReport,
}

fn cap_directions(cone: &Cone, n: usize) -> Vec<[f64; 3]> {
    match n {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => {
            let mut out = Vec::new();
            for (lo, hi) in cone.arcs() {
                for i in 0..=256 {
                    let t = lo + (hi - lo) * i as f64 / 256.0;
                    out.push([t.cos(), t.sin(), 0.0]);
                }
            }
            out
        }
        _ => {
            let mut out: Vec<[f64; 3]> = (0..20_000).map(|i| fibonacci_point(i, 20_000)).filter(|p| cone.contains(p)).collect();
            for c in cone.caps() {
                out.push(c.axis);
            }
            out
        }
    }
}

/// Cap around `∇u(x₀)` where `|⟨h, v⟩| ≥ σ`, the sampled infimum of `K̃_τ(x₀, 0, ·)` on it,
/// and the oscillation of `K̃_τ` near `x₀`.
pub fn cone_certificate(u: &GridFunction, x0: &[f64], tau: &[f64], p: f64, sigma_angle: f64) -> Result<ConeCertificate> {
    let k = effective_kernel(u, tau, p)?;
    let n = k.dim();
    if x0.len() != n {
        return invalid("base point dimension differs from field");
    }
    if !(sigma_angle > 0.0 && sigma_angle < 1.0) {
        return invalid("inner-product floor must lie in (0,1)");
    }
    let g = u.grid;
    let gmax = (0..g.len())
        .map(|i| {
            let gr = k.gradient(&g.point(i)[..n]);
            (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt()
        })
        .fold(0.0, f64::max);
    let gradient = k.gradient(x0);
    let mag = (gradient[0] * gradient[0] + gradient[1] * gradient[1] + gradient[2] * gradient[2]).sqrt();
    let floor = 1e-3 * gmax;
    if !(mag > floor) {
        return Err(Error::DegenerateGradient { magnitude: mag, floor });
    }
    let cone = Cone::cap(n, &gradient[..n], sigma_angle.acos(), true)?;
    let samples: Vec<DirectionSample> = cap_directions(&cone, n)
        .into_iter()
        .map(|d| {
            let dot: f64 = (0..n).map(|a| gradient[a] * d[a]).sum();
            DirectionSample { dir: d, value: k.eval(x0, 0.0, &d[..n]), gradient_power: dot.abs().powf(p - 2.0) }
        })
        .collect();
    let eta_eff = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let count = 256;
    let mut table = Vec::new();
    let mut running: f64 = 0.0;
    for &lam in &CONTINUITY_SCALES {
        let rr = lam * CONTINUITY_RADIUS;
        for i in 0..count {
            let pr = probes::probe(i, n);
            let mut x = [0.0; 3];
            for a in 0..n {
                x[a] = x0[a] + rr * pr.offset[a];
            }
            let h = &pr.dir[..n];
            running = running.max((k.eval(&x[..n], rr * pr.radius, h) - k.eval(x0, 0.0, h)).abs());
        }
        table.push((lam, running));
    }
    let continuity = ContinuityReport { x0: x0.to_vec(), radius: CONTINUITY_RADIUS, probes: count, table };
    Ok(ConeCertificate { cone, gradient, gradient_floor: floor, eta_eff, samples, continuity })
}
