use super::periodize::PeriodizedKernel;
use super::quadrature::{composite, piecewise, RadialProfile};
use crate::error::{invalid, Error, Result};
use crate::torus_field::fft::fft_nd;
use crate::torus_field::TorusGrid;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Relative quadrature error targeted per mode.
pub const SYMBOL_TARGET: f64 = 1e-6;

/// Fourier multiplier `m(k)` over the frequency lattice of a grid, in FFT order.
///
/// Modes outside the computed range hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub grid: TorusGrid,
    pub s: f64,
    pub kmax: usize,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

fn graded_breaks(center: f64, levels: usize, out: &mut Vec<f64>) {
    out.push(center);
    let mut d = 0.25;
    for _ in 0..levels {
        out.push(center - d);
        out.push(center + d);
        d *= 0.25;
    }
}

/// `∫_{S^{n-1}} K(θ) |ω·θ|^{2s} dθ` for a unit vector ω, at refinement level `level`.
fn directional_moment(mu: &PeriodizedKernel, omega: &[f64; 3], level: usize) -> f64 {
    let n = mu.dim;
    let e = 2.0 * mu.s;
    let scale = 1usize << level;
    match n {
        1 => mu.direction(&[1.0]) + mu.direction(&[-1.0]),
        2 => {
            let phi = omega[1].atan2(omega[0]);
            let mut b = Vec::new();
            for z in [phi + 0.5 * PI, phi + 1.5 * PI] {
                graded_breaks(z.rem_euclid(2.0 * PI), 12 + 2 * level, &mut b);
            }
            b.extend(mu.breaks.iter().copied());
            let mut b: Vec<f64> = b.into_iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
            b.push(0.0);
            let (x, w) = piecewise(0.0, 2.0 * PI, &b, (16 * scale) as f64 / (2.0 * PI), 12);
            x.iter()
                .zip(&w)
                .map(|(t, wt)| {
                    let th = [t.cos(), t.sin()];
                    let c = (th[0] * omega[0] + th[1] * omega[1]).abs();
                    wt * mu.direction(&th) * c.powf(e)
                })
                .sum()
        }
        _ => {
            let (e1, e2) = frame(omega);
            let mut b = Vec::new();
            graded_breaks(0.5 * PI, 12 + 2 * level, &mut b);
            let (psi, pw) = piecewise(0.0, PI, &b, (8 * scale) as f64 / PI, 12);
            let (phi, fw) = composite(0.0, 2.0 * PI, 8 * scale, 12);
            let mut total = 0.0;
            for (p, wp) in psi.iter().zip(&pw) {
                let (sp, cp) = p.sin_cos();
                let radial = cp.abs().powf(e) * sp;
                let mut ring = 0.0;
                for (f, wf) in phi.iter().zip(&fw) {
                    let (sf, cf) = f.sin_cos();
                    let mut th = [0.0; 3];
                    for a in 0..3 {
                        th[a] = cp * omega[a] + sp * (cf * e1[a] + sf * e2[a]);
                    }
                    ring += wf * mu.direction(&th);
                }
                total += wp * radial * ring;
            }
            total
        }
    }
}

fn frame(w: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let pick = if w[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = pick[0] * w[0] + pick[1] * w[1] + pick[2] * w[2];
    let mut e1 = [pick[0] - d * w[0], pick[1] - d * w[1], pick[2] - d * w[2]];
    let nn = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for c in e1.iter_mut() {
        *c /= nn;
    }
    let e2 = [w[1] * e1[2] - w[2] * e1[1], w[2] * e1[0] - w[0] * e1[2], w[0] * e1[1] - w[1] * e1[0]];
    (e1, e2)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive representative of the line through `k`, identifying `k` with `-k`.
fn primitive(k: &[i64; 3]) -> [i64; 3] {
    let g = gcd(gcd(k[0], k[1]), k[2]).max(1);
    let mut p = [k[0] / g, k[1] / g, k[2] / g];
    let first = p.iter().copied().find(|&c| c != 0).unwrap_or(0);
    if first < 0 {
        for c in p.iter_mut() {
            *c = -*c;
        }
    }
    p
}

/// Symbol of `μ` on the modes `|k|_∞ <= kmax`.
///
/// Since `1 - cos(2π k·h)` is lattice periodic, the cell integral against `μ`
/// folds into the whole-space integral, which in polar form is
/// `J(∞) (2π|k|)^{2s} ∫ K(θ) |k̂·θ|^{2s} dθ` with the radial factor from the
/// graded profile. The angular integral is taken twice, the second time on a
/// refined mesh, and their difference is the reported error.
pub fn compute_symbol(mu: &PeriodizedKernel, grid: &TorusGrid, kmax: usize) -> Result<Symbol> {
    if grid.dim() != mu.dim {
        return Err(Error::GridMismatch(format!("kernel dimension {} vs grid dimension {}", mu.dim, grid.dim())));
    }
    if kmax > grid.size() / 2 {
        return invalid(format!("kmax {kmax} exceeds N/2 = {}", grid.size() / 2));
    }
    let profile = RadialProfile::shared(mu.s);
    let jinf = profile.limit();
    let n = mu.dim;
    let mut lines: Vec<[i64; 3]> = (0..grid.len())
        .filter_map(|idx| {
            let k = grid.frequency(idx);
            let inf = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
            (inf > 0 && inf as usize <= kmax).then(|| primitive(&k))
        })
        .collect();
    lines.sort();
    lines.dedup();
    let moments: Vec<(f64, f64)> = lines
        .par_iter()
        .map(|p| {
            let norm = p.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            let mut w = [0.0; 3];
            for a in 0..n {
                w[a] = p[a] as f64 / norm;
            }
            let coarse = directional_moment(mu, &w, 0);
            let fine = directional_moment(mu, &w, 1);
            (fine, (fine - coarse).abs())
        })
        .collect();
    let table: HashMap<[i64; 3], (f64, f64)> = lines.into_iter().zip(moments).collect();
    let mut values = vec![f64::NAN; grid.len()];
    let mut errors = vec![f64::NAN; grid.len()];
    for idx in 0..grid.len() {
        let k = grid.frequency(idx);
        let inf = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as usize;
        if inf == 0 {
            values[idx] = 0.0;
            errors[idx] = 0.0;
            continue;
        }
        if inf > kmax {
            continue;
        }
        let (mom, err) = table[&primitive(&k)];
        let knorm = k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let factor = jinf * (2.0 * PI * knorm).powf(2.0 * mu.s);
        let value = factor * mom;
        let error = factor * err;
        if error > 10.0 * SYMBOL_TARGET * value.abs() {
            return Err(Error::QuadratureNotConverged { mode: k[..n].to_vec(), error, value });
        }
        values[idx] = value;
        errors[idx] = error;
    }
    Ok(Symbol { grid: *grid, s: mu.s, kmax, values, errors })
}

impl Symbol {
    /// Symbol of the grid quadrature of the form:
    /// `m_N(k) = h^n Σ_{o≠0} μ(o) (1 - cos 2π k·o)` over grid offsets `o`.
    pub fn discrete(mu: &PeriodizedKernel, grid: &TorusGrid) -> Result<Symbol> {
        if grid.dim() != mu.dim {
            return Err(Error::GridMismatch(format!("kernel dimension {} vs grid dimension {}", mu.dim, grid.dim())));
        }
        let weights = mu.grid_weights(grid);
        Ok(Self::from_weights(grid, mu.s, &weights))
    }

    /// Discrete symbol of arbitrary even offset weights (origin entry ignored).
    pub fn from_weights(grid: &TorusGrid, s: f64, weights: &[f64]) -> Symbol {
        let vol = grid.cell_volume();
        let mut buf: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        buf[0] = Complex64::new(0.0, 0.0);
        let total: f64 = weights[1..].iter().sum();
        fft_nd(grid, &mut buf, false);
        let values: Vec<f64> = buf.iter().map(|c| vol * (total - c.re)).collect();
        let mut values = values;
        values[0] = 0.0;
        Symbol { grid: *grid, s, kmax: grid.size() / 2, errors: vec![0.0; grid.len()], values }
    }

    pub fn value(&self, k: &[i64]) -> f64 {
        self.values[self.grid.frequency_index(k)]
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Modes `0 < |k|_∞ <= kmax` in lexicographic order, as `(k, m, err)`.
    pub fn modes(&self) -> Vec<([i64; 3], f64, f64)> {
        let mut out: Vec<([i64; 3], f64, f64)> = (0..self.grid.len())
            .filter_map(|idx| {
                let k = self.grid.frequency(idx);
                let inf = k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as usize;
                (inf > 0 && inf <= self.kmax && self.values[idx].is_finite()).then_some((k, self.values[idx], self.errors[idx]))
            })
            .collect();
        out.sort_by_key(|a| a.0);
        out
    }

    /// CSV with columns `k1[,k2,k3],m,k_pow,ratio,quadrature_error`.
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim();
        let mut out = String::new();
        for a in 0..n {
            let _ = write!(out, "k{},", a + 1);
        }
        out.push_str("m,k_pow,ratio,quadrature_error\n");
        for (k, m, err) in self.modes() {
            let kp = k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt().powf(2.0 * self.s);
            for c in &k[..n] {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{m:.12e},{kp:.12e},{:.12e},{err:.3e}", m / kp);
        }
        out
    }
}
