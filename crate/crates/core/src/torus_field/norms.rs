use super::fft::{dft, fft_nd, frac_laplacian};
use super::{conjugate, GridFunction, TorusGrid};
use crate::error::{invalid, Error, Result};
use crate::rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

/// Largest point count for which the quadratic double sum is evaluated exactly.
pub const EXACT_LIMIT: usize = 1 << 14;
pub const DUAL_PROBE_SEED: u64 = 0x5eed_d0a1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Wrapped,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GagliardoMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GagliardoReport {
    pub value: f64,
    pub rel_std_error: f64,
    pub variance_warning: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub wrapped: f64,
    pub cube: f64,
    pub differ: bool,
}

#[inline]
pub(crate) fn powp(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let s: f64 = f.values.iter().map(|v| powp(v.abs(), p)).sum();
    (s * f.grid.cell_volume()).powf(1.0 / p)
}

pub fn bessel_seminorm(f: &GridFunction, order: f64, p: f64) -> Result<f64> {
    Ok(lp_norm(&frac_laplacian(f, order)?, p))
}

fn wrapped_offset_distance(grid: &TorusGrid, o: &[usize; 3]) -> f64 {
    let n = grid.size();
    let h = grid.spacing();
    let mut d2 = 0.0;
    for &c in o.iter().take(grid.dim()) {
        let w = c.min(n - c) as f64 * h;
        d2 += w * w;
    }
    d2.sqrt()
}

/// `Σ_x |f(x+o) - f(x)|^p` for one lattice offset.
fn offset_sum(f: &GridFunction, o: &[usize; 3], p: f64) -> f64 {
    let g = f.grid;
    let e = g.extents();
    let strides = [e[1] * e[2], e[2], 1];
    let tables: Vec<Vec<usize>> =
        (0..3).map(|a| (0..e[a]).map(|i| ((i + o[a]) % e[a].max(1)) * strides[a]).collect()).collect();
    let v = &f.values;
    let mut s = 0.0;
    let mut x = 0;
    for i0 in 0..e[0] {
        for i1 in 0..e[1] {
            let base = tables[0][i0] + tables[1][i1];
            for i2 in 0..e[2] {
                let y = base + tables[2][i2];
                s += powp((v[y] - v[x]).abs(), p);
                x += 1;
            }
        }
    }
    s
}

pub fn gagliardo_seminorm(f: &GridFunction, order: f64, p: f64) -> Result<f64> {
    Ok(gagliardo_estimate(f, order, p, GagliardoMode::Exact)?.value)
}

pub fn gagliardo_with_metric(f: &GridFunction, order: f64, p: f64, metric: Metric) -> Result<f64> {
    match metric {
        Metric::Wrapped => gagliardo_seminorm(f, order, p),
        Metric::Cube => cube_seminorm(f, order, p),
    }
}

fn check_orders(order: f64, p: f64) -> Result<()> {
    if !(order > 0.0 && order < 1.0) {
        return invalid(format!("Gagliardo order {order} outside (0,1)"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("exponent {p} outside [1, inf)"));
    }
    Ok(())
}

pub fn gagliardo_estimate(f: &GridFunction, order: f64, p: f64, mode: GagliardoMode) -> Result<GagliardoReport> {
    check_orders(order, p)?;
    let g = f.grid;
    let total = g.len();
    let expo = g.dim() as f64 + order * p;
    let vol2 = g.cell_volume() * g.cell_volume();
    match mode {
        GagliardoMode::Exact => {
            if total > EXACT_LIMIT {
                return Err(Error::ExactModeTooLarge { points: total, limit: EXACT_LIMIT });
            }
            let parts: Vec<f64> = (1..total)
                .into_par_iter()
                .map(|oi| {
                    let o = g.multi_index(oi);
                    let d = wrapped_offset_distance(&g, &o);
                    offset_sum(f, &o, p) * d.powf(-expo)
                })
                .collect();
            let s: f64 = parts.iter().sum::<f64>() * vol2;
            Ok(GagliardoReport { value: s.powf(1.0 / p), rel_std_error: 0.0, variance_warning: false, samples: 0 })
        }
        GagliardoMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return invalid("Monte Carlo needs at least two samples");
            }
            let mut r = rng::stream(seed, 7);
            let (mut m1, mut m2) = (0.0, 0.0);
            for _ in 0..samples {
                let x = rng::index(&mut r, total);
                let oi = 1 + rng::index(&mut r, total - 1);
                let o = g.multi_index(oi);
                let xm = g.multi_index(x);
                let mut y = [0usize; 3];
                for a in 0..g.dim() {
                    y[a] = (xm[a] + o[a]) % g.size();
                }
                let d = wrapped_offset_distance(&g, &o);
                let t = powp((f.values[g.flat_index(&y)] - f.values[x]).abs(), p) * d.powf(-expo);
                m1 += t;
                m2 += t * t;
            }
            let ns = samples as f64;
            let mean = m1 / ns;
            let var = (m2 / ns - mean * mean).max(0.0) * ns / (ns - 1.0);
            let scale = (total as f64) * ((total - 1) as f64) * vol2;
            let sum = mean * scale;
            let rse_sum = if mean > 0.0 { (var / ns).sqrt() / mean } else { 0.0 };
            let rel = rse_sum / p;
            Ok(GagliardoReport {
                value: sum.powf(1.0 / p),
                rel_std_error: rel,
                variance_warning: rel > 0.05,
                samples,
            })
        }
    }
}

fn cube_seminorm(f: &GridFunction, order: f64, p: f64) -> Result<f64> {
    check_orders(order, p)?;
    let g = f.grid;
    let total = g.len();
    if total > EXACT_LIMIT {
        return Err(Error::ExactModeTooLarge { points: total, limit: EXACT_LIMIT });
    }
    let expo = g.dim() as f64 + order * p;
    let pts: Vec<[f64; 3]> = (0..total).map(|i| g.point(i)).collect();
    let parts: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|x| {
            let mut s = 0.0;
            for y in 0..total {
                if y == x {
                    continue;
                }
                let d = super::norm3(&[pts[x][0] - pts[y][0], pts[x][1] - pts[y][1], pts[x][2] - pts[y][2]]);
                s += powp((f.values[x] - f.values[y]).abs(), p) * d.powf(-expo);
            }
            s
        })
        .collect();
    let s: f64 = parts.iter().sum::<f64>() * g.cell_volume() * g.cell_volume();
    Ok(s.powf(1.0 / p))
}

/// Both metric conventions, flagged when they differ by more than one percent.
pub fn gagliardo_metric_report(f: &GridFunction, order: f64, p: f64) -> Result<MetricReport> {
    let wrapped = gagliardo_seminorm(f, order, p)?;
    let cube = cube_seminorm(f, order, p)?;
    let differ = (wrapped - cube).abs() > 0.01 * wrapped.max(cube);
    Ok(MetricReport { wrapped, cube, differ })
}

/// Per-mode multiplier `c_N(k)` of the discrete `W^{σ,2}` double sum, in FFT order.
pub fn gagliardo_multiplier(grid: &TorusGrid, order: f64) -> Vec<f64> {
    let total = grid.len();
    let expo = grid.dim() as f64 + 2.0 * order;
    let mut w: Vec<Complex64> = (0..total)
        .map(|oi| {
            if oi == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let d = wrapped_offset_distance(grid, &grid.multi_index(oi));
                Complex64::new(d.powf(-expo), 0.0)
            }
        })
        .collect();
    let w0: f64 = w.iter().map(|c| c.re).sum();
    fft_nd(grid, &mut w, false);
    let vol = grid.cell_volume();
    w.iter().map(|c| 2.0 * vol * (w0 - c.re)).collect()
}

fn low_modes(grid: &TorusGrid) -> Vec<[i64; 3]> {
    let kcut = 4.min(grid.size() as i64 / 2 - 1);
    let mut ks = Vec::new();
    for i in 0..grid.len() {
        let k = grid.frequency(i);
        let kinf = k.iter().map(|c| c.abs()).max().unwrap();
        if kinf == 0 || kinf > kcut {
            continue;
        }
        let first = k.iter().take(grid.dim()).find(|&&c| c != 0).copied().unwrap();
        if first > 0 {
            ks.push(k);
        }
    }
    ks.sort_by_key(|k| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2], *k));
    ks
}

/// Probe number `index` of the dual-norm probe sequence.
pub fn dual_probe(grid: &TorusGrid, index: usize, seed: u64) -> GridFunction {
    let modes = low_modes(grid);
    let tau = 2.0 * std::f64::consts::PI;
    if index < 2 * modes.len() {
        let k = modes[index / 2];
        let odd = index % 2 == 1;
        return GridFunction::from_fn(*grid, |x| {
            let ph: f64 = tau * (0..grid.dim()).map(|a| k[a] as f64 * x[a]).sum::<f64>();
            if odd {
                ph.sin()
            } else {
                ph.cos()
            }
        });
    }
    let mut r = rng::stream(seed, 1000 + index as u64);
    let band = (grid.size() / 4).max(1) as i64;
    let mut s = dft(&GridFunction::zeros(*grid));
    for i in 0..grid.len() {
        let k = grid.frequency(i);
        if k.iter().any(|c| c.abs() > band) {
            continue;
        }
        let first = k.iter().take(grid.dim()).find(|&&c| c != 0).copied();
        if !matches!(first, Some(c) if c > 0) {
            continue;
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let amp = 1.0 / (1.0 + k2).sqrt();
        let c = Complex64::new(rng::normal(&mut r), rng::normal(&mut r)) * amp;
        s.coeffs[i] = c;
        let mut km = [0i64; 3];
        for a in 0..grid.dim() {
            km[a] = -k[a];
        }
        s.coeffs[grid.frequency_index(&km)] = c.conj();
    }
    super::idft(&s)
}

fn probe_seminorm(phi: &GridFunction, order: f64, p: f64, mult: &Option<Vec<f64>>) -> Result<f64> {
    if let Some(m) = mult {
        let s = dft(phi);
        let v: f64 = s.coeffs.iter().zip(m).map(|(c, w)| c.norm_sqr() * w).sum();
        return Ok(v.sqrt());
    }
    if phi.grid.len() <= EXACT_LIMIT {
        gagliardo_seminorm(phi, order, p)
    } else {
        Ok(gagliardo_estimate(phi, order, p, GagliardoMode::MonteCarlo { samples: 200_000, seed: DUAL_PROBE_SEED })?.value)
    }
}

/// Lower estimate of the `W^{-σ,p}` dual norm over the first `probe_count` probes.
pub fn dual_norm_bound(g: &GridFunction, order: f64, p: f64, probe_count: usize) -> Result<f64> {
    check_orders(order, p)?;
    let pc = conjugate(p);
    let mult = if pc == 2.0 { Some(gagliardo_multiplier(&g.grid, order)) } else { None };
    let mut best: f64 = 0.0;
    for i in 0..probe_count {
        let phi = dual_probe(&g.grid, i, DUAL_PROBE_SEED);
        let den = probe_seminorm(&phi, order, pc, &mult)?;
        if den > 0.0 {
            best = best.max(g.inner(&phi)?.abs() / den);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lp_examples() {
        let g = TorusGrid::new(1, 32).unwrap();
        assert!((lp_norm(&GridFunction::constant(g, 3.0), 2.0) - 3.0).abs() < 1e-14);
        let c = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        assert!((lp_norm(&c, 2.0) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(bessel_seminorm(&GridFunction::constant(g, 2.0), 0.7, 3.0).unwrap() < 1e-14);
    }

    #[test]
    fn constant_seminorm_vanishes() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!(gagliardo_seminorm(&GridFunction::constant(g, 1.5), 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn exact_mode_limit() {
        let g = TorusGrid::new(3, 32).unwrap();
        let f = GridFunction::zeros(g);
        assert!(matches!(gagliardo_seminorm(&f, 0.5, 2.0), Err(Error::ExactModeTooLarge { .. })));
    }

    #[test]
    fn zero_rhs_has_zero_dual_norm() {
        let g = TorusGrid::new(1, 16).unwrap();
        assert_eq!(dual_norm_bound(&GridFunction::zeros(g), 0.3, 2.0, 10).unwrap(), 0.0);
    }
}
