use super::quadrature::{composite, piecewise};
use crate::torus_field::TorusGrid;
use crate::error::{invalid, Result};
use crate::kernels::Kernel;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type Direction = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Lattice sum `μ(h) = Σ_m K((h+m)/|h+m|) |h+m|^{-n-2s}` truncated at `|m|_∞ <= M`,
/// with the far field replaced by its integral.
#[derive(Clone)]
pub struct PeriodizedKernel {
    pub dim: usize,
    pub s: f64,
    pub truncation: usize,
    pub upper: f64,
    pub tail_estimate: f64,
    pub tail_bound: f64,
    pub breaks: Vec<f64>,
    dir: Direction,
    lattice: Vec<[f64; 3]>,
}

impl fmt::Debug for PeriodizedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodizedKernel")
            .field("dim", &self.dim)
            .field("s", &self.s)
            .field("truncation", &self.truncation)
            .field("tail_estimate", &self.tail_estimate)
            .field("tail_bound", &self.tail_bound)
            .finish()
    }
}

/// Integral comparison bound for the neglected shells `|m|_∞ > M`.
pub fn tail_bound(dim: usize, s: f64, upper: f64, m: usize) -> f64 {
    let w = m as f64 - 0.5;
    let a = 2.0 * s;
    let v = match dim {
        1 => 2.0 * w.powf(-a) / a,
        2 => 8.0 * (w.powf(-a) / a + w.powf(-1.0 - a) / (1.0 + a)),
        _ => 24.0 * (w.powf(-a) / a + 2.0 * w.powf(-1.0 - a) / (1.0 + a) + w.powf(-2.0 - a) / (2.0 + a)),
    };
    upper * v
}

/// `∫_{S^{n-1}} g(θ) dθ` with cube-face charts for n = 3 and breakpoints for n = 2.
pub fn sphere_integral(dim: usize, breaks: &[f64], panels: usize, g: &dyn Fn(&[f64]) -> f64) -> f64 {
    match dim {
        1 => g(&[1.0]) + g(&[-1.0]),
        2 => {
            let mut b: Vec<f64> = (0..4).map(|j| PI / 4.0 + j as f64 * PI / 2.0).collect();
            b.extend_from_slice(breaks);
            let (x, w) = piecewise(0.0, 2.0 * PI, &b, panels as f64 / (2.0 * PI), 12);
            x.iter().zip(&w).map(|(t, wt)| wt * g(&[t.cos(), t.sin()])).sum()
        }
        _ => {
            let (x, w) = composite(-1.0, 1.0, panels.max(1), 8);
            let mut total = 0.0;
            for face in 0..6 {
                let ax = face / 2;
                let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
                for (a, wa) in x.iter().zip(&w) {
                    for (b, wb) in x.iter().zip(&w) {
                        let q = (1.0 + a * a + b * b).sqrt();
                        let mut th = [0.0; 3];
                        th[ax] = sign / q;
                        th[(ax + 1) % 3] = a / q;
                        th[(ax + 2) % 3] = b / q;
                        total += wa * wb * g(&th) / (q * q * q);
                    }
                }
            }
            total
        }
    }
}

/// Periodization of `K(x0, 0, ·)` with truncation `M`.
pub fn periodize(k: &Kernel, x0: &[f64], s: f64, m: usize) -> Result<PeriodizedKernel> {
    if m < 1 {
        return invalid("truncation radius must be at least 1");
    }
    if x0.len() != k.dim {
        return invalid("base point dimension differs from kernel");
    }
    Ok(periodize_direction(k.dim, s, k.upper, k.frozen(x0), k.angular_breaks.clone(), m))
}

pub fn periodize_direction(dim: usize, s: f64, upper: f64, dir: Direction, breaks: Vec<f64>, m: usize) -> PeriodizedKernel {
    let mi = m as i64;
    let mut lattice = Vec::new();
    let range = |a: usize| if a < dim { -mi..=mi } else { 0..=0 };
    for a in range(0) {
        for b in range(1) {
            for c in range(2) {
                if a != 0 || b != 0 || c != 0 {
                    lattice.push([a as f64, b as f64, c as f64]);
                }
            }
        }
    }
    let big_a = m as f64 + 0.5;
    let d = dir.clone();
    let moment = sphere_integral(dim, &breaks, 256, &|th: &[f64]| {
        let inf = th.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        d(th) * inf.powf(2.0 * s)
    });
    let tail_estimate = big_a.powf(-2.0 * s) / (2.0 * s) * moment;
    PeriodizedKernel {
        dim,
        s,
        truncation: m,
        upper,
        tail_estimate,
        tail_bound: tail_bound(dim, s, upper, m),
        breaks,
        dir,
        lattice,
    }
}

impl PeriodizedKernel {
    pub fn direction(&self, h: &[f64]) -> f64 {
        (self.dir)(h)
    }

    /// Single-cell term `K(h/|h|)/|h|^{n+2s}`.
    pub fn singular_term(&self, h: &[f64]) -> f64 {
        let n = self.dim;
        let r = h.iter().take(n).map(|c| c * c).sum::<f64>().sqrt();
        if r == 0.0 {
            return f64::INFINITY;
        }
        let mut th = [0.0; 3];
        for a in 0..n {
            th[a] = h[a] / r;
        }
        (self.dir)(&th[..n]) * r.powf(-(n as f64) - 2.0 * self.s)
    }

    /// `μ(h)` minus the `m = 0` term.
    pub fn eval_rest(&self, h: &[f64]) -> f64 {
        let n = self.dim;
        let e = -(n as f64) - 2.0 * self.s;
        let mut total = self.tail_estimate;
        let mut y = [0.0; 3];
        for m in &self.lattice {
            let mut r2 = 0.0;
            for a in 0..n {
                y[a] = h[a] + m[a];
                r2 += y[a] * y[a];
            }
            let r = r2.sqrt();
            for c in y.iter_mut().take(n) {
                *c /= r;
            }
            total += (self.dir)(&y[..n]) * r.powf(e);
        }
        total
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        self.singular_term(h) + self.eval_rest(h)
    }

    /// `μ` at the wrapped grid offsets `j/N`, zero at the origin, in grid order.
    pub fn grid_weights(&self, grid: &TorusGrid) -> Vec<f64> {
        use rayon::prelude::*;
        let n = self.dim;
        let size = grid.size() as f64;
        (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let m = grid.multi_index(idx);
                let mut h = [0.0; 3];
                let mut zero = true;
                for a in 0..n {
                    let j = m[a] as f64;
                    h[a] = if j >= size / 2.0 { j / size - 1.0 } else { j / size };
                    zero &= m[a] == 0;
                }
                if zero {
                    0.0
                } else {
                    self.eval(&h[..n])
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{cone_indicator_kernel, constant_kernel, Cone, Outside};

    #[test]
    fn tail_bound_example() {
        let b = tail_bound(1, 0.5, 1.0, 50);
        assert!((b - 2.0 / 49.5).abs() < 1e-15);
        assert!((b - 0.0404).abs() < 1e-4);
    }

    #[test]
    fn symmetric_base_is_even() {
        let c = Cone::cap(2, &[1.0, 0.3], 0.6, true).unwrap();
        let k = cone_indicator_kernel(c, 1.0, 1.0, 0.4, Outside::Zero).unwrap();
        let mu = periodize(&k, &[0.0, 0.0], 0.4, 6).unwrap();
        for h in [[0.1, 0.2], [0.37, -0.12], [-0.5, 0.25]] {
            let a = mu.eval(&h);
            let b = mu.eval(&[-h[0], -h[1]]);
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn one_dimensional_sum_converges() {
        let k = constant_kernel(1.0, 0.5, 1).unwrap();
        let a = periodize(&k, &[0.0], 0.5, 50).unwrap();
        let b = periodize(&k, &[0.0], 0.5, 500).unwrap();
        let exact = (PI / (PI * 0.25).sin()).powi(2);
        assert!((a.eval(&[0.25]) - b.eval(&[0.25])).abs() <= a.tail_bound);
        assert!((b.eval(&[0.25]) - exact).abs() < 1e-6);
    }
}
