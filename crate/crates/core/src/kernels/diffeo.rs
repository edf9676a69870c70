use super::{probes, Cone, Kernel};
use crate::error::{invalid, Error, Result};
use std::sync::Arc;

/// A map `φ: R^n -> R^m`.
pub trait Map: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `Dφ(x) h` when known in closed form.
    fn jacobian_apply(&self, _x: &[f64], _h: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// `x -> c x`.
pub struct Homothety {
    pub dim: usize,
    pub factor: f64,
}

impl Map for Homothety {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.factor * v;
        }
    }
    fn jacobian_apply(&self, _x: &[f64], h: &[f64], out: &mut [f64]) -> bool {
        self.apply(h, out);
        true
    }
}

/// `x -> x + a sin(2π x)` componentwise.
pub struct SineMap {
    pub dim: usize,
    pub amplitude: f64,
}

impl Map for SineMap {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let tau = 2.0 * std::f64::consts::PI;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v + self.amplitude * (tau * v).sin();
        }
    }
    fn jacobian_apply(&self, x: &[f64], h: &[f64], out: &mut [f64]) -> bool {
        let tau = 2.0 * std::f64::consts::PI;
        for a in 0..self.dim {
            out[a] = (1.0 + self.amplitude * tau * (tau * x[a]).cos()) * h[a];
        }
        true
    }
}

/// Map from a closure.
pub struct FnMap<F> {
    pub dim_in: usize,
    pub dim_out: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> Map for FnMap<F> {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DiffeoOptions {
    pub probes: usize,
    /// Probe points lie in `[-half_width, half_width]^n`.
    pub half_width: f64,
    pub max_radius: f64,
    pub tolerance: f64,
}

impl Default for DiffeoOptions {
    fn default() -> Self {
        DiffeoOptions { probes: 4000, half_width: 0.5, max_radius: 1.0, tolerance: 1e-8 }
    }
}

const DIFF_STEP: f64 = 1e-5;

fn stretch(map: &dyn Map, x: &[f64], r: f64, h: &[f64]) -> f64 {
    let n = map.dim_in();
    let m = map.dim_out();
    let mut a = [0.0; 8];
    let mut b = [0.0; 8];
    if r == 0.0 {
        if map.jacobian_apply(x, h, &mut a[..m]) {
            return a[..m].iter().map(|c| c * c).sum::<f64>().sqrt();
        }
        let mut xp = [0.0; 3];
        let mut xm = [0.0; 3];
        for i in 0..n {
            xp[i] = x[i] + DIFF_STEP * h[i];
            xm[i] = x[i] - DIFF_STEP * h[i];
        }
        map.apply(&xp[..n], &mut a[..m]);
        map.apply(&xm[..n], &mut b[..m]);
        return (0..m).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt() / (2.0 * DIFF_STEP);
    }
    let mut y = [0.0; 3];
    for i in 0..n {
        y[i] = x[i] + r * h[i];
    }
    map.apply(x, &mut a[..m]);
    map.apply(&y[..n], &mut b[..m]);
    (0..m).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt() / r
}

/// `K(x,r,h) = (r / |φ(x) - φ(x + r h)|)^{n+2s}` with constants from measured bi-Lipschitz bounds.
pub fn diffeo_kernel(map: Arc<dyn Map>, s: f64, opts: DiffeoOptions) -> Result<Kernel> {
    let n = map.dim_in();
    if !(1..=3).contains(&n) || map.dim_out() > 8 || map.dim_out() < n {
        return invalid("diffeo map dimensions unsupported");
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..opts.probes {
        let p = probes::probe(i, n);
        let mut x = [0.0; 3];
        for a in 0..n {
            x[a] = opts.half_width * p.offset[a];
        }
        for r in [0.0, opts.max_radius * p.radius] {
            let st = stretch(map.as_ref(), &x[..n], r, &p.dir[..n]);
            lo = lo.min(st);
            hi = hi.max(st);
        }
    }
    if !(lo > opts.tolerance) || !hi.is_finite() {
        return Err(Error::DegenerateJacobian { lower: lo });
    }
    let e = n as f64 + 2.0 * s;
    let upper = lo.powf(-e) * (1.0 + 1e-9);
    let eta = hi.powf(-e) * (1.0 - 1e-9);
    let m2 = map.clone();
    Kernel::from_fn("diffeo", n, s, upper, eta, Cone::full(n), move |x, r, h| stretch(m2.as_ref(), x, r, h).powf(-e))
}
