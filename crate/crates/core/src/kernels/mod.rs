//! Kernel families `K(x, r, h)` with their structural constants, sampled
//! certificates of those constants, and continuity/Hölder measurements.

mod cone;
mod diffeo;
pub mod probes;
mod spec;
mod table;

pub use cone::{Cap, Cone};
pub(crate) use cone::fibonacci_point;
pub use diffeo::{diffeo_kernel, DiffeoOptions, FnMap, Homothety, Map, SineMap};
pub use spec::KernelSpec;
pub use table::{TableAxis, TableKernel};

use crate::error::{invalid, Error, Result};
use std::fmt;
use std::sync::Arc;

pub trait KernelFn: Send + Sync {
    fn eval(&self, x: &[f64], r: f64, h: &[f64]) -> f64;
}

impl<F> KernelFn for F
where
    F: Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], r: f64, h: &[f64]) -> f64 {
        self(x, r, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hoelder {
    pub alpha: f64,
    pub constant: f64,
}

/// What a cone indicator kernel takes outside its cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outside {
    Zero,
    Eta,
}

/// A kernel with its order, bounds and direction set.
#[derive(Clone)]
pub struct Kernel {
    pub family: String,
    pub dim: usize,
    pub s: f64,
    pub upper: f64,
    pub eta: f64,
    pub cone: Cone,
    pub hoelder: Option<Hoelder>,
    /// Angles in `(0, 2π)` where `h -> K(x, 0, h)` may jump (n = 2 only).
    pub angular_breaks: Vec<f64>,
    f: Arc<dyn KernelFn>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("family", &self.family)
            .field("dim", &self.dim)
            .field("s", &self.s)
            .field("upper", &self.upper)
            .field("eta", &self.eta)
            .finish()
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("kernel order {s} outside (0,1)"));
    }
    Ok(())
}

impl Kernel {
    /// Kernel from a closure; the caller vouches for the stated constants.
    pub fn from_fn(
        family: &str,
        dim: usize,
        s: f64,
        upper: f64,
        eta: f64,
        cone: Cone,
        f: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_order(s)?;
        if cone.dim() != dim {
            return invalid("cone dimension differs from kernel dimension");
        }
        if !(eta > 0.0 && eta <= upper) {
            return Err(Error::BadEllipticity { eta, upper });
        }
        Ok(Kernel {
            family: family.to_string(),
            dim,
            s,
            upper,
            eta,
            cone,
            hoelder: None,
            angular_breaks: Vec::new(),
            f: Arc::new(f),
        })
    }

    pub fn with_hoelder(mut self, alpha: f64, constant: f64) -> Self {
        self.hoelder = Some(Hoelder { alpha, constant });
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.angular_breaks = breaks;
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], r: f64, h: &[f64]) -> f64 {
        self.f.eval(x, r, h)
    }

    /// Direction profile `h -> K(x0, 0, h)` of the frozen kernel.
    pub fn frozen(&self, x0: &[f64]) -> Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> {
        let k = self.f.clone();
        let x0 = x0.to_vec();
        Arc::new(move |h: &[f64]| k.eval(&x0, 0.0, h))
    }

    /// `(ξ, ρ, h) -> K(center + scale ξ, scale ρ, h)`.
    pub fn rescaled(&self, center: &[f64], scale: f64) -> Kernel {
        let k = self.f.clone();
        let c = center.to_vec();
        let n = self.dim;
        let mut out = self.clone();
        out.f = Arc::new(move |xi: &[f64], r: f64, h: &[f64]| {
            let mut x = [0.0; 3];
            for a in 0..n {
                x[a] = c[a] + scale * xi[a];
            }
            k.eval(&x[..n], scale * r, h)
        });
        out.hoelder = self.hoelder.map(|hd| Hoelder { alpha: hd.alpha, constant: hd.constant * scale.powf(hd.alpha) });
        out
    }

    /// Sampled check of `0 <= K <= Λ` and of the cone lower bound.
    pub fn certify(&self, probes: usize, cone_probes: usize) -> KernelCertificate {
        let n = self.dim;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..probes {
            let p = probes::probe(i, n);
            let x: Vec<f64> = p.offset[..n].iter().map(|c| 0.5 * c).collect();
            let v = self.eval(&x, p.radius, &p.dir[..n]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mut cone_min = f64::INFINITY;
        let mut found = 0;
        let mut i = 0;
        while found < cone_probes && i < 50 * cone_probes.max(1) {
            let p = probes::probe(i, n);
            i += 1;
            if !self.cone.contains(&p.dir[..n]) {
                continue;
            }
            found += 1;
            let x: Vec<f64> = p.offset[..n].iter().map(|c| 0.5 * c).collect();
            cone_min = cone_min.min(self.eval(&x, 0.0, &p.dir[..n]));
        }
        let pass = lo >= 0.0 && hi <= self.upper * (1.0 + 1e-12) && cone_min >= self.eta * (1.0 - 1e-12);
        KernelCertificate { probes, cone_probes: found, min: lo, max: hi, min_on_cone: cone_min, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCertificate {
    pub probes: usize,
    pub cone_probes: usize,
    pub min: f64,
    pub max: f64,
    pub min_on_cone: f64,
    pub pass: bool,
}

pub fn constant_kernel(value: f64, s: f64, dim: usize) -> Result<Kernel> {
    if !(value > 0.0) {
        return Err(Error::BadEllipticity { eta: value, upper: value });
    }
    Ok(Kernel::from_fn("constant", dim, s, value, value, Cone::full(dim), move |_, _, _| value)?.with_hoelder(1.0, 0.0))
}

pub fn cone_indicator_kernel(cone: Cone, eta: f64, upper: f64, s: f64, outside: Outside) -> Result<Kernel> {
    let dim = cone.dim();
    if cone.measure() <= 0.0 {
        return Err(Error::EmptyCone);
    }
    let c = cone.clone();
    let out = match outside {
        Outside::Zero => 0.0,
        Outside::Eta => eta,
    };
    let breaks = cone.arc_endpoints();
    Ok(Kernel::from_fn("cone", dim, s, upper, eta, cone, move |_, _, h| if c.contains(h) { upper } else { out })?
        .with_hoelder(1.0, 0.0)
        .with_breaks(breaks))
}

/// `base · (1 + amplitude · sin(2π frequency x_axis))`.
pub fn modulated_kernel(base: f64, amplitude: f64, frequency: f64, axis: usize, s: f64, dim: usize) -> Result<Kernel> {
    if axis >= dim {
        return invalid("modulation axis out of range");
    }
    if amplitude.abs() >= 1.0 {
        return Err(Error::BadEllipticity { eta: base * (1.0 - amplitude.abs()), upper: base * (1.0 + amplitude.abs()) });
    }
    let tau = 2.0 * std::f64::consts::PI;
    let k = Kernel::from_fn(
        "modulated",
        dim,
        s,
        base * (1.0 + amplitude.abs()),
        base * (1.0 - amplitude.abs()),
        Cone::full(dim),
        move |x, _, _| base * (1.0 + amplitude * (tau * frequency * x[axis]).sin()),
    )?;
    Ok(k.with_hoelder(1.0, base * amplitude.abs() * tau * frequency.abs()))
}

/// Oscillation table `λ -> sup |K(x,r,h) - K(x0,0,h)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub x0: Vec<f64>,
    pub radius: f64,
    pub probes: usize,
    pub table: Vec<(f64, f64)>,
}

impl ContinuityReport {
    pub fn oscillation(&self, scale: f64) -> Option<f64> {
        self.table.iter().find(|(l, _)| (*l - scale).abs() < 1e-15).map(|t| t.1)
    }
}

pub const CONTINUITY_PROBES: usize = 4096;

/// Nested-probe oscillation: the table at `λ` includes every probe of smaller scales.
pub fn measure_continuity(k: &Kernel, x0: &[f64], radius: f64, scales: &[f64]) -> ContinuityReport {
    measure_continuity_with(k, x0, radius, scales, CONTINUITY_PROBES)
}

pub fn measure_continuity_with(k: &Kernel, x0: &[f64], radius: f64, scales: &[f64], count: usize) -> ContinuityReport {
    let n = k.dim;
    let mut sorted: Vec<f64> = scales.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut table = Vec::new();
    let mut running: f64 = 0.0;
    for &lam in &sorted {
        let rr = lam * radius;
        for i in 0..count {
            let p = probes::probe(i, n);
            let mut x = [0.0; 3];
            for a in 0..n {
                x[a] = x0[a] + rr * p.offset[a];
            }
            let h = &p.dir[..n];
            let d = (k.eval(&x[..n], rr * p.radius, h) - k.eval(x0, 0.0, h)).abs();
            running = running.max(d);
        }
        table.push((lam, running));
    }
    ContinuityReport { x0: x0.to_vec(), radius, probes: count, table }
}

/// `sup |K(x,r,h) - K(y,r,h)| / |x-y|^α` over probe pairs in the unit box.
pub fn measure_hoelder(k: &Kernel, alpha: f64) -> Result<f64> {
    measure_hoelder_with(k, alpha, 4000)
}

pub fn measure_hoelder_with(k: &Kernel, alpha: f64, count: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("Hölder exponent {alpha} outside (0,1]"));
    }
    let n = k.dim;
    let mut best: f64 = 0.0;
    for i in 0..count {
        let p = probes::probe(i, n);
        let q = probes::probe(count + i, n);
        let delta = 10f64.powf(-3.0 + 2.7 * probes::radical_inverse(i as u64 + 1, 31));
        let mut x = [0.0; 3];
        let mut y = [0.0; 3];
        for a in 0..n {
            x[a] = 0.5 * p.offset[a];
            y[a] = x[a] + delta * q.dir[a];
        }
        let h = &p.dir[..n];
        let d = (k.eval(&x[..n], p.radius, h) - k.eval(&y[..n], p.radius, h)).abs();
        best = best.max(d / delta.powf(alpha));
    }
    Ok(best)
}
