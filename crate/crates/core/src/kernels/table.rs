use super::{Cone, Kernel};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl TableAxis {
    fn locate(&self, v: f64) -> (usize, usize, f64) {
        if self.count == 1 {
            return (0, 0, 0.0);
        }
        if self.periodic {
            let step = (self.hi - self.lo) / self.count as f64;
            let t = ((v - self.lo) / step).rem_euclid(self.count as f64);
            let i = (t.floor() as usize).min(self.count - 1);
            return (i, (i + 1) % self.count, t - i as f64);
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        let t = ((v - self.lo) / step).clamp(0.0, (self.count - 1) as f64);
        let i = (t.floor() as usize).min(self.count - 2);
        (i, i + 1, t - i as f64)
    }
}

/// Sampled kernel on a tensor grid over `(x, r, direction)`, interpolated multilinearly.
///
/// Direction coordinates: n = 1 uses `h > 0` as an index in {0, 1}; n = 2 the polar
/// angle in `[0, 2π)`; n = 3 the height `h_3` and the azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct TableKernel {
    pub dim: usize,
    pub axes: Vec<TableAxis>,
    pub values: Vec<f64>,
}

impl TableKernel {
    pub fn new(dim: usize, axes: Vec<TableAxis>, values: Vec<f64>) -> Result<Self> {
        let want = match dim {
            1 => 3,
            2 => 4,
            3 => 6,
            _ => return invalid("table dimension must be 1..=3"),
        };
        if axes.len() != want {
            return invalid(format!("table for n={dim} needs {want} axes"));
        }
        if axes.iter().any(|a| a.count == 0) {
            return invalid("table axis without samples");
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        if total != values.len() {
            return invalid(format!("table has {} values, axes need {total}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("table values must be finite and nonnegative");
        }
        Ok(TableKernel { dim, axes, values })
    }

    fn coords(&self, x: &[f64], r: f64, h: &[f64]) -> [f64; 6] {
        let mut c = [0.0; 6];
        let n = self.dim;
        c[..n].copy_from_slice(&x[..n]);
        c[n] = r;
        match n {
            1 => c[2] = if h[0] > 0.0 { 1.0 } else { 0.0 },
            2 => c[3] = h[1].atan2(h[0]).rem_euclid(2.0 * PI),
            _ => {
                c[4] = h[2];
                c[5] = h[1].atan2(h[0]).rem_euclid(2.0 * PI);
            }
        }
        c
    }

    pub fn eval(&self, x: &[f64], r: f64, h: &[f64]) -> f64 {
        let c = self.coords(x, r, h);
        let d = self.axes.len();
        let loc: Vec<(usize, usize, f64)> = (0..d).map(|a| self.axes[a].locate(c[a])).collect();
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..d {
                let (i0, i1, t) = loc[a];
                let hi = (corner >> a) & 1 == 1;
                w *= if hi { t } else { 1.0 - t };
                idx = idx * self.axes[a].count + if hi { i1 } else { i0 };
            }
            if w != 0.0 {
                total += w * self.values[idx];
            }
        }
        total
    }

    /// Kernel with Λ the table maximum; without an explicit cone the whole sphere
    /// and the table minimum serve as Σ and η.
    pub fn into_kernel(self, s: f64, cone_eta: Option<(Cone, f64)>) -> Result<Kernel> {
        let upper = self.values.iter().cloned().fold(0.0, f64::max);
        let (cone, eta) = match cone_eta {
            Some(ce) => ce,
            None => (Cone::full(self.dim), self.values.iter().cloned().fold(f64::INFINITY, f64::min)),
        };
        if !(eta > 0.0) {
            return Err(Error::BadEllipticity { eta, upper });
        }
        let dim = self.dim;
        let t = Arc::new(self);
        Kernel::from_fn("custom_table", dim, s, upper, eta, cone, move |x, r, h| t.eval(x, r, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_bilinear_data() {
        let axes = vec![
            TableAxis { lo: -0.5, hi: 0.5, count: 5, periodic: false },
            TableAxis { lo: 0.0, hi: 1.0, count: 3, periodic: false },
            TableAxis { lo: 0.0, hi: 1.0, count: 2, periodic: false },
        ];
        let mut vals = Vec::new();
        for i in 0..5 {
            for j in 0..3 {
                for _ in 0..2 {
                    let x = -0.5 + 0.25 * i as f64;
                    let r = 0.5 * j as f64;
                    vals.push(2.0 + x + 0.5 * r);
                }
            }
        }
        let t = TableKernel::new(1, axes, vals).unwrap();
        assert!((t.eval(&[0.1], 0.3, &[1.0]) - (2.1 + 0.15)).abs() < 1e-12);
        assert!((t.eval(&[-0.37], 0.81, &[-1.0]) - (2.0 - 0.37 + 0.405)).abs() < 1e-12);
        let k = t.into_kernel(0.5, None).unwrap();
        assert!(k.certify(2000, 200).pass);
    }
}
