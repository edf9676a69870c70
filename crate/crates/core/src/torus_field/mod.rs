//! Uniform grids on the flat torus `[-1/2, 1/2)^n`, grid functions, the
//! discrete Fourier transform and the norm estimators built on them.

pub(crate) mod fft;
mod io;
mod norms;

pub use fft::{dft, frac_laplacian, idft, multiplier};
pub use io::{export_csv, import_csv, read_field, write_field, FieldMeta};
pub use norms::{
    bessel_seminorm, dual_norm_bound, dual_probe, gagliardo_estimate, gagliardo_metric_report,
    gagliardo_multiplier, gagliardo_seminorm, gagliardo_with_metric, lp_norm, GagliardoMode,
    GagliardoReport, Metric, MetricReport, DUAL_PROBE_SEED, EXACT_LIMIT,
};

use crate::error::{invalid, Error, Result};
use rustfft::num_complex::Complex64;

/// Uniform grid with `size` points per axis on the `dim`-torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    size: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return invalid(format!("dimension {dim} not in 1..=3"));
        }
        if size < 4 || !size.is_power_of_two() {
            return invalid(format!("points per axis {size} must be a power of two >= 4"));
        }
        Ok(TorusGrid { dim, size })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Extents padded to three axes (unused axes have extent 1).
    pub fn extents(&self) -> [usize; 3] {
        let mut e = [1; 3];
        for x in e.iter_mut().take(self.dim) {
            *x = self.size;
        }
        e
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut rest = idx;
        for a in (0..self.dim).rev() {
            m[a] = rest % self.size;
            rest /= self.size;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim {
            idx = idx * self.size + m[a] % self.size;
        }
        idx
    }

    /// Flat index of the point with (possibly negative) integer coordinates, wrapped.
    pub fn wrapped_index(&self, m: &[i64]) -> usize {
        let n = self.size as i64;
        let mut idx = 0;
        for &c in m.iter().take(self.dim) {
            idx = idx * self.size + c.rem_euclid(n) as usize;
        }
        idx
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = -0.5 + m[a] as f64 * h;
        }
        x
    }

    /// Balanced frequency of FFT-ordered index `j` along one axis.
    pub fn axis_frequency(&self, j: usize) -> i64 {
        if j < self.size / 2 {
            j as i64
        } else {
            j as i64 - self.size as i64
        }
    }

    pub fn frequency(&self, idx: usize) -> [i64; 3] {
        let m = self.multi_index(idx);
        let mut k = [0; 3];
        for a in 0..self.dim {
            k[a] = self.axis_frequency(m[a]);
        }
        k
    }

    pub fn frequency_index(&self, k: &[i64]) -> usize {
        self.wrapped_index(k)
    }

    /// Wrapped displacement between two grid points, componentwise in `[-1/2, 1/2]`.
    pub fn displacement(&self, from: usize, to: usize) -> [f64; 3] {
        let a = self.multi_index(from);
        let b = self.multi_index(to);
        let n = self.size as i64;
        let mut d = [0.0; 3];
        for ax in 0..self.dim {
            let mut o = (b[ax] as i64 - a[ax] as i64).rem_euclid(n);
            if o > n / 2 {
                o -= n;
            }
            d[ax] = o as f64 * self.spacing();
        }
        d
    }

    pub fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Real periodic function sampled on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("{} values for {} grid points", values.len(), grid.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("grid function has non-finite values");
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..grid.dim()])
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn minus_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `f(x + shift)` for an integer lattice shift in grid units.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        let g = self.grid;
        let values = (0..g.len())
            .map(|i| {
                let m = g.multi_index(i);
                let mut t = [0i64; 3];
                for a in 0..g.dim() {
                    t[a] = m[a] as i64 + shift.get(a).copied().unwrap_or(0);
                }
                self.values[g.wrapped_index(&t)]
            })
            .collect();
        GridFunction { grid: g, values }
    }

    /// `L^2` inner product `h^n Σ f g`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        dft(self).eval_at(x)
    }
}

/// Fourier coefficients on the balanced lattice, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.coeffs[self.grid.frequency_index(k)]
    }

    fn axis_factor(&self, k: i64, x: f64, derivative: bool) -> Complex64 {
        let tau = 2.0 * std::f64::consts::PI;
        let nyq = -(self.grid.size() as i64) / 2;
        if k == nyq {
            let w = tau * k as f64;
            if derivative {
                Complex64::new(-w * (w * x).sin(), 0.0)
            } else {
                Complex64::new((w * x).cos(), 0.0)
            }
        } else {
            let w = tau * k as f64;
            let e = Complex64::new((w * x).cos(), (w * x).sin());
            if derivative {
                e * Complex64::new(0.0, w)
            } else {
                e
            }
        }
    }

    /// Real trigonometric interpolant at `x`; Nyquist modes use the cosine branch.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        self.eval_inner(x, None)
    }

    /// Partial derivative of the interpolant along `axis`.
    pub fn derivative_at(&self, x: &[f64], axis: usize) -> f64 {
        self.eval_inner(x, Some(axis))
    }

    fn eval_inner(&self, x: &[f64], deriv: Option<usize>) -> f64 {
        let g = self.grid;
        let mut total = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let k = g.frequency(i);
            let mut f = Complex64::new(1.0, 0.0);
            for a in 0..g.dim() {
                f *= self.axis_factor(k[a], x[a], deriv == Some(a));
            }
            total += (c * f).re;
        }
        total
    }
}

/// Orders and exponents appearing in the regularity estimates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularityOrders {
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
    pub t: f64,
    pub t_tilde: Option<f64>,
    pub p: f64,
    pub q: f64,
}

pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

impl RegularityOrders {
    /// Orders with `s2 = 2s - s1`, `t = s` and `q = p'`.
    pub fn new(s: f64, s1: f64, p: f64) -> Result<Self> {
        let o = RegularityOrders { s, s1, s2: 2.0 * s - s1, t: s, t_tilde: None, p, q: conjugate(p) };
        o.validate()?;
        Ok(o)
    }

    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_conj(&self) -> f64 {
        conjugate(self.q)
    }

    pub fn validate(&self) -> Result<()> {
        let in01 = |v: f64| v > 0.0 && v < 1.0;
        if !in01(self.s) || !in01(self.s1) || !in01(self.s2) {
            return invalid(format!("orders s={}, s1={}, s2={} must lie in (0,1)", self.s, self.s1, self.s2));
        }
        if (self.s1 + self.s2 - 2.0 * self.s).abs() > 1e-12 {
            return invalid("s1 + s2 must equal 2s");
        }
        if !(self.p > 1.0 && self.p.is_finite() && self.q > 1.0 && self.q.is_finite()) {
            return invalid("integrability exponents must lie in (1, inf)");
        }
        if let Some(tt) = self.t_tilde {
            let lo = (2.0 * self.s - 1.0).max(0.0);
            if !(tt > lo && tt < 2.0 * self.s - self.t) {
                return invalid(format!("t_tilde {tt} outside ({lo}, {})", 2.0 * self.s - self.t));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_round_trip() {
        let g = TorusGrid::new(3, 4).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
            assert_eq!(g.frequency_index(&g.frequency(i)), i);
        }
        assert_eq!(g.point(0), [-0.5, -0.5, -0.5]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(4, 8).is_err());
        assert!(TorusGrid::new(1, 6).is_err());
        assert!(TorusGrid::new(1, 2).is_err());
    }

    #[test]
    fn orders_split() {
        let o = RegularityOrders::new(0.4, 0.6, 4.0).unwrap();
        assert!((o.s2 - 0.2).abs() < 1e-15);
        assert!((o.p_conj() - 4.0 / 3.0).abs() < 1e-15);
        assert!(RegularityOrders::new(0.4, 0.9, 4.0).is_err());
    }

    #[test]
    fn interpolant_hits_samples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0] * 3.0).sin() + x[1] * x[1]);
        let s = dft(&f);
        for i in [0, 5, 17, 63] {
            let x = g.point(i);
            assert!((s.eval_at(&x[..2]) - f.values[i]).abs() < 1e-12);
        }
    }
}
