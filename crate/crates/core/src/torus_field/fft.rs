use super::{GridFunction, SpectralField, TorusGrid};
use crate::error::{invalid, Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized transform along every axis of a row-major buffer.
pub(crate) fn fft_nd(grid: &TorusGrid, buf: &mut [Complex64], inverse: bool) {
    let n = grid.size();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let total = grid.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = buf[start + j * stride];
            }
            plan.process(&mut line);
            for (j, l) in line.iter().enumerate() {
                buf[start + j * stride] = *l;
            }
        }
    }
}

fn parity(k: &[i64; 3]) -> f64 {
    if (k[0] + k[1] + k[2]).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficients `(1/N^n) Σ_j f(x_j) e^{-2πi k·x_j}`; the constant 1 maps to the unit mode.
pub fn dft(f: &GridFunction) -> SpectralField {
    let g = f.grid;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&g, &mut buf, false);
    let norm = 1.0 / g.len() as f64;
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= norm * parity(&g.frequency(i));
    }
    SpectralField { grid: g, coeffs: buf }
}

pub fn idft(s: &SpectralField) -> GridFunction {
    let g = s.grid;
    let mut buf: Vec<Complex64> =
        s.coeffs.iter().enumerate().map(|(i, &c)| c * parity(&g.frequency(i))).collect();
    fft_nd(&g, &mut buf, true);
    GridFunction { grid: g, values: buf.iter().map(|c| c.re).collect() }
}

/// Apply a real Fourier multiplier `k -> m(k)`.
pub fn multiplier(f: &GridFunction, m: impl Fn(&[i64; 3]) -> f64) -> GridFunction {
    let mut s = dft(f);
    for (i, c) in s.coeffs.iter_mut().enumerate() {
        *c *= m(&f.grid.frequency(i));
    }
    idft(&s)
}

/// `Δ^{σ/2}` with multiplier `|k|^σ` on nonzero modes; the zero mode is removed.
pub fn frac_laplacian(f: &GridFunction, order: f64) -> Result<GridFunction> {
    if !(order > -2.0 && order <= 2.0) {
        return invalid(format!("order {order} outside (-2, 2]"));
    }
    if order < 0.0 {
        let mean = f.mean();
        if mean.abs() > 1e-10 * f.max_abs().max(1.0) {
            return Err(Error::NegativeOrderNonzeroMean { order, mean });
        }
    }
    Ok(multiplier(f, |k| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(order / 2.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_unit_mode() {
        let g = TorusGrid::new(2, 8).unwrap();
        let s = dft(&GridFunction::constant(g, 1.0));
        assert!((s.coeffs[0].re - 1.0).abs() < 1e-14);
        assert!(s.coeffs[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn cosine_mode() {
        let g = TorusGrid::new(1, 16).unwrap();
        let s = dft(&GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).cos()));
        assert!((s.coeff(&[1]).re - 0.5).abs() < 1e-14);
        assert!((s.coeff(&[-1]).re - 0.5).abs() < 1e-14);
        assert!(s.coeff(&[2]).norm() < 1e-14);
    }

    #[test]
    fn frac_laplacian_examples() {
        let g = TorusGrid::new(1, 32).unwrap();
        let f = GridFunction::from_fn(g, |x| (4.0 * PI * x[0]).cos());
        let out = frac_laplacian(&f, 0.5).unwrap();
        for (a, b) in out.values.iter().zip(&f.values) {
            assert!((a - 2f64.sqrt() * b).abs() < 1e-12);
        }
        let c = GridFunction::constant(g, 3.0);
        assert!(frac_laplacian(&c, 1.2).unwrap().max_abs() < 1e-14);
        assert!(matches!(frac_laplacian(&c, -0.5), Err(Error::NegativeOrderNonzeroMean { .. })));
        assert!(frac_laplacian(&f, 2.5).is_err());
    }
}
