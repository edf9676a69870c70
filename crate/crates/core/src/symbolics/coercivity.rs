use super::symbol::Symbol;
use crate::error::{invalid, Error, Result};
use crate::kernels::Cone;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Slack added to every per-mode comparison.
pub const COERCIVITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitConstant {
    pub r0: f64,
    pub f_min: f64,
    /// Minimizing direction σ₀.
    pub sigma: [f64; 3],
    pub c_explicit: f64,
}

/// First positive root of `1 - cos(2t) - t²/4`.
pub fn first_root() -> f64 {
    let g = |t: f64| 1.0 - (2.0 * t).cos() - t * t / 4.0;
    let step = 1e-3;
    let mut a = step;
    while g(a + step) > 0.0 {
        a += step;
    }
    let mut b = a + step;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn minimize_moment(cone: &Cone) -> (f64, [f64; 3]) {
    match cone.dim() {
        1 => (cone.second_moment(&[1.0]), [1.0, 0.0, 0.0]),
        2 => {
            let f = |psi: f64| cone.second_moment(&[psi.cos(), psi.sin()]);
            let count = 720;
            let step = PI / count as f64;
            let best = (0..count).min_by(|&i, &j| f(i as f64 * step).total_cmp(&f(j as f64 * step))).unwrap();
            let c = best as f64 * step;
            let psi = golden_min(f, c - step, c + step);
            (f(psi), [psi.cos(), psi.sin(), 0.0])
        }
        _ => {
            let count = 10_000;
            let mut best = (f64::INFINITY, [0.0; 3]);
            for i in 0..count {
                let p = crate::kernels::fibonacci_point(i, count);
                let v = cone.second_moment(&p);
                if v < best.0 {
                    best = (v, p);
                }
            }
            let (mut val, mut sigma) = best;
            let mut step = 0.05;
            while step > 1e-10 {
                let mut improved = false;
                for a in 0..3 {
                    for sgn in [-1.0, 1.0] {
                        let mut q = sigma;
                        q[a] += sgn * step;
                        let nn = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                        for c in q.iter_mut() {
                            *c /= nn;
                        }
                        let v = cone.second_moment(&q);
                        if v < val {
                            val = v;
                            sigma = q;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            (val, sigma)
        }
    }
}

/// `(r₀, f_min, c)` with `c = η r₀^{2-2s} f_min / (8(1-s))`.
pub fn explicit_constant(cone: &Cone, eta: f64, s: f64) -> Result<ExplicitConstant> {
    if cone.measure() <= 0.0 {
        return Err(Error::EmptyCone);
    }
    if !(s > 0.0 && s < 1.0) || !(eta >= 0.0) {
        return invalid("explicit constant needs s in (0,1) and eta >= 0");
    }
    let r0 = first_root();
    let (f_min, sigma) = minimize_moment(cone);
    let c_explicit = eta * r0.powf(2.0 - 2.0 * s) * f_min / (8.0 * (1.0 - s));
    Ok(ExplicitConstant { r0, f_min, sigma, c_explicit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRatio {
    pub k: Vec<i64>,
    pub m: f64,
    pub k_pow: f64,
    pub ratio: f64,
    pub error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityCertificate {
    pub eta: f64,
    pub s: f64,
    pub cone: Cone,
    pub constant: ExplicitConstant,
    pub kmax: usize,
    pub modes: Vec<ModeRatio>,
    pub min_ratio: f64,
    pub argmin: Vec<i64>,
    pub pass: bool,
}

/// Compares `m(k)/|k|^{2s}` with the explicit constant on every computed mode.
pub fn verify_coercivity(sym: &Symbol, cone: &Cone, eta: f64) -> Result<CoercivityCertificate> {
    if cone.dim() != sym.grid.dim() {
        return Err(Error::GridMismatch("cone and symbol dimensions differ".into()));
    }
    let constant = explicit_constant(cone, eta, sym.s)?;
    let n = sym.grid.dim();
    let c = constant.c_explicit;
    let mut modes = Vec::new();
    let (mut min_ratio, mut argmin) = (f64::INFINITY, Vec::new());
    for (k, m, err) in sym.modes() {
        let k_pow = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt().powf(2.0 * sym.s);
        let ratio = m / k_pow;
        let pass = ratio >= c - COERCIVITY_SLACK - err / k_pow;
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = k[..n].to_vec();
        }
        modes.push(ModeRatio { k: k[..n].to_vec(), m, k_pow, ratio, error: err, pass });
    }
    let pass = modes.iter().all(|m| m.pass);
    Ok(CoercivityCertificate { eta, s: sym.s, cone: cone.clone(), constant, kmax: sym.kmax, modes, min_ratio, argmin, pass })
}

impl CoercivityCertificate {
    /// Structured text report.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[certificate]");
        let _ = writeln!(out, "pass = {}", self.pass);
        let _ = writeln!(out, "eta = {:.12e}", self.eta);
        let _ = writeln!(out, "s = {:.12e}", self.s);
        let _ = writeln!(out, "cone_measure = {:.12e}", self.cone.measure());
        let _ = writeln!(out, "r0 = {:.15e}", self.constant.r0);
        let _ = writeln!(out, "f_min = {:.15e}", self.constant.f_min);
        let _ = writeln!(out, "c_explicit = {:.15e}", self.constant.c_explicit);
        let _ = writeln!(out, "kmax = {}", self.kmax);
        let _ = writeln!(out, "modes = {}", self.modes.len());
        let _ = writeln!(out, "min_ratio = {:.15e}", self.min_ratio);
        let _ = writeln!(out, "argmin = {:?}", self.argmin);
        let _ = writeln!(out, "failures = {}", self.modes.iter().filter(|m| !m.pass).count());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_value() {
        let r = first_root();
        assert!((r - 2.232126591897555).abs() < 1e-12);
        for i in 1..=10_000 {
            let t = r * i as f64 / 10_000.0;
            assert!(1.0 - (2.0 * t).cos() >= t * t / 4.0 - 1e-12);
        }
    }

    #[test]
    fn full_circle_moment_is_pi() {
        let e = explicit_constant(&Cone::full(2), 1.0, 0.5).unwrap();
        assert!((e.f_min - PI).abs() < 1e-12);
    }

    #[test]
    fn linear_in_eta() {
        let c = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
        let a = explicit_constant(&c, 1.0, 0.3).unwrap().c_explicit;
        let b = explicit_constant(&c, 10.0, 0.3).unwrap().c_explicit;
        assert!((b - 10.0 * a).abs() < 1e-12 * b);
        assert_eq!(explicit_constant(&c, 0.0, 0.3).unwrap().c_explicit, 0.0);
    }

    #[test]
    fn three_dimensional_cap_minimum() {
        let c = Cone::cap(3, &[0.0, 0.0, 1.0], 0.4, true).unwrap();
        let e = explicit_constant(&c, 1.0, 0.5).unwrap();
        let side = c.second_moment(&[1.0, 0.0, 0.0]);
        assert!((e.f_min - side).abs() < 1e-9);
    }
}
