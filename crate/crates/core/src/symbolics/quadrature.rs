//! Gauss–Legendre rules and the radial profile `J(X) = ∫_0^X (1 - cos t) t^{-1-2s} dt`.

use rustfft::num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `q`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&q) {
        return r.clone();
    }
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=q {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { z } else { p1 };
            let pm = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * pq - pm) / (z * z - 1.0);
            let dz = pq / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[q - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    cache.lock().unwrap().insert(q, (x.clone(), w.clone()));
    (x, w)
}

/// Composite rule on `[a, b]` with `panels` equal panels of `q` nodes.
pub fn composite(a: f64, b: f64, panels: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(q);
    let mut x = Vec::with_capacity(panels * q);
    let mut w = Vec::with_capacity(panels * q);
    let len = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * len;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * len * (xi + 1.0));
            w.push(0.5 * len * wi);
        }
    }
    (x, w)
}

/// Composite rule over `[a, b]` split at `breaks`, each piece with panels proportional to its length.
pub fn piecewise(a: f64, b: f64, breaks: &[f64], panels_per_unit: f64, q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pts: Vec<f64> = vec![a];
    pts.extend(breaks.iter().copied().filter(|&t| t > a + 1e-14 && t < b - 1e-14));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut x, mut w) = (Vec::new(), Vec::new());
    for win in pts.windows(2) {
        let len = win[1] - win[0];
        if len <= 0.0 {
            continue;
        }
        let panels = ((len * panels_per_unit).ceil() as usize).max(1);
        let (px, pw) = composite(win[0], win[1], panels, q);
        x.extend(px);
        w.extend(pw);
    }
    (x, w)
}

const SERIES_LIMIT: f64 = 1.0;
const TABLE_LIMIT: f64 = 256.0;
const STEP: f64 = 1.0 / 32.0;

/// `J(X)` for one order `s`: series near 0, a quintic Hermite table, then the
/// large-argument expansion.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    s: f64,
    values: Vec<f64>,
    limit: f64,
}

impl RadialProfile {
    pub fn new(s: f64) -> Self {
        let count = ((TABLE_LIMIT - SERIES_LIMIT) / STEP).round() as usize + 1;
        let mut values = Vec::with_capacity(count);
        let mut acc = graded_value(s, SERIES_LIMIT);
        values.push(acc);
        let (gx, gw) = gauss_legendre(16);
        for i in 1..count {
            let a = SERIES_LIMIT + (i - 1) as f64 * STEP;
            let mut part = 0.0;
            for (xi, wi) in gx.iter().zip(&gw) {
                let t = a + 0.5 * STEP * (xi + 1.0);
                part += 0.5 * STEP * wi * integrand(s, t);
            }
            acc += part;
            values.push(acc);
        }
        let last = values[count - 1];
        let limit = last + TABLE_LIMIT.powf(-2.0 * s) / (2.0 * s) - cosine_tail(1.0 + 2.0 * s, TABLE_LIMIT);
        RadialProfile { s, values, limit }
    }

    /// Process-wide instance for `s`.
    pub fn shared(s: f64) -> Arc<RadialProfile> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<RadialProfile>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(p) = cache.lock().unwrap().get(&s.to_bits()) {
            return p.clone();
        }
        let p = Arc::new(RadialProfile::new(s));
        cache.lock().unwrap().insert(s.to_bits(), p.clone());
        p
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// `J(∞) = ∫_0^∞ (1 - cos t) t^{-1-2s} dt`.
    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        if x <= SERIES_LIMIT {
            return series(self.s, x);
        }
        if x >= TABLE_LIMIT {
            return self.limit - x.powf(-2.0 * self.s) / (2.0 * self.s) + cosine_tail(1.0 + 2.0 * self.s, x);
        }
        let t = (x - SERIES_LIMIT) / STEP;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let u = t - i as f64;
        let (x0, x1) = (SERIES_LIMIT + i as f64 * STEP, SERIES_LIMIT + (i + 1) as f64 * STEP);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (integrand(self.s, x0) * STEP, integrand(self.s, x1) * STEP);
        let (e0, e1) = (derivative(self.s, x0) * STEP * STEP, derivative(self.s, x1) * STEP * STEP);
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        let h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        let h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let h21 = 0.5 * (u3 - 2.0 * u4 + u5);
        h00 * f0 + h10 * d0 + h20 * e0 + h01 * f1 + h11 * d1 + h21 * e1
    }

    /// `∫_0^ρ (1 - cos(2π a r)) r^{-1-2s} dr`.
    pub fn radial(&self, a: f64, rho: f64) -> f64 {
        let b = 2.0 * std::f64::consts::PI * a.abs();
        if b == 0.0 {
            return 0.0;
        }
        b.powf(2.0 * self.s) * self.eval(b * rho)
    }
}

/// `∫_x^∞ cos t · t^{-a} dt` by its asymptotic expansion, for large `x`.
fn cosine_tail(a: f64, x: f64) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut c = 1.0;
    let mut phase = Complex64::new(1.0, 0.0);
    for j in 0..16 {
        sum += phase * c;
        c *= (a + j as f64) / x;
        phase *= Complex64::new(0.0, -1.0);
    }
    (Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, x) * sum).re * x.powf(-a)
}

fn integrand(s: f64, t: f64) -> f64 {
    let one_minus_cos = 2.0 * (0.5 * t).sin().powi(2);
    one_minus_cos * t.powf(-1.0 - 2.0 * s)
}

fn derivative(s: f64, t: f64) -> f64 {
    let one_minus_cos = 2.0 * (0.5 * t).sin().powi(2);
    t.sin() * t.powf(-1.0 - 2.0 * s) - (1.0 + 2.0 * s) * one_minus_cos * t.powf(-2.0 - 2.0 * s)
}

/// Power series of `J` about the origin.
pub fn series(s: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut fact = 1.0;
    for j in 1..30 {
        fact *= ((2 * j - 1) * (2 * j)) as f64;
        let e = 2.0 * j as f64 - 2.0 * s;
        let term = x.powf(e) / (fact * e);
        total += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 * total.abs() {
            break;
        }
    }
    total
}

/// `J(x)` from dyadic shells down to `1e-8`, the innermost cell closed by its leading term.
pub fn graded_value(s: f64, x: f64) -> f64 {
    let (gx, gw) = gauss_legendre(16);
    let r_min = 1e-8 * x;
    let mut total = r_min.powf(2.0 - 2.0 * s) / (2.0 * (2.0 - 2.0 * s));
    let mut hi = x;
    while hi > r_min {
        let lo = (0.5 * hi).max(r_min);
        let len = hi - lo;
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = lo + 0.5 * len * (xi + 1.0);
            total += 0.5 * len * wi * integrand(s, t);
        }
        hi = lo;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_matches_series() {
        for s in [0.1, 0.5, 0.9] {
            let a = graded_value(s, 1.0);
            let b = series(s, 1.0);
            assert!((a - b).abs() < 1e-13 * b, "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn profile_limits() {
        let p = RadialProfile::new(0.5);
        assert!((p.limit() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let q = RadialProfile::new(0.3);
        assert!((q.limit() - 2.17300244508762).abs() < 1e-11);
    }

    #[test]
    fn expansion_matches_table() {
        let s = 0.4;
        let p = RadialProfile::new(s);
        let direct = p.eval(200.0) + {
            let (nx, nw) = composite(200.0, 300.0, 800, 16);
            nx.iter().zip(&nw).map(|(t, w)| w * integrand(s, *t)).sum::<f64>()
        };
        assert!((p.eval(300.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn interpolation_matches_direct() {
        let s = 0.3;
        let p = RadialProfile::new(s);
        for x in [1.01, 3.3, 17.77, 49.9] {
            let direct = graded_value(s, 1.0) + {
                let (nx, nw) = composite(1.0, x, 400, 16);
                nx.iter().zip(&nw).map(|(t, w)| w * integrand(s, *t)).sum::<f64>()
            };
            assert!((p.eval(x) - direct).abs() < 1e-12, "{x}");
        }
    }
}
