use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Spherical cap `{h : angle(h, axis) < half_angle}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cap {
    pub axis: [f64; 3],
    pub half_angle: f64,
}

/// Finite union of spherical caps in `S^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    dim: usize,
    caps: Vec<Cap>,
}

fn dot(a: &[f64], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Cone {
    pub fn cap(dim: usize, axis: &[f64], half_angle: f64, symmetric: bool) -> Result<Self> {
        if !(1..=3).contains(&dim) || axis.len() != dim {
            return invalid("cone axis length must match the dimension");
        }
        if !(half_angle > 0.0 && half_angle <= PI / 2.0 + 1e-15) {
            return Err(Error::EmptyCone);
        }
        let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return invalid("cone axis must be a nonzero vector");
        }
        let mut a = [0.0; 3];
        for i in 0..dim {
            a[i] = axis[i] / norm;
        }
        let mut caps = vec![Cap { axis: a, half_angle }];
        if symmetric {
            caps.push(Cap { axis: [-a[0], -a[1], -a[2]], half_angle });
        }
        Ok(Cone { dim, caps })
    }

    /// The whole sphere, as a symmetrized hemisphere.
    pub fn full(dim: usize) -> Self {
        let mut axis = vec![0.0; dim];
        axis[0] = 1.0;
        Cone::cap(dim, &axis, PI / 2.0, true).expect("valid full sphere")
    }

    pub fn union(parts: &[Cone]) -> Result<Self> {
        let dim = parts.first().ok_or(Error::EmptyCone)?.dim;
        if parts.iter().any(|c| c.dim != dim) {
            return invalid("cone union across dimensions");
        }
        Ok(Cone { dim, caps: parts.iter().flat_map(|c| c.caps.clone()).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn contains(&self, h: &[f64]) -> bool {
        let norm = h.iter().take(self.dim).map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return false;
        }
        self.caps.iter().any(|c| {
            let cosang = (dot(&h[..self.dim], &c.axis) / norm).clamp(-1.0, 1.0);
            cosang.acos() < c.half_angle
        })
    }

    /// Disjoint arcs `[a, b)` with `0 <= a < b <= 2π` covering the cone in n = 2.
    pub fn arcs(&self) -> Vec<(f64, f64)> {
        let mut iv = Vec::new();
        for c in &self.caps {
            let phi = c.axis[1].atan2(c.axis[0]).rem_euclid(2.0 * PI);
            let (a, b) = (phi - c.half_angle, phi + c.half_angle);
            if a < 0.0 {
                iv.push((a + 2.0 * PI, 2.0 * PI));
                iv.push((0.0, b));
            } else if b > 2.0 * PI {
                iv.push((a, 2.0 * PI));
                iv.push((0.0, b - 2.0 * PI));
            } else {
                iv.push((a, b));
            }
        }
        iv.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, b) in iv {
            if let Some(last) = out.last_mut() {
                if a <= last.1 {
                    last.1 = last.1.max(b);
                    continue;
                }
            }
            out.push((a, b));
        }
        out
    }

    /// Endpoints of the arcs (n = 2); discontinuities of indicator kernels.
    pub fn arc_endpoints(&self) -> Vec<f64> {
        if self.dim != 2 {
            return Vec::new();
        }
        let mut v: Vec<f64> = self.arcs().iter().flat_map(|&(a, b)| [a, b]).collect();
        v.retain(|&t| t > 0.0 && t < 2.0 * PI);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        v
    }

    fn caps_disjoint(&self) -> bool {
        for (i, a) in self.caps.iter().enumerate() {
            for b in &self.caps[i + 1..] {
                let ang = dot(&a.axis, &b.axis).clamp(-1.0, 1.0).acos();
                if ang < a.half_angle + b.half_angle - 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    /// Spherical measure `|Σ|`.
    pub fn measure(&self) -> f64 {
        match self.dim {
            1 => [1.0, -1.0].iter().filter(|&&t| self.contains(&[t])).count() as f64,
            2 => self.arcs().iter().map(|(a, b)| b - a).sum(),
            _ => {
                if self.caps_disjoint() {
                    self.caps.iter().map(|c| 2.0 * PI * (1.0 - c.half_angle.cos())).sum()
                } else {
                    fibonacci_average(|t| if self.contains(t) { 1.0 } else { 0.0 }) * 4.0 * PI
                }
            }
        }
    }

    /// Directional second moment `∫_Σ |σ·θ|² dθ` for a unit vector σ.
    pub fn second_moment(&self, sigma: &[f64]) -> f64 {
        match self.dim {
            1 => [1.0, -1.0].iter().filter(|&&t| self.contains(&[t])).map(|t| (t * sigma[0]).powi(2)).sum(),
            2 => {
                let psi = sigma[1].atan2(sigma[0]);
                let prim = |u: f64| u / 2.0 + (2.0 * (u - psi)).sin() / 4.0;
                self.arcs().iter().map(|&(a, b)| prim(b) - prim(a)).sum()
            }
            _ => {
                if self.caps_disjoint() {
                    self.caps
                        .iter()
                        .map(|c| {
                            let cv = dot(sigma, &c.axis);
                            let sv2 = (1.0 - cv * cv).max(0.0);
                            let cl = c.half_angle.cos();
                            2.0 * PI * cv * cv * (1.0 - cl.powi(3)) / 3.0
                                + PI * sv2 * (2.0 / 3.0 - cl + cl.powi(3) / 3.0)
                        })
                        .sum()
                } else {
                    fibonacci_average(|t| if self.contains(t) { dot(sigma, &[t[0], t[1], t[2]]).powi(2) } else { 0.0 })
                        * 4.0
                        * PI
                }
            }
        }
    }
}

pub(crate) fn fibonacci_point(i: usize, count: usize) -> [f64; 3] {
    let golden = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
    let rad = (1.0 - z * z).max(0.0).sqrt();
    let th = golden * i as f64;
    [rad * th.cos(), rad * th.sin(), z]
}

fn fibonacci_average(f: impl Fn(&[f64]) -> f64) -> f64 {
    let count = 200_000;
    (0..count).map(|i| f(&fibonacci_point(i, count))).sum::<f64>() / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_cone_excludes_orthogonal() {
        let c = Cone::cap(2, &[1.0, 0.0], PI / 4.0, true).unwrap();
        assert!(!c.contains(&[0.0, 1.0]));
        assert!(c.contains(&[1.0, 0.2]));
        assert!(c.contains(&[-1.0, -0.2]));
        assert!((c.measure() - PI).abs() < 1e-14);
    }

    #[test]
    fn full_sphere_measures() {
        assert_eq!(Cone::full(1).measure(), 2.0);
        assert!((Cone::full(2).measure() - 2.0 * PI).abs() < 1e-14);
        assert!((Cone::full(3).measure() - 4.0 * PI).abs() < 1e-12);
        assert!((Cone::full(2).second_moment(&[0.6, 0.8]) - PI).abs() < 1e-14);
        assert!((Cone::full(3).second_moment(&[0.0, 0.6, 0.8]) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_angle_is_empty() {
        assert!(matches!(Cone::cap(2, &[1.0, 0.0], 0.0, false), Err(Error::EmptyCone)));
    }

    #[test]
    fn overlapping_arcs_merge() {
        let a = Cone::cap(2, &[1.0, 0.0], 0.5, false).unwrap();
        let b = Cone::cap(2, &[0.3_f64.cos(), 0.3_f64.sin()], 0.5, false).unwrap();
        let u = Cone::union(&[a, b]).unwrap();
        assert!(u.measure() < 2.0 && u.measure() > 1.0);
    }
}
