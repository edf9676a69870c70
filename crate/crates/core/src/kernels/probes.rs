use std::f64::consts::PI;

const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point `i` in `[0,1)^d`, skipping the origin.
pub fn halton(i: usize, d: usize) -> Vec<f64> {
    (0..d).map(|k| radical_inverse(i as u64 + 1, PRIMES[k])).collect()
}

/// Unit direction in `S^{n-1}` from `n-1` (or one for n = 1) uniform coordinates.
pub fn direction_from(u: &[f64], n: usize) -> [f64; 3] {
    match n {
        1 => [if u[0] < 0.5 { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let t = 2.0 * PI * u[0];
            [t.cos(), t.sin(), 0.0]
        }
        _ => {
            let z = 2.0 * u[0] - 1.0;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let t = 2.0 * PI * u[1];
            [rad * t.cos(), rad * t.sin(), z]
        }
    }
}

/// Point of the unit ball from `n` uniform coordinates.
pub fn ball_point(u: &[f64], n: usize) -> [f64; 3] {
    let mut x = [0.0; 3];
    if n == 1 {
        x[0] = 2.0 * u[0] - 1.0;
        return x;
    }
    let rad = u[0].powf(1.0 / n as f64);
    let dir = direction_from(&u[1..], n);
    for a in 0..n {
        x[a] = rad * dir[a];
    }
    x
}

/// One quasi-random kernel probe: offset in the unit ball, radius fraction, direction.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub offset: [f64; 3],
    pub radius: f64,
    pub dir: [f64; 3],
}

pub fn probe(i: usize, n: usize) -> Probe {
    let dd = if n == 1 { 1 } else { n - 1 };
    let u = halton(i, n + 1 + dd);
    Probe { offset: ball_point(&u[..n], n), radius: u[n], dir: direction_from(&u[n + 1..], n) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn probes_are_unit_directions() {
        for n in 1..=3 {
            for i in 0..50 {
                let p = probe(i, n);
                let d: f64 = p.dir.iter().map(|c| c * c).sum();
                assert!((d - 1.0).abs() < 1e-12);
                assert!(p.radius >= 0.0 && p.radius < 1.0);
                assert!(p.offset.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-12);
            }
        }
    }
}
