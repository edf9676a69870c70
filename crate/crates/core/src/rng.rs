//! Seeded random streams. Every random draw in the crate goes through
//! [`stream`], so a run is reproducible from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent stream `id` derived from `seed`.
pub fn stream(seed: u64, id: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

pub fn uniform(r: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn normal(r: &mut Stream) -> f64 {
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn index(r: &mut Stream, len: usize) -> usize {
    r.random_range(0..len)
}

/// Uniform point on the unit sphere of R^n.
pub fn direction(r: &mut Stream, n: usize) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(n) {
            *c = normal(r);
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for c in v.iter_mut() {
                *c /= norm;
            }
            return v;
        }
    }
}
