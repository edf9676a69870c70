//! Variable-coefficient problems by freezing the kernel at a point: cutoff
//! localization, the deviation and commutator forms, the contraction loop and
//! the ball-cover regularity ladder.
//!
//! Everything is assembled in normalized coordinates `ξ = (x - x₀)/(30R)`, in
//! which the period cell is `[-1/2, 1/2)^n`, the cutoff `η` is one on
//! `B(1/6)` and vanishes outside `B(1/5)`, and the deviation form lives on
//! `B(1/3)`.

mod bootstrap;
mod forms;
mod iterate;

pub use bootstrap::{bootstrap_regularity, cover_centers, ladder, BootstrapTarget, LadderReport, Rung};
pub use forms::{assemble_forms, FormTerms, FrozenForms, IdentityCheck, Source};
pub use iterate::{fixed_point_solve, increment_order, FixedPointOptions, FixedPointResult, IterationTrace};

use crate::error::{invalid, Error, Result};
use crate::torus_field::{GridFunction, TorusGrid};
use serde::{Deserialize, Serialize};

/// Plateau radius of `η` in normalized units.
pub const PLATEAU: f64 = 1.0 / 6.0;
/// Support radius of `η` in normalized units.
pub const SUPPORT: f64 = 1.0 / 5.0;
/// Radius of the deviation-form ball in normalized units.
pub const INNER: f64 = 1.0 / 3.0;
/// Side of the period cell in units of `R`.
pub const CELL_SCALE: f64 = 30.0;

/// Physical grid `[-L/2, L/2)^n` with `size` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub dim: usize,
    pub size: usize,
    pub length: f64,
    #[serde(default = "yes")]
    pub periodic: bool,
}

fn yes() -> bool {
    true
}

impl Domain {
    pub fn new(dim: usize, size: usize, length: f64, periodic: bool) -> Result<Self> {
        let d = Domain { dim, size, length, periodic };
        d.grid()?;
        if !(length > 0.0 && length.is_finite()) {
            return invalid("domain length must be positive");
        }
        Ok(d)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.size)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.size as f64
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let g = TorusGrid::new(self.dim, self.size).expect("validated domain");
        let mut p = g.point(idx);
        for c in p.iter_mut().take(self.dim) {
            *c *= self.length;
        }
        p
    }
}

/// Smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    f(t) / (f(t) + f(1.0 - t))
}

/// Radial cutoff, one on `B(PLATEAU)` and zero outside `B(SUPPORT)`.
pub fn inner_cutoff(r: f64) -> f64 {
    1.0 - smooth_step((r - PLATEAU) / (SUPPORT - PLATEAU))
}

/// Tensor cutoff, one on `[-1/2, 1/2]^n` and zero outside `(-1, 1)^n`.
pub fn outer_cutoff(xi: &[f64]) -> f64 {
    xi.iter().map(|&c| 1.0 - smooth_step((c.abs() - 0.5) / 0.5)).product()
}

/// Cutoffs and index maps for one ball `B(x₀, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationSpec {
    pub domain: Domain,
    pub center: Vec<f64>,
    pub center_index: [i64; 3],
    pub radius: f64,
    /// Period cell grid with `N = 30R/h` points per axis.
    pub cell: TorusGrid,
    /// Integer offsets from the center per domain point (wrapped when periodic).
    pub offsets: Vec<[i64; 3]>,
    /// `η` per domain point.
    pub eta: Vec<f64>,
    /// `η̃` per domain point.
    pub eta_outer: Vec<f64>,
    /// Cell index of each domain point inside the cell.
    pub in_cell: Vec<Option<usize>>,
    /// Cell index of the periodic image of each domain point.
    pub image: Vec<usize>,
}

impl LocalizationSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn cell_size(&self) -> usize {
        self.cell.size()
    }

    /// `30R`.
    pub fn scale(&self) -> f64 {
        CELL_SCALE * self.radius
    }

    /// Normalized position of a domain point.
    pub fn normalized(&self, idx: usize) -> [f64; 3] {
        let n = self.cell.size() as f64;
        let o = self.offsets[idx];
        [o[0] as f64 / n, o[1] as f64 / n, o[2] as f64 / n]
    }

    pub fn normalized_radius(&self, idx: usize) -> f64 {
        let p = self.normalized(idx);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    /// `η` restricted to the cell.
    pub fn cell_eta(&self) -> GridFunction {
        let mut v = vec![0.0; self.cell.len()];
        for (x, c) in self.in_cell.iter().enumerate() {
            if let Some(c) = c {
                v[*c] = self.eta[x];
            }
        }
        GridFunction { grid: self.cell, values: v }
    }

    /// `f` restricted to the cell.
    pub fn restrict(&self, f: &GridFunction) -> GridFunction {
        let mut v = vec![0.0; self.cell.len()];
        for (x, c) in self.in_cell.iter().enumerate() {
            if let Some(c) = c {
                v[*c] = f.values[x];
            }
        }
        GridFunction { grid: self.cell, values: v }
    }

    /// Domain index of a cell point.
    pub fn domain_index(&self, cell_idx: usize) -> usize {
        let m = self.cell.multi_index(cell_idx);
        let half = (self.cell.size() / 2) as i64;
        let n = self.dim();
        let mut j = [0i64; 3];
        for a in 0..n {
            j[a] = self.center_index[a] + m[a] as i64 - half;
        }
        self.domain.grid().expect("validated domain").wrapped_index(&j[..n])
    }

    /// Checks `η(x₀) = 1`, `η = 1` on `B(1/6)` and `η = 0` off `B(1/5)` on every grid point.
    pub fn verify(&self) -> bool {
        self.eta.iter().enumerate().all(|(i, &e)| {
            let r = self.normalized_radius(i);
            (0.0..=1.0).contains(&e) && (r > PLATEAU || e == 1.0) && (r < SUPPORT || e == 0.0)
        })
    }
}

/// Localization around the grid point `x0` at scale `R`.
pub fn build_localization(domain: &Domain, x0: &[f64], radius: f64) -> Result<LocalizationSpec> {
    let n = domain.dim;
    let grid = domain.grid()?;
    if x0.len() != n {
        return invalid("center dimension differs from domain");
    }
    let h = domain.spacing();
    let cells = CELL_SCALE * radius / h;
    let size = cells.round() as usize;
    if !(radius > 0.0) || (cells - size as f64).abs() > 1e-9 * cells.max(1.0) || size < 4 || !size.is_power_of_two() {
        return invalid(format!("30R/h = {cells} must be a power of two >= 4"));
    }
    let big = 2.0 * CELL_SCALE * (n as f64).sqrt() * radius;
    let half = domain.length / 2.0;
    let fits = if domain.periodic { big <= half + 1e-12 } else { x0.iter().all(|&c| c - big >= -half - 1e-12 && c + big <= half - h + 1e-12) };
    if !fits {
        return Err(Error::BallTooLarge { center: x0.to_vec(), radius: big });
    }
    let mut center_index = [0i64; 3];
    for a in 0..n {
        let j = (x0[a] + half) / h;
        if (j - j.round()).abs() > 1e-9 * j.abs().max(1.0) {
            return invalid(format!("center coordinate {} is not a grid point", x0[a]));
        }
        center_index[a] = j.round() as i64;
    }
    let cell = TorusGrid::new(n, size)?;
    let m = domain.size as i64;
    let ns = size as i64;
    let mut offsets = Vec::with_capacity(grid.len());
    let mut eta = Vec::with_capacity(grid.len());
    let mut eta_outer = Vec::with_capacity(grid.len());
    let mut in_cell = Vec::with_capacity(grid.len());
    let mut image = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let mi = grid.multi_index(idx);
        let mut o = [0i64; 3];
        let mut xi = [0.0; 3];
        let mut inside = true;
        let mut ci = [0i64; 3];
        for a in 0..n {
            let mut d = mi[a] as i64 - center_index[a];
            if domain.periodic {
                d = (d + m / 2).rem_euclid(m) - m / 2;
            }
            o[a] = d;
            xi[a] = d as f64 / size as f64;
            inside &= d >= -ns / 2 && d < ns / 2;
            ci[a] = d + ns / 2;
        }
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        offsets.push(o);
        eta.push(inner_cutoff(r));
        eta_outer.push(outer_cutoff(&xi[..n]));
        in_cell.push(inside.then(|| cell.wrapped_index(&ci[..n])));
        image.push(cell.wrapped_index(&ci[..n]));
    }
    Ok(LocalizationSpec { domain: *domain, center: x0.to_vec(), center_index, radius, cell, offsets, eta, eta_outer, in_cell, image })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoffs_have_exact_plateau_and_support() {
        let d = Domain::new(1, 256, 4.0, true).unwrap();
        let loc = build_localization(&d, &[0.0], 64.0 * d.spacing() / 30.0).unwrap();
        assert_eq!(loc.cell_size(), 64);
        assert!(loc.verify());
        let c = loc.domain_index(32);
        assert_eq!(loc.eta[c], 1.0);
        assert_eq!(loc.in_cell[c], Some(32));
    }

    #[test]
    fn oversized_ball_rejected() {
        let d = Domain::new(1, 128, 2.0, true).unwrap();
        let r = 64.0 * d.spacing() / 30.0;
        assert!(matches!(build_localization(&d, &[0.0], r), Err(Error::BallTooLarge { .. })));
    }

    #[test]
    fn misaligned_radius_rejected() {
        let d = Domain::new(1, 256, 4.0, true).unwrap();
        assert!(build_localization(&d, &[0.0], 0.01).is_err());
    }

    #[test]
    fn outer_cutoff_is_one_on_cell() {
        assert_eq!(outer_cutoff(&[0.5, -0.49]), 1.0);
        assert_eq!(outer_cutoff(&[1.0, 0.0]), 0.0);
        assert!(outer_cutoff(&[0.75]) > 0.0 && outer_cutoff(&[0.75]) < 1.0);
    }
}
