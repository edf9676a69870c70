use super::{LocalizationSpec, INNER, SUPPORT};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::symbolics::{default_truncation, periodize, PeriodizedKernel, Symbol};
use crate::torus_field::{dft, GridFunction};
use rayon::prelude::*;

/// Right side of the equation solved by the ambient field.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `g[φ] := B_K(u, φ)` on the domain, so `u` solves the discrete equation exactly.
    Manufactured,
    /// `g[φ] = ∫ g φ dx` for a field on the domain.
    Field(GridFunction),
}

/// Kernel weights, cutoffs and the periodized frozen kernel for one ball.
#[derive(Debug, Clone)]
pub struct FrozenForms {
    pub loc: LocalizationSpec,
    pub kernel: Kernel,
    pub s: f64,
    pub mu: PeriodizedKernel,
    /// `μ` at the cell offsets.
    pub mu_weights: Vec<f64>,
    /// Symbol of the grid form with weights `μ`.
    pub symbol: Symbol,
    points: Vec<[f64; 3]>,
    /// Domain points with `η > 0`.
    support: Vec<usize>,
    /// Cell points in `B(1/3)` and `B(1/5)`, and the rest of the cell.
    inner: Vec<usize>,
    core: Vec<usize>,
    outer: Vec<usize>,
    /// Domain points outside the cell.
    exterior: Vec<usize>,
    /// `E(x, y) + E(y, x)` over `B(1/3)²`, row per inner point.
    deviation: Vec<Vec<(usize, f64)>>,
}

/// Representers of the functionals `ψ -> g[ηψ̃]` and `ψ -> 𝓖ᵢ(u, ψ)` on the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTerms {
    pub source: GridFunction,
    pub g: [GridFunction; 5],
}

impl FormTerms {
    pub fn total(&self) -> GridFunction {
        let mut t = self.source.clone();
        for gi in &self.g {
            for (a, b) in t.values.iter_mut().zip(&gi.values) {
                *a += b;
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `[g[ηψ̃], 𝓗, 𝓖₁, …, 𝓖₅]`.
    pub terms: [f64; 7],
    pub residual: f64,
    pub relative: f64,
}

fn norm(d: &[f64; 3]) -> f64 {
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub fn assemble_forms(k: &Kernel, loc: &LocalizationSpec, s: f64) -> Result<FrozenForms> {
    if k.dim != loc.dim() {
        return Err(Error::GridMismatch("kernel and domain dimensions differ".into()));
    }
    let n = loc.dim();
    let mu = periodize(k, &loc.center, s, default_truncation(n))?;
    let mu_weights = mu.grid_weights(&loc.cell);
    let symbol = Symbol::from_weights(&loc.cell, s, &mu_weights);
    let points: Vec<[f64; 3]> = (0..loc.offsets.len()).map(|i| loc.domain.point(i)).collect();
    let mut support = Vec::new();
    let mut exterior = Vec::new();
    for x in 0..loc.offsets.len() {
        if loc.eta[x] > 0.0 {
            support.push(x);
        }
        if loc.in_cell[x].is_none() {
            exterior.push(x);
        }
    }
    let (mut inner, mut core, mut outer) = (Vec::new(), Vec::new(), Vec::new());
    for x in 0..loc.offsets.len() {
        if loc.in_cell[x].is_some() {
            let r = loc.normalized_radius(x);
            if r < INNER {
                inner.push(x);
                if r < SUPPORT {
                    core.push(x);
                }
            } else {
                outer.push(x);
            }
        }
    }
    let mut forms = FrozenForms {
        loc: loc.clone(),
        kernel: k.clone(),
        s,
        mu,
        mu_weights,
        symbol,
        points,
        support,
        inner,
        core,
        outer,
        exterior,
        deviation: Vec::new(),
    };
    let deviation: Vec<Vec<(usize, f64)>> = forms
        .inner
        .par_iter()
        .map(|&x| {
            forms
                .inner
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| (forms.loc.in_cell[y].unwrap(), forms.deviation_weight(x, y) + forms.deviation_weight(y, x)))
                .collect()
        })
        .collect();
    forms.deviation = deviation;
    Ok(forms)
}

impl FrozenForms {
    fn h(&self) -> f64 {
        self.loc.cell.cell_volume()
    }

    /// Normalized displacement `x - y`, wrapped on periodic domains.
    fn delta(&self, x: usize, y: usize) -> [f64; 3] {
        let (a, b) = (self.loc.offsets[x], self.loc.offsets[y]);
        let m = self.loc.domain.size as i64;
        let nc = self.loc.cell.size() as f64;
        let mut d = [0.0; 3];
        for c in 0..self.loc.dim() {
            let mut v = a[c] - b[c];
            if self.loc.domain.periodic {
                v = (v + m / 2).rem_euclid(m) - m / 2;
            }
            d[c] = v as f64 / nc;
        }
        d
    }

    /// `K(x, |x-y|, (x-y)/|x-y|) / |x-y|^{n+2s}` in normalized coordinates.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let n = self.loc.dim();
        let d = self.delta(x, y);
        let r = norm(&d);
        let mut th = [0.0; 3];
        for a in 0..n {
            th[a] = d[a] / r;
        }
        self.kernel.eval(&self.points[x][..n], self.loc.scale() * r, &th[..n]) * r.powf(-(n as f64) - 2.0 * self.s)
    }

    /// `K(x₀, 0, d/|d|) / |d|^{n+2s}`.
    pub fn frozen_weight(&self, d: &[f64; 3]) -> f64 {
        let n = self.loc.dim();
        let r = norm(d);
        let mut th = [0.0; 3];
        for a in 0..n {
            th[a] = d[a] / r;
        }
        self.mu.direction(&th[..n]) * r.powf(-(n as f64) - 2.0 * self.s)
    }

    /// `E(x, y) = F(x - y) - W(x, y)`.
    pub fn deviation_weight(&self, x: usize, y: usize) -> f64 {
        self.frozen_weight(&self.delta(x, y)) - self.weight(x, y)
    }

    fn symmetric_weight(&self, x: usize, y: usize) -> f64 {
        self.weight(x, y) + self.weight(y, x)
    }

    /// `v = ηu` on the cell.
    pub fn localized(&self, u: &GridFunction) -> GridFunction {
        let mut v = vec![0.0; self.loc.cell.len()];
        for &x in &self.support {
            v[self.loc.in_cell[x].unwrap()] = self.loc.eta[x] * u.values[x];
        }
        GridFunction { grid: self.loc.cell, values: v }
    }

    /// Pulls a domain functional `ψ̃ -> Σ a ψ̃ hⁿ` back to the cell.
    pub fn pullback(&self, a: &[f64]) -> GridFunction {
        let mut out = vec![0.0; self.loc.cell.len()];
        for (x, &ax) in a.iter().enumerate() {
            if ax != 0.0 {
                out[self.loc.image[x]] += ax * self.loc.eta_outer[x];
            }
        }
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        for v in out.iter_mut() {
            *v -= mean;
        }
        GridFunction { grid: self.loc.cell, values: out }
    }

    fn cell_functional(&self, rows: Vec<(usize, f64)>) -> GridFunction {
        let mut out = vec![0.0; self.loc.cell.len()];
        for (c, v) in rows {
            out[c] += v;
        }
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        for v in out.iter_mut() {
            *v -= mean;
        }
        GridFunction { grid: self.loc.cell, values: out }
    }

    /// Representer of `ψ -> 𝓗(a, ψ)` over `B(1/3)²`.
    pub fn h_representer(&self, a: &GridFunction) -> GridFunction {
        let hn = self.h();
        let rows = self
            .inner
            .iter()
            .zip(&self.deviation)
            .map(|(&x, row)| {
                let cx = self.loc.in_cell[x].unwrap();
                let ax = a.values[cx];
                (cx, hn * row.iter().map(|&(cy, w)| w * (ax - a.values[cy])).sum::<f64>())
            })
            .collect();
        self.cell_functional(rows)
    }

    pub fn h_form(&self, a: &GridFunction, b: &GridFunction) -> Result<f64> {
        self.h_representer(a).inner(b)
    }

    /// True when the deviation weights vanish identically.
    pub fn deviation_vanishes(&self) -> bool {
        self.deviation.iter().all(|row| row.iter().all(|&(_, w)| w == 0.0))
    }

    /// `B_μ(a, b) = Σ_k 2 m(k) â(k) conj(b̂(k))` for the grid form.
    pub fn b_mu(&self, a: &GridFunction, b: &GridFunction) -> f64 {
        let (fa, fb) = (dft(a), dft(b));
        fa.coeffs
            .iter()
            .zip(&fb.coeffs)
            .zip(&self.symbol.values)
            .map(|((x, y), m)| 2.0 * m * (x * y.conj()).re)
            .sum()
    }

    /// Representers of the source and commutator terms for the ambient field `u`.
    pub fn terms(&self, u: &GridFunction, source: &Source) -> Result<FormTerms> {
        let dg = self.loc.domain.grid()?;
        dg.check_same(&u.grid)?;
        let hn = self.h();
        let eta = &self.loc.eta;
        let len = self.loc.offsets.len();
        let v = self.localized(u);
        let vd = |x: usize| self.loc.in_cell[x].map_or(0.0, |c| v.values[c]);
        let source_rep = match source {
            Source::Manufactured => {
                let mut a = vec![0.0; len];
                let vals: Vec<f64> = self
                    .support
                    .par_iter()
                    .map(|&z| {
                        let uz = u.values[z];
                        hn * eta[z]
                            * (0..len).filter(|&y| y != z).map(|y| self.symmetric_weight(z, y) * (uz - u.values[y])).sum::<f64>()
                    })
                    .collect();
                for (&z, val) in self.support.iter().zip(vals) {
                    a[z] = val;
                }
                self.pullback(&a)
            }
            Source::Field(g) => {
                dg.check_same(&g.grid)?;
                let c = self.loc.scale().powf(2.0 * self.s);
                let a: Vec<f64> = (0..len).map(|x| c * g.values[x] * eta[x]).collect();
                self.pullback(&a)
            }
        };
        let g1_rows: Vec<(usize, f64)> = (0..self.loc.cell.len())
            .into_par_iter()
            .map(|cz| {
                let zm = self.loc.cell.multi_index(cz);
                let vz = v.values[cz];
                let mut acc = 0.0;
                for cy in 0..self.loc.cell.len() {
                    let vy = v.values[cy];
                    if cy == cz || (vz == 0.0 && vy == 0.0) {
                        continue;
                    }
                    let ym = self.loc.cell.multi_index(cy);
                    let mut d = [0.0; 3];
                    let mut o = [0i64; 3];
                    let nc = self.loc.cell.size() as f64;
                    for a in 0..self.loc.dim() {
                        o[a] = zm[a] as i64 - ym[a] as i64;
                        d[a] = o[a] as f64 / nc;
                    }
                    let mu = self.mu_weights[self.loc.cell.wrapped_index(&o[..self.loc.dim()])];
                    let w = 2.0 * mu - self.frozen_weight(&d) - self.frozen_weight(&[-d[0], -d[1], -d[2]]);
                    acc += w * (vz - vy);
                }
                (cz, hn * acc)
            })
            .collect();
        let g1 = self.cell_functional(g1_rows);

        let mut a2 = vec![0.0; len];
        let ext: Vec<f64> = self
            .exterior
            .par_iter()
            .map(|&z| hn * self.core.iter().map(|&y| self.weight(z, y) * vd(y)).sum::<f64>())
            .collect();
        for (&z, val) in self.exterior.iter().zip(ext) {
            a2[z] += val;
        }
        let core2: Vec<f64> = self
            .core
            .par_iter()
            .map(|&z| -hn * vd(z) * self.exterior.iter().map(|&x| self.weight(x, z)).sum::<f64>())
            .collect();
        for (&z, val) in self.core.iter().zip(core2) {
            a2[z] += val;
        }
        let g2 = self.pullback(&a2);

        let mut a3 = vec![0.0; len];
        let core3: Vec<f64> = self
            .core
            .par_iter()
            .map(|&z| -hn * vd(z) * self.exterior.iter().map(|&y| self.weight(z, y)).sum::<f64>())
            .collect();
        for (&z, val) in self.core.iter().zip(core3) {
            a3[z] += val;
        }
        let ext3: Vec<f64> = self
            .exterior
            .par_iter()
            .map(|&z| hn * self.core.iter().map(|&x| self.weight(x, z) * vd(x)).sum::<f64>())
            .collect();
        for (&z, val) in self.exterior.iter().zip(ext3) {
            a3[z] += val;
        }
        let g3 = self.pullback(&a3);

        let mut rows4: Vec<(usize, f64)> = self
            .core
            .par_iter()
            .map(|&z| {
                let vz = vd(z);
                let acc: f64 = self
                    .outer
                    .iter()
                    .map(|&y| (self.deviation_weight(z, y) + self.deviation_weight(y, z)) * vz)
                    .sum();
                (self.loc.in_cell[z].unwrap(), hn * acc)
            })
            .collect();
        let outer4: Vec<(usize, f64)> = self
            .outer
            .par_iter()
            .map(|&z| {
                let acc: f64 = self
                    .core
                    .iter()
                    .map(|&y| (self.deviation_weight(z, y) + self.deviation_weight(y, z)) * -vd(y))
                    .sum();
                (self.loc.in_cell[z].unwrap(), hn * acc)
            })
            .collect();
        rows4.extend(outer4);
        let g4 = self.cell_functional(rows4);

        let in_support: Vec<bool> = eta.iter().map(|&e| e > 0.0).collect();
        let a5: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|z| {
                let ez = eta[z];
                let term = |y: usize| (ez - eta[y]) * u.values[y] * self.symmetric_weight(z, y);
                let acc: f64 = if in_support[z] {
                    (0..len).filter(|&y| y != z).map(term).sum()
                } else {
                    self.support.iter().map(|&y| term(y)).sum()
                };
                hn * acc
            })
            .collect();
        let g5 = self.pullback(&a5);
        Ok(FormTerms { source: source_rep, g: [g1, g2, g3, g4, g5] })
    }

    /// `B_μ(ηu, ψ)` against `g[ηψ̃] + 𝓗(ηu, ψ) + Σ 𝓖ᵢ(u, ψ)` for one probe.
    pub fn identity_check(&self, u: &GridFunction, terms: &FormTerms, psi: &GridFunction) -> Result<IdentityCheck> {
        let v = self.localized(u);
        let lhs = self.b_mu(&v, psi);
        let hrep = self.h_representer(&v);
        let mut t = [0.0; 7];
        t[0] = terms.source.inner(psi)?;
        t[1] = hrep.inner(psi)?;
        for i in 0..5 {
            t[2 + i] = terms.g[i].inner(psi)?;
        }
        let rhs: f64 = t.iter().sum();
        let scale = lhs.abs() + t.iter().map(|x| x.abs()).sum::<f64>();
        let residual = (lhs - rhs).abs();
        Ok(IdentityCheck { lhs, rhs, terms: t, residual, relative: if scale > 0.0 { residual / scale } else { 0.0 } })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frozen_solver::{build_localization, Domain};
    use crate::kernels::{constant_kernel, modulated_kernel};
    use crate::rng;

    fn probe(grid: crate::torus_field::TorusGrid, seed: u64) -> GridFunction {
        let mut st = rng::stream(seed, 0);
        GridFunction { grid, values: (0..grid.len()).map(|_| rng::normal(&mut st)).collect() }
    }

    #[test]
    fn constant_kernel_has_no_deviation() {
        let d = Domain::new(1, 128, 1.0, true).unwrap();
        let loc = build_localization(&d, &[0.0], 0.25 / 30.0 / 2.0).unwrap();
        let forms = assemble_forms(&constant_kernel(1.0, 0.4, 1).unwrap(), &loc, 0.4).unwrap();
        assert!(forms.deviation_vanishes());
        let a = probe(loc.cell, 1);
        assert_eq!(forms.h_representer(&a).max_abs(), 0.0);
    }

    #[test]
    fn decomposition_identity_two_dimensions() {
        let d = Domain::new(2, 64, 1.0, true).unwrap();
        let loc = build_localization(&d, &[0.0, 0.0], 8.0 / 64.0 / 30.0).unwrap();
        let k = modulated_kernel(1.0, 0.1, 1.0, 0, 0.6, 2).unwrap();
        let forms = assemble_forms(&k, &loc, 0.6).unwrap();
        let u = probe(d.grid().unwrap(), 2);
        let terms = forms.terms(&u, &Source::Manufactured).unwrap();
        for seed in 0..5 {
            let c = forms.identity_check(&u, &terms, &probe(loc.cell, 10 + seed)).unwrap();
            assert!(c.relative < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn constant_field_is_homogeneous_solution() {
        let d = Domain::new(1, 128, 1.0, true).unwrap();
        let loc = build_localization(&d, &[0.0], 0.25 / 30.0 / 2.0).unwrap();
        let forms = assemble_forms(&modulated_kernel(1.0, 0.2, 1.0, 0, 0.5, 1).unwrap(), &loc, 0.5).unwrap();
        let u = GridFunction::constant(d.grid().unwrap(), 3.0);
        let zero = GridFunction::zeros(d.grid().unwrap());
        let terms = forms.terms(&u, &Source::Field(zero)).unwrap();
        let c = forms.identity_check(&u, &terms, &probe(loc.cell, 4)).unwrap();
        assert!(c.residual < 1e-8, "{c:?}");
    }

    #[test]
    fn forms_are_bilinear() {
        let d = Domain::new(1, 128, 1.0, true).unwrap();
        let loc = build_localization(&d, &[0.0], 0.25 / 30.0 / 2.0).unwrap();
        let forms = assemble_forms(&modulated_kernel(1.0, 0.2, 1.0, 0, 0.5, 1).unwrap(), &loc, 0.5).unwrap();
        let (a, b, c) = (probe(loc.cell, 5), probe(loc.cell, 6), probe(loc.cell, 7));
        let ab = a.zip(&b, |x, y| 2.0 * x - y).unwrap();
        let lhs = forms.h_form(&ab, &c).unwrap();
        let rhs = 2.0 * forms.h_form(&a, &c).unwrap() - forms.h_form(&b, &c).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }
}
