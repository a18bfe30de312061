//! The nonlocal coefficients `a * f`, `b * f` and `c * f`.
//!
//! With `a_ij(z) = psi(|z|) Pi_ij(z)`, `b_i = sum_j d_j a_ij` and
//! `c = sum_i d_i b_i`:
//!
//! * `b(z) = -(N - 1) psi(|z|) z / |z|^2`;
//! * `c(z) = -(N - 1) sum_t coef_t (N + p_t - 2) |z|^(p_t - 2)` for the power
//!   terms `coef_t |z|^p_t` of `psi`, plus `-(N - 1) |S^(N-1)| coef_t delta_0`
//!   when `p_t - 2 = -N`. More singular terms leave `c * f` undefined.
//!
//! Convolutions are midpoint sums over source nodes with the source `w = v`
//! skipped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::psi::{sphere_area, PsiSpec};
use crate::error::{Error, Result};
use crate::fft::ConvolutionPlan;
use crate::grid::{DiscreteDistribution, VelocityGrid, DEFAULT_MAX_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    Direct,
    #[default]
    Fft,
}

/// Number of independent entries of a symmetric `dim x dim` matrix.
pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Position of `(i, j)` in the packed upper triangle (row-major, `i <= j`).
pub fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

/// Kernels tabulated on the `(2n - 1)^N` node offsets, zero at offset 0.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: VelocityGrid,
    pub(crate) psi: Vec<f64>,
    pub(crate) a: Vec<Vec<f64>>,
    pub(crate) b: Vec<Vec<f64>>,
    pub(crate) c: Option<Vec<f64>>,
    pub(crate) c_local: f64,
}

impl KernelTable {
    pub fn new(grid: &VelocityGrid, spec: &PsiSpec) -> Result<Self> {
        let dim = grid.dim();
        spec.validate(dim)?;
        let n = grid.nodes_per_axis();
        let m = 2 * n - 1;
        let len = m
            .checked_pow(dim as u32)
            .filter(|&l| l <= 8 * DEFAULT_MAX_NODES)
            .ok_or_else(|| Error::Resource("offset table too large".into()))?;
        let h = grid.spacing();
        let nm1 = dim as f64 - 1.0;
        let terms = spec.terms();
        let mut c_local = 0.0;
        let mut c_defined = true;
        let mut c_smooth = false;
        for t in &terms {
            if t.coef == 0.0 {
                continue;
            }
            let q = t.power - 2.0;
            if (q + dim as f64).abs() < 1e-12 {
                c_local -= nm1 * sphere_area(dim) * t.coef;
            } else if q < -(dim as f64) {
                c_defined = false;
            } else {
                c_smooth = true;
            }
        }
        let npairs = packed_len(dim);
        let width = 1 + npairs + dim + 1;
        let rows: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|q| {
                let mut out = vec![0.0; width];
                let mut z = vec![0.0; dim];
                let mut rest = q;
                for d in (0..dim).rev() {
                    z[d] = ((rest % m) as f64 - (n as f64 - 1.0)) * h;
                    rest /= m;
                }
                let r2: f64 = z.iter().map(|x| x * x).sum();
                if r2 == 0.0 {
                    return out;
                }
                let r = r2.sqrt();
                let psi = spec.eval(r);
                out[0] = psi;
                for i in 0..dim {
                    for j in i..dim {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        out[1 + packed_index(dim, i, j)] = psi * (delta - z[i] * z[j] / r2);
                    }
                    out[1 + npairs + i] = -nm1 * psi * z[i] / r2;
                }
                if c_smooth {
                    out[width - 1] = terms
                        .iter()
                        .filter(|t| t.coef != 0.0 && (t.power - 2.0 + dim as f64).abs() >= 1e-12)
                        .map(|t| -nm1 * t.coef * (dim as f64 + t.power - 2.0) * r.powf(t.power - 2.0))
                        .sum();
                }
                out
            })
            .collect();
        let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
        Ok(Self {
            grid: grid.clone(),
            psi: column(0),
            a: (0..npairs).map(|c| column(1 + c)).collect(),
            b: (0..dim).map(|c| column(1 + npairs + c)).collect(),
            c: c_defined.then(|| column(width - 1)),
            c_local: if c_defined { c_local } else { 0.0 },
        })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    /// `psi(|v - w|)` indexed by offset.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Offset encoding of every node: `index(v - w) = code[v] - code[w] + center`.
    pub(crate) fn offset_codes(&self) -> (Vec<isize>, isize) {
        let grid = &self.grid;
        let n = grid.nodes_per_axis();
        let m = (2 * n - 1) as isize;
        let dim = grid.dim();
        let mut idx = vec![0; dim];
        let codes = (0..grid.len())
            .map(|k| {
                grid.unravel(k, &mut idx);
                idx.iter().fold(0isize, |acc, &i| acc * m + i as isize)
            })
            .collect();
        let center = (0..dim).fold(0isize, |acc, _| acc * m + (n as isize - 1));
        (codes, center)
    }

    fn all_kernels(&self) -> Vec<Vec<f64>> {
        let mut ks: Vec<Vec<f64>> = self.a.iter().chain(&self.b).cloned().collect();
        if let Some(c) = &self.c {
            ks.push(c.clone());
        }
        ks
    }
}

/// `a * f` (packed symmetric), `b * f` and `c * f` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionCoefficients {
    dim: usize,
    method: CoefficientMethod,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Option<Vec<f64>>,
}

impl CollisionCoefficients {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> CoefficientMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.b.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Packed upper triangle of `A(v_k)`.
    pub fn a_packed(&self, k: usize) -> &[f64] {
        let p = packed_len(self.dim);
        &self.a[k * p..(k + 1) * p]
    }

    pub fn a(&self, k: usize, i: usize, j: usize) -> f64 {
        self.a_packed(k)[packed_index(self.dim, i, j)]
    }

    /// `A(v_k)` as a row-major matrix.
    pub fn a_matrix(&self, k: usize) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.a(k, i, j);
            }
        }
        out
    }

    pub fn b(&self, k: usize) -> &[f64] {
        &self.b[k * self.dim..(k + 1) * self.dim]
    }

    /// `c * f`, absent when `c` is too singular to be locally integrable.
    pub fn c(&self) -> Option<&[f64]> {
        self.c.as_deref()
    }

    /// Largest relative difference over the fields, each measured against its
    /// own max norm.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        fn rel(x: &[f64], y: &[f64]) -> f64 {
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if scale == 0.0 {
                diff
            } else {
                diff / scale
            }
        }
        let mut worst = rel(&self.a, &other.a).max(rel(&self.b, &other.b));
        if let (Some(x), Some(y)) = (&self.c, &other.c) {
            worst = worst.max(rel(x, y));
        }
        worst
    }
}

/// Reusable evaluator for one grid and kernel.
pub struct CoefficientEngine {
    table: KernelTable,
    method: CoefficientMethod,
    plan: Option<ConvolutionPlan>,
}

impl CoefficientEngine {
    pub fn new(grid: &VelocityGrid, spec: &PsiSpec, method: CoefficientMethod) -> Result<Self> {
        let table = KernelTable::new(grid, spec)?;
        let plan = match method {
            CoefficientMethod::Direct => None,
            CoefficientMethod::Fft => {
                let padded = (2 * grid.nodes_per_axis())
                    .checked_pow(grid.dim() as u32)
                    .filter(|&p| p <= 8 * DEFAULT_MAX_NODES)
                    .ok_or_else(|| {
                        Error::validation("grid too large for the padded FFT method")
                    })?;
                debug_assert!(padded > 0);
                Some(ConvolutionPlan::new(grid, &table.all_kernels()))
            }
        };
        Ok(Self { table, method, plan })
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn compute(&self, f: &DiscreteDistribution) -> Result<CollisionCoefficients> {
        if !f.grid().same_shape(self.table.grid()) {
            return Err(Error::validation("distribution grid does not match the kernel grid"));
        }
        let dim = f.grid().dim();
        let npairs = packed_len(dim);
        let vol = f.grid().cell_volume();
        let values = f.values();
        let has_c = self.table.c.is_some();
        let fields: Vec<Vec<f64>> = match &self.plan {
            Some(plan) => plan.convolve_all(values),
            None => direct_convolutions(&self.table, &self.table.all_kernels(), values),
        };
        let len = values.len();
        let mut a = vec![0.0; len * npairs];
        let mut b = vec![0.0; len * dim];
        for k in 0..len {
            for c in 0..npairs {
                a[k * npairs + c] = fields[c][k] * vol;
            }
            for d in 0..dim {
                b[k * dim + d] = fields[npairs + d][k] * vol;
            }
        }
        let c = has_c.then(|| {
            let conv = &fields[npairs + dim];
            (0..len)
                .map(|k| conv[k] * vol + self.table.c_local * values[k])
                .collect()
        });
        Ok(CollisionCoefficients {
            dim,
            method: self.method,
            a,
            b,
            c,
        })
    }
}

/// `sum_w K(v - w) u(w)` for every kernel, by direct summation in a fixed
/// order per output node.
pub(crate) fn direct_convolutions(table: &KernelTable, kernels: &[Vec<f64>], u: &[f64]) -> Vec<Vec<f64>> {
    let (codes, center) = table.offset_codes();
    let len = u.len();
    let rows: Vec<Vec<f64>> = (0..len)
        .into_par_iter()
        .map(|v| {
            let mut acc = vec![0.0; kernels.len()];
            let base = codes[v] + center;
            for w in 0..len {
                let uw = u[w];
                if uw == 0.0 || w == v {
                    continue;
                }
                let q = (base - codes[w]) as usize;
                for (s, k) in acc.iter_mut().zip(kernels) {
                    *s += k[q] * uw;
                }
            }
            acc
        })
        .collect();
    (0..kernels.len())
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect()
}

/// Evaluates `a * f`, `b * f`, `c * f` in one call.
pub fn collision_coefficients(
    f: &DiscreteDistribution,
    spec: &PsiSpec,
    method: CoefficientMethod,
) -> Result<CollisionCoefficients> {
    CoefficientEngine::new(f.grid(), spec, method)?.compute(f)
}

/// Largest eigenvalue of a symmetric matrix given in packed form, by Jacobi
/// rotations.
pub fn max_eigenvalue(dim: usize, packed: &[f64]) -> f64 {
    symmetric_eigenvalues(dim, packed)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues of a symmetric matrix in packed form.
pub fn symmetric_eigenvalues(dim: usize, packed: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i * dim + j] = packed[packed_index(dim, i, j)];
        }
    }
    for _sweep in 0..64 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * dim + j] * m[i * dim + j])
            .sum();
        let diag: f64 = (0..dim).map(|i| m[i * dim + i] * m[i * dim + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * dim + q] - m[p * dim + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let mkp = m[k * dim + p];
                    let mkq = m[k * dim + q];
                    m[k * dim + p] = c * mkp - s * mkq;
                    m[k * dim + q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p * dim + k];
                    let mqk = m[q * dim + k];
                    m[p * dim + k] = c * mpk - s * mqk;
                    m[q * dim + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..dim).map(|i| m[i * dim + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::psi::projection;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_f(grid: &VelocityGrid, seed: u64) -> DiscreteDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        DiscreteDistribution::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn packed_indexing() {
        assert_eq!(packed_len(3), 6);
        let idx: Vec<usize> = (0..3)
            .flat_map(|i| (i..3).map(move |j| packed_index(3, i, j)))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(packed_index(3, 2, 0), packed_index(3, 0, 2));
    }

    #[test]
    fn coulomb_c_is_local() {
        let g = VelocityGrid::new(3, 2.0, 6).unwrap();
        let f = random_f(&g, 1);
        let co = collision_coefficients(&f, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
        let c = co.c().unwrap();
        for (ck, fk) in c.iter().zip(f.values()) {
            assert!((ck + 8.0 * std::f64::consts::PI * fk).abs() < 1e-13 * (1.0 + fk));
        }
    }

    #[test]
    fn too_singular_c_is_absent() {
        let g = VelocityGrid::new(3, 2.0, 6).unwrap();
        let f = random_f(&g, 2);
        let co = collision_coefficients(&f, &PsiSpec::PowerLaw { gamma: -3.5 }, CoefficientMethod::Direct)
            .unwrap();
        assert!(co.c().is_none());
        let co = collision_coefficients(&f, &PsiSpec::PowerLaw { gamma: -1.0 }, CoefficientMethod::Direct)
            .unwrap();
        assert!(co.c().is_some());
    }

    #[test]
    fn point_mass_gives_kernel() {
        let g = VelocityGrid::new(3, 2.5, 5).unwrap();
        let mut vals = vec![0.0; g.len()];
        let centre = g.ravel(&[2, 2, 2]);
        vals[centre] = 1.0 / g.cell_volume();
        let f = DiscreteDistribution::new(g.clone(), vals).unwrap();
        let co = collision_coefficients(&f, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
        let mut p = [0.0; 3];
        for k in 0..g.len() {
            if k == centre {
                assert!(co.a_packed(k).iter().all(|x| *x == 0.0));
                continue;
            }
            g.point(k, &mut p);
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            let pi = projection(&p).unwrap();
            let a = co.a_matrix(k);
            for (x, y) in a.iter().zip(&pi) {
                assert!((x - y / r).abs() < 1e-13);
            }
            for d in 0..3 {
                assert!((co.b(k)[d] + 2.0 * p[d] / r.powi(3)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn direct_and_fft_agree() {
        let g = VelocityGrid::new(3, 3.0, 8).unwrap();
        for (seed, spec) in [
            (3, PsiSpec::Coulomb),
            (4, PsiSpec::PowerLaw { gamma: -1.5 }),
            (5, PsiSpec::PowerLaw { gamma: 0.0 }),
        ] {
            let f = random_f(&g, seed);
            let d = collision_coefficients(&f, &spec, CoefficientMethod::Direct).unwrap();
            let e = collision_coefficients(&f, &spec, CoefficientMethod::Fft).unwrap();
            let rel = e.max_relative_difference(&d);
            assert!(rel < 1e-12, "{spec:?}: {rel}");
        }
    }

    #[test]
    fn diffusion_is_psd_and_trace_matches() {
        let g = VelocityGrid::new(3, 3.0, 6).unwrap();
        let f = random_f(&g, 6);
        let co = collision_coefficients(&f, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
        let table = KernelTable::new(&g, &PsiSpec::Coulomb).unwrap();
        for q in 0..table.psi.len() {
            let trace = table.a[0][q] + table.a[3][q] + table.a[5][q];
            assert!((trace - 2.0 * table.psi[q]).abs() < 1e-12 * (1.0 + table.psi[q]));
        }
        for k in 0..g.len() {
            let ev = symmetric_eigenvalues(3, co.a_packed(k));
            assert!(ev.iter().all(|e| *e > -1e-12), "{ev:?}");
        }
    }

    #[test]
    fn jacobi_eigenvalues() {
        let ev = symmetric_eigenvalues(2, &[2.0, 1.0, 2.0]);
        let mut ev = ev;
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        assert!((max_eigenvalue(3, &[1.0, 0.0, 0.0, 5.0, 0.0, 2.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let g = VelocityGrid::new(3, 3.0, 6).unwrap();
        let engine = CoefficientEngine::new(&g, &PsiSpec::Coulomb, CoefficientMethod::Direct).unwrap();
        let other = random_f(&VelocityGrid::new(3, 3.0, 7).unwrap(), 0);
        assert!(engine.compute(&other).is_err());
    }
}
