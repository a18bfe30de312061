//! Gaussian-weighted moment determinants and the Cramer reconstruction of
//! `grad f / f` from the pair differences `q_ij`.
//!
//! With `W(w) = exp(-lambda |w|^2) f(w)` and `m_X = int X W`, the matrix is
//!
//! ```text
//! [ m_1    m_j     m_i   ]
//! [ m_i    m_ij    m_ii  ]
//! [ m_j    m_jj    m_ij  ]
//! ```
//!
//! and `Gamma_{lambda,i,j}(f) = -det`. For the standard Maxwellian in
//! dimension `N`, `Gamma = (1 + 2 lambda)^(-(3N + 4)/2)`.

use serde::{Deserialize, Serialize};

use super::log_gradient::{GradientScheme, LogGradient};
use super::moments::moments;
use crate::error::{Error, Result};
use crate::grid::DiscreteDistribution;
use crate::sum::par_sum_vec;
use crate::EPS_FLOOR;

/// Tolerance on mass, momentum and energy for inputs required to be
/// normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-3;

/// `lambda_0 = 2^-82 3^-13 exp(-24 Hbar)`.
pub fn lambda0(hbar: f64) -> f64 {
    2f64.powi(-82) * 3f64.powi(-13) * (-24.0 * hbar).exp()
}

/// `2^-38 3^-4 exp(-16 Hbar)`, the lower bound on `Gamma_{lambda_0,i,j}`.
pub fn gamma_floor(hbar: f64) -> f64 {
    2f64.powi(-38) * 3f64.powi(-4) * (-16.0 * hbar).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaDeterminant {
    pub lambda: f64,
    pub i: usize,
    pub j: usize,
    pub gamma_value: f64,
}

/// Fails unless `f` has unit mass, zero momentum and `int f |v|^2 = N`.
pub fn check_normalized(f: &DiscreteDistribution) -> Result<()> {
    let dim = f.grid().dim() as f64;
    let m = moments(f, &[]);
    let p = m.momentum.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let e = (2.0 * m.energy - dim).abs() / dim;
    let tol = NORMALIZED_TOLERANCE * (1.0 + 1e-9);
    if (m.mass - 1.0).abs() > tol || p > tol || e > tol {
        return Err(Error::validation(format!(
            "distribution is not normalized (mass {}, momentum {p:e}, energy error {e:e})",
            m.mass
        )));
    }
    Ok(())
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `int W`, `int w_a W` and `int w_a w_b W` for all axes.
#[derive(Debug, Clone)]
struct WeightedMoments {
    dim: usize,
    zeroth: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl WeightedMoments {
    fn new(f: &DiscreteDistribution, lambda: f64) -> Self {
        let grid = f.grid();
        let dim = grid.dim();
        let vals = f.values();
        let sums = par_sum_vec(grid.len(), 1 + dim + dim * dim, |k, out| {
            if vals[k] == 0.0 {
                return;
            }
            let mut p = vec![0.0; dim];
            grid.point(k, &mut p);
            let r2: f64 = p.iter().map(|x| x * x).sum();
            let w = (-lambda * r2).exp() * vals[k];
            out[0] = w;
            for a in 0..dim {
                out[1 + a] = w * p[a];
                for b in 0..dim {
                    out[1 + dim + a * dim + b] = w * p[a] * p[b];
                }
            }
        });
        let vol = grid.cell_volume();
        Self {
            dim,
            zeroth: sums[0] * vol,
            first: sums[1..=dim].iter().map(|x| x * vol).collect(),
            second: sums[1 + dim..].iter().map(|x| x * vol).collect(),
        }
    }

    fn m2(&self, a: usize, b: usize) -> f64 {
        self.second[a * self.dim + b]
    }

    fn matrix(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        [
            [self.zeroth, self.first[j], self.first[i]],
            [self.first[i], self.m2(i, j), self.m2(i, i)],
            [self.first[j], self.m2(j, j), self.m2(i, j)],
        ]
    }

    fn gamma(&self, i: usize, j: usize) -> f64 {
        -det3(self.matrix(i, j))
    }
}

/// `Gamma_{lambda,i,j}(f)` for a normalized `f`.
pub fn gamma_determinant(f: &DiscreteDistribution, lambda: f64, i: usize, j: usize) -> Result<GammaDeterminant> {
    let dim = f.grid().dim();
    if i == j || i >= dim || j >= dim {
        return Err(Error::validation(format!("need distinct axes below {dim}, got ({i}, {j})")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be positive, got {lambda}")));
    }
    check_normalized(f)?;
    let gamma_value = WeightedMoments::new(f, lambda).gamma(i, j);
    if !gamma_value.is_finite() {
        return Err(Error::Numeric("Gamma is not finite".into()));
    }
    Ok(GammaDeterminant { lambda, i, j, gamma_value })
}

/// Cramer reconstruction of `grad f / f` at arbitrary nodes in `O(1)` per
/// node after an `O(M)` setup.
pub struct Reconstructor {
    lambda: f64,
    floor: f64,
    grid_points: Vec<f64>,
    values: Vec<f64>,
    log_gradient: LogGradient,
    components: Vec<ComponentSystem>,
}

/// Moments needed to reconstruct component `i` using the partner axis `j`.
struct ComponentSystem {
    i: usize,
    j: usize,
    gamma: f64,
    matrix: [[f64; 3]; 3],
    /// For `alpha` in {1, w_i, w_j}: int w^alpha W times
    /// {1, w_i, w_j, g_i, g_j, w_i g_j, w_j g_i}.
    sums: [[f64; 7]; 3],
}

impl Reconstructor {
    /// Uses `lambda = min(lambda_0(Hbar), 1e-3)` when `lambda` is `None`.
    pub fn new(f: &DiscreteDistribution, lambda: Option<f64>, scheme: GradientScheme) -> Result<Self> {
        check_normalized(f)?;
        let grid = f.grid();
        let dim = grid.dim();
        let hbar = moments(f, &[]).abs_entropy;
        let lambda = lambda.unwrap_or_else(|| lambda0(hbar).min(1e-3));
        if !(lambda > 0.0) {
            return Err(Error::validation(format!("lambda must be positive, got {lambda}")));
        }
        let wm = WeightedMoments::new(f, lambda);
        let lg = LogGradient::new(f, scheme);
        let pts = grid.points();
        let vals = f.values();
        let mut components = Vec::with_capacity(dim);
        for i in 0..dim {
            let j = (0..dim)
                .filter(|&j| j != i)
                .max_by(|&a, &b| wm.gamma(i, a).total_cmp(&wm.gamma(i, b)))
                .expect("dimension is at least 2");
            let sums = par_sum_vec(grid.len(), 21, |k, out| {
                if vals[k] == 0.0 {
                    return;
                }
                let p = &pts[k * dim..(k + 1) * dim];
                let r2: f64 = p.iter().map(|x| x * x).sum();
                let w = (-lambda * r2).exp() * vals[k];
                let g = lg.at(k);
                let base = [1.0, p[i], p[j], g[i], g[j], p[i] * g[j], p[j] * g[i]];
                for (a, alpha) in [1.0, p[i], p[j]].into_iter().enumerate() {
                    for (b, x) in base.iter().enumerate() {
                        out[a * 7 + b] = w * alpha * x;
                    }
                }
            });
            let vol = grid.cell_volume();
            let mut table = [[0.0; 7]; 3];
            for a in 0..3 {
                for b in 0..7 {
                    table[a][b] = sums[a * 7 + b] * vol;
                }
            }
            components.push(ComponentSystem {
                i,
                j,
                gamma: wm.gamma(i, j),
                matrix: wm.matrix(i, j),
                sums: table,
            });
        }
        Ok(Self {
            lambda,
            floor: gamma_floor(hbar),
            grid_points: pts,
            values: vals.to_vec(),
            log_gradient: lg,
            components,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `(i, j, Gamma_{lambda,i,j})` used for each component.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        self.components.iter().map(|c| (c.i, c.j, c.gamma)).collect()
    }

    /// Nodal log-gradient the pair differences are built from.
    pub fn log_gradient(&self) -> &LogGradient {
        &self.log_gradient
    }

    /// `int Z_k(v, w) W(w) dw` for `k = 1, 2, 3` and component `c`.
    fn z_integrals(&self, c: &ComponentSystem, v: usize) -> [f64; 3] {
        let dim = self.log_gradient.dim();
        let p = &self.grid_points[v * dim..(v + 1) * dim];
        let g = self.log_gradient.at(v);
        let (i, j, lam) = (c.i, c.j, self.lambda);
        let (vi, vj, gi, gj) = (p[i], p[j], g[i], g[j]);
        // int q w^alpha W, expanding q = (v_i - w_i)(G_j - g_j(w)) - (v_j - w_j)(G_i - g_i(w)).
        let q = |a: usize| {
            let s = &c.sums[a];
            vi * gj * s[0] - vi * s[4] - gj * s[1] + s[5] - vj * gi * s[0] + vj * s[3] + gi * s[2] - s[6]
        };
        let m = &c.matrix;
        let (m0, mi, mj) = (m[0][0], m[1][0], m[2][0]);
        let (mij, mii, mjj) = (m[1][1], m[1][2], m[2][1]);
        [
            q(0) + 2.0 * lam * vi * mj - 2.0 * lam * vj * mi,
            q(1) + 2.0 * lam * vi * mij + vj * (m0 - 2.0 * lam * mii) - mj,
            q(2) - vi * (m0 - 2.0 * lam * mjj) - 2.0 * lam * vj * mij + mi,
        ]
    }

    /// Reconstructed `grad f / f` at node `v`.
    pub fn at(&self, v: usize) -> Result<Vec<f64>> {
        if !(self.values[v] > EPS_FLOOR) || !self.log_gradient.is_valid(v) {
            return Err(Error::validation(format!("f vanishes at node {v}")));
        }
        self.components
            .iter()
            .map(|c| {
                if !(c.gamma >= self.floor) {
                    return Err(Error::Degenerate(format!(
                        "Gamma_({},{}) = {:e} is below the floor {:e}; f is concentrated near a hyperplane",
                        c.i, c.j, c.gamma, self.floor
                    )));
                }
                let z = self.z_integrals(c, v);
                let mut num = c.matrix;
                for r in 0..3 {
                    num[r][1] = z[r];
                }
                Ok(det3(num) / det3(c.matrix))
            })
            .collect()
    }
}

/// Reconstructs `grad f / f` at node `v` with the default `lambda`.
pub fn reconstruct_log_gradient(f: &DiscreteDistribution, lambda: Option<f64>, v: usize) -> Result<Vec<f64>> {
    Reconstructor::new(f, lambda, GradientScheme::Quotient)?.at(v)
}
