//! Uniform cell-centered velocity grids, midpoint quadrature, finite
//! differences and the affine normalization of distributions.
//!
//! Node `k` of a grid with `n` nodes per axis in dimension `N` has the
//! multi-index `(i_1, ..., i_N)` with `k = ((i_1 n + i_2) n + ...) n + i_N`
//! (first axis slowest) and coordinates `v_d = -L + (i_d + 1/2) h`,
//! `h = 2L / n`. Distributions are extended by zero outside the box.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{par_sum, par_sum_vec};

/// Default cap on the total node count of a grid.
pub const DEFAULT_MAX_NODES: usize = 1 << 24;

/// A uniform, cell-centered tensor grid on `[-L, L]^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    dim: usize,
    half_width: f64,
    nodes_per_axis: usize,
    spacing: f64,
    len: usize,
}

impl VelocityGrid {
    pub fn new(dim: usize, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        Self::with_budget(dim, half_width, nodes_per_axis, DEFAULT_MAX_NODES)
    }

    pub fn with_budget(
        dim: usize,
        half_width: f64,
        nodes_per_axis: usize,
        max_nodes: usize,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::validation(format!("dimension must be >= 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::validation(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if nodes_per_axis < 4 {
            return Err(Error::validation(format!(
                "need at least 4 nodes per axis, got {nodes_per_axis}"
            )));
        }
        let len = u32::try_from(dim)
            .ok()
            .and_then(|d| nodes_per_axis.checked_pow(d))
            .filter(|&m| m <= max_nodes)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "{nodes_per_axis}^{dim} nodes exceeds the budget of {max_nodes}"
                ))
            })?;
        Ok(Self {
            dim,
            half_width,
            nodes_per_axis,
            spacing: 2.0 * half_width / nodes_per_axis as f64,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total node count `n^N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `h^N`, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, k: usize, axis: usize) -> usize {
        (k / self.stride(axis)) % self.nodes_per_axis
    }

    pub fn unravel(&self, mut k: usize, idx: &mut [usize]) {
        for d in (0..self.dim).rev() {
            idx[d] = k % self.nodes_per_axis;
            k /= self.nodes_per_axis;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |k, &i| k * self.nodes_per_axis + i)
    }

    pub fn point(&self, k: usize, out: &mut [f64]) {
        let mut k = k;
        for d in (0..self.dim).rev() {
            out[d] = self.coordinate(k % self.nodes_per_axis);
            k /= self.nodes_per_axis;
        }
    }

    /// All node coordinates, node-major (`len * dim` values).
    pub fn points(&self) -> Vec<f64> {
        let mut pts = vec![0.0; self.len * self.dim];
        for (k, p) in pts.chunks_mut(self.dim).enumerate() {
            self.point(k, p);
        }
        pts
    }

    /// `|v|^2` at every node.
    pub fn radius_sq(&self) -> Vec<f64> {
        self.points()
            .chunks(self.dim)
            .map(|p| p.iter().map(|x| x * x).sum())
            .collect()
    }

    /// True when node `k` has both neighbours along every axis.
    pub fn is_interior(&self, k: usize) -> bool {
        (0..self.dim).all(|d| {
            let i = self.axis_index(k, d);
            i > 0 && i + 1 < self.nodes_per_axis
        })
    }

    pub(crate) fn same_shape(&self, other: &VelocityGrid) -> bool {
        self.dim == other.dim
            && self.nodes_per_axis == other.nodes_per_axis
            && self.half_width == other.half_width
    }
}

/// Derivative of `u` along `axis` at node `k`: centered in the interior,
/// second-order one-sided on the boundary layer.
pub(crate) fn diff(grid: &VelocityGrid, u: &[f64], k: usize, axis: usize) -> f64 {
    let s = grid.stride(axis);
    let i = grid.axis_index(k, axis);
    let h2 = 2.0 * grid.spacing();
    if i == 0 {
        (-3.0 * u[k] + 4.0 * u[k + s] - u[k + 2 * s]) / h2
    } else if i + 1 == grid.nodes_per_axis() {
        (3.0 * u[k] - 4.0 * u[k - s] + u[k - 2 * s]) / h2
    } else {
        (u[k + s] - u[k - s]) / h2
    }
}

/// A vector attached to every grid node (node-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len() % dim, 0);
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A nonnegative density sampled at the nodes of a [`VelocityGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    grid: VelocityGrid,
    values: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::validation(format!(
                "value {v} at node {k} is negative or non-finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `density` at every node.
    pub fn from_fn<F>(grid: VelocityGrid, density: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let dim = grid.dim();
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |p, k| {
                    grid.point(k, p);
                    density(p)
                },
            )
            .collect();
        Self::new(grid, values)
    }

    /// Skips validation; callers guarantee nonnegative finite values.
    pub(crate) fn from_parts(grid: VelocityGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `c * f` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| c * v).collect())
    }

    /// `alpha * f + beta * g` on a common grid; the result must be nonnegative.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::validation("distributions live on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Midpoint rule `h^N * sum_k weight(v_k) f_k`.
    pub fn integrate<W>(&self, weight: W) -> Result<f64>
    where
        W: Fn(&[f64]) -> f64 + Sync,
    {
        let dim = self.grid.dim();
        let weights: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |p, k| {
                    self.grid.point(k, p);
                    weight(p)
                },
            )
            .collect();
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(Error::Numeric(format!("weight is {w} at node {k}")));
        }
        Ok(quadrature(&self.grid, |k| weights[k] * self.values[k]))
    }

    /// Mass, mean velocity and raw second moment `int f |v|^2`.
    pub fn basic_moments(&self) -> (f64, Vec<f64>, f64) {
        let dim = self.grid.dim();
        let sums = par_sum_vec(self.grid.len(), dim + 2, |k, out| {
            let f = self.values[k];
            let mut p = vec![0.0; dim];
            self.grid.point(k, &mut p);
            out[0] = f;
            let mut r2 = 0.0;
            for d in 0..dim {
                out[1 + d] = f * p[d];
                r2 += p[d] * p[d];
            }
            out[dim + 1] = f * r2;
        });
        let vol = self.grid.cell_volume();
        let mass = sums[0] * vol;
        let first: Vec<f64> = sums[1..=dim].iter().map(|s| s * vol).collect();
        let mean = if mass > 0.0 {
            first.iter().map(|m| m / mass).collect()
        } else {
            vec![0.0; dim]
        };
        (mass, mean, sums[dim + 1] * vol)
    }

    /// Central differences of `sqrt(f)` (second-order one-sided on the
    /// boundary layer).
    pub fn gradient_sqrt(&self) -> VectorField {
        let root: Vec<f64> = self.values.iter().map(|v| v.sqrt()).collect();
        let dim = self.grid.dim();
        let mut out = vec![0.0; self.grid.len() * dim];
        out.par_chunks_mut(dim).enumerate().for_each(|(k, g)| {
            for (d, gd) in g.iter_mut().enumerate() {
                *gd = diff(&self.grid, &root, k, d);
            }
        });
        VectorField::new(dim, out)
    }

    /// Multilinear interpolation at an arbitrary point (zero outside the box).
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let dim = self.grid.dim();
        let n = self.grid.nodes_per_axis() as isize;
        let h = self.grid.spacing();
        let l = self.grid.half_width();
        let mut base = vec![0isize; dim];
        let mut frac = vec![0.0; dim];
        for d in 0..dim {
            let s = (x[d] + l) / h - 0.5;
            if !s.is_finite() || s <= -1.0 || s >= n as f64 {
                return 0.0;
            }
            let i0 = s.floor();
            base[d] = i0 as isize;
            frac[d] = s - i0;
        }
        let mut acc = 0.0;
        'corner: for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut k = 0usize;
            for d in 0..dim {
                let up = (corner >> (dim - 1 - d)) & 1 == 1;
                let i = base[d] + up as isize;
                if i < 0 || i >= n {
                    continue 'corner;
                }
                w *= if up { frac[d] } else { 1.0 - frac[d] };
                k = k * n as usize + i as usize;
            }
            if w != 0.0 {
                acc += w * self.values[k];
            }
        }
        acc
    }

    /// Largest change under the 90-degree rotations of pairs of axes,
    /// relative to `max f`. Zero for exactly radial samples.
    pub fn rotation_deviation(&self) -> f64 {
        let max = self.max_value();
        if max == 0.0 {
            return 0.0;
        }
        let grid = &self.grid;
        let n = grid.nodes_per_axis();
        let dim = grid.dim();
        let mut worst: f64 = 0.0;
        let mut idx = vec![0; dim];
        for a in 0..dim {
            for b in (a + 1)..dim {
                for k in 0..grid.len() {
                    grid.unravel(k, &mut idx);
                    let (ia, ib) = (idx[a], idx[b]);
                    idx[a] = n - 1 - ib;
                    idx[b] = ia;
                    let r = grid.ravel(&idx);
                    worst = worst.max((self.values[r] - self.values[k]).abs());
                }
            }
        }
        worst / max
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: DistributionFile =
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        file.into_distribution().map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&DistributionFile::from(self))
            .map_err(|e| Error::Numeric(e.to_string()))?;
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// On-disk form of a distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub dim: usize,
    pub half_width: f64,
    pub nodes_per_axis: usize,
    pub values: Vec<f64>,
}

impl DistributionFile {
    pub fn into_distribution(self) -> Result<DiscreteDistribution> {
        let grid = VelocityGrid::new(self.dim, self.half_width, self.nodes_per_axis)?;
        DiscreteDistribution::new(grid, self.values)
    }
}

impl From<&DiscreteDistribution> for DistributionFile {
    fn from(f: &DiscreteDistribution) -> Self {
        Self {
            dim: f.grid.dim(),
            half_width: f.grid.half_width(),
            nodes_per_axis: f.grid.nodes_per_axis(),
            values: f.values.clone(),
        }
    }
}

/// `f(v) -> a f(b v + c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub amplitude: f64,
    pub dilation: f64,
    pub shift: Vec<f64>,
}

impl NormalizationTransform {
    pub fn identity(dim: usize) -> Self {
        Self {
            amplitude: 1.0,
            dilation: 1.0,
            shift: vec![0.0; dim],
        }
    }

    /// The transform equal to applying `self` and then `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            amplitude: self.amplitude * next.amplitude,
            dilation: self.dilation * next.dilation,
            shift: self
                .shift
                .iter()
                .zip(&next.shift)
                .map(|(c1, c2)| self.dilation * c2 + c1)
                .collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            amplitude: 1.0 / self.amplitude,
            dilation: 1.0 / self.dilation,
            shift: self.shift.iter().map(|c| -c / self.dilation).collect(),
        }
    }

    /// Resamples `a f(b v + c)` onto the grid of `f` by multilinear
    /// interpolation.
    pub fn apply(&self, f: &DiscreteDistribution) -> DiscreteDistribution {
        let grid = f.grid().clone();
        let dim = grid.dim();
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |p, k| {
                    grid.point(k, p);
                    for (x, c) in p.iter_mut().zip(&self.shift) {
                        *x = self.dilation * *x + c;
                    }
                    self.amplitude * f.interpolate(p)
                },
            )
            .collect();
        DiscreteDistribution::from_parts(grid, values)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizeOptions {
    /// Relative tolerance on mass, momentum and `int f |v|^2 = N`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 12,
        }
    }
}

fn normalization_error(f: &DiscreteDistribution) -> (f64, f64, f64, f64, Vec<f64>) {
    let dim = f.grid().dim() as f64;
    let (mass, mean, second) = f.basic_moments();
    let momentum = mean.iter().map(|u| (u * mass).abs()).fold(0.0, f64::max);
    (
        (mass - 1.0).abs(),
        momentum,
        (second - dim).abs() / dim,
        mass,
        mean,
    )
}

/// Brings `f` to unit mass, zero momentum and `int f |v|^2 = N`.
pub fn normalize(
    f: &DiscreteDistribution,
) -> Result<(DiscreteDistribution, NormalizationTransform)> {
    normalize_with(f, NormalizeOptions::default())
}

pub fn normalize_with(
    f: &DiscreteDistribution,
    opts: NormalizeOptions,
) -> Result<(DiscreteDistribution, NormalizationTransform)> {
    let grid = f.grid();
    let dim = grid.dim();
    let scale = grid.half_width() * grid.half_width();
    let mut current = f.clone();
    let mut total = NormalizationTransform::identity(dim);
    for _ in 0..opts.max_iterations {
        let (dm, dp, de, mass, mean) = normalization_error(&current);
        if !(mass > 0.0) {
            return Err(Error::validation("cannot normalize a distribution of zero mass"));
        }
        let (_, _, second) = current.basic_moments();
        let mean_sq: f64 = mean.iter().map(|u| u * u).sum();
        let temperature = (second / mass - mean_sq) / dim as f64;
        if !(temperature > 1e-12 * scale) {
            return Err(Error::Degenerate(format!(
                "temperature {temperature:e} is degenerate for a grid of half width {}",
                grid.half_width()
            )));
        }
        if dm <= opts.tolerance && dp <= opts.tolerance && de <= opts.tolerance {
            break;
        }
        let b = temperature.sqrt();
        let step = NormalizationTransform {
            amplitude: b.powi(dim as i32) / mass,
            dilation: b,
            shift: mean,
        };
        current = step.apply(&current);
        total = total.then(&step);
    }
    let (_, _, _, mass, _) = normalization_error(&current);
    if !(mass > 0.0) {
        return Err(Error::Degenerate(
            "normalization moved all mass outside the grid".into(),
        ));
    }
    let rescale = NormalizationTransform {
        amplitude: 1.0 / mass,
        dilation: 1.0,
        shift: vec![0.0; dim],
    };
    for v in current.values.iter_mut() {
        *v /= mass;
    }
    total = total.then(&rescale);
    let (dm, dp, de, _, _) = normalization_error(&current);
    if dm > opts.tolerance || dp > opts.tolerance || de > opts.tolerance {
        return Err(Error::Numeric(format!(
            "normalization did not converge (mass {dm:e}, momentum {dp:e}, energy {de:e})"
        )));
    }
    Ok((current, total))
}

/// Sum over nodes of `term(k)` scaled by the cell volume.
pub(crate) fn quadrature<F>(grid: &VelocityGrid, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    par_sum(grid.len(), term) * grid.cell_volume()
}
