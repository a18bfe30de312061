//! Nodal log-gradients `grad f / f` and the pair differences `q_ij`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{DiscreteDistribution, VelocityGrid};
use crate::EPS_FLOOR;

/// How `grad f / f` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientScheme {
    /// Differences of `ln f`: centered where both neighbours are above the
    /// floor, second-order one-sided otherwise. Exact on Gaussians.
    #[default]
    LogCentral,
    /// Differences of `f` divided by `f`.
    Quotient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogGradient {
    dim: usize,
    valid: Vec<bool>,
    grad: Vec<f64>,
}

impl LogGradient {
    pub fn new(f: &DiscreteDistribution, scheme: GradientScheme) -> Self {
        let grid = f.grid();
        let dim = grid.dim();
        let vals = f.values();
        let logs: Vec<f64> = vals
            .iter()
            .map(|&v| if v > EPS_FLOOR { v.ln() } else { f64::NAN })
            .collect();
        let rows: Vec<Option<Vec<f64>>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                if !(vals[k] > EPS_FLOOR) {
                    return None;
                }
                (0..dim)
                    .map(|d| match scheme {
                        GradientScheme::LogCentral => log_diff(grid, &logs, k, d),
                        GradientScheme::Quotient => Some(crate::grid::diff(grid, vals, k, d) / vals[k]),
                    })
                    .collect()
            })
            .collect();
        let mut valid = Vec::with_capacity(rows.len());
        let mut grad = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            valid.push(row.is_some());
            grad.extend(row.unwrap_or_else(|| vec![0.0; dim]));
        }
        Self { dim, valid, grad }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid[k]
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// `grad f / f` at node `k` (zero at invalid nodes).
    pub fn at(&self, k: usize) -> &[f64] {
        &self.grad[k * self.dim..(k + 1) * self.dim]
    }

    /// `q_ij(v, w) = (v_i - w_i)(g_j(v) - g_j(w)) - (v_j - w_j)(g_i(v) - g_i(w))`.
    pub fn q(&self, grid: &VelocityGrid, v: usize, w: usize, i: usize, j: usize) -> f64 {
        let mut pv = vec![0.0; self.dim];
        let mut pw = vec![0.0; self.dim];
        grid.point(v, &mut pv);
        grid.point(w, &mut pw);
        let (gv, gw) = (self.at(v), self.at(w));
        (pv[i] - pw[i]) * (gv[j] - gw[j]) - (pv[j] - pw[j]) * (gv[i] - gw[i])
    }
}

fn log_diff(grid: &VelocityGrid, u: &[f64], k: usize, axis: usize) -> Option<f64> {
    let n = grid.nodes_per_axis();
    let s = grid.stride(axis);
    let i = grid.axis_index(k, axis);
    let h2 = 2.0 * grid.spacing();
    let at = |offset: isize| -> Option<f64> {
        let t = i as isize + offset;
        if t < 0 || t >= n as isize {
            return None;
        }
        let x = u[(k as isize + offset * s as isize) as usize];
        (!x.is_nan()).then_some(x)
    };
    if let (Some(a), Some(b)) = (at(-1), at(1)) {
        return Some((b - a) / h2);
    }
    if let (Some(b), Some(c)) = (at(1), at(2)) {
        return Some((-3.0 * u[k] + 4.0 * b - c) / h2);
    }
    if let (Some(b), Some(c)) = (at(-1), at(-2)) {
        return Some((3.0 * u[k] - 4.0 * b + c) / h2);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(n: usize) -> DiscreteDistribution {
        let g = VelocityGrid::new(3, 5.0, n).unwrap();
        DiscreteDistribution::from_fn(g, |v| {
            (-0.5 * (v[0] * v[0] / 0.8 + v[1] * v[1] / 1.3 + v[2] * v[2])).exp()
        })
        .unwrap()
    }

    #[test]
    fn log_central_is_exact_on_gaussians() {
        let f = gaussian(10);
        let lg = LogGradient::new(&f, GradientScheme::LogCentral);
        let mut p = [0.0; 3];
        for k in 0..f.grid().len() {
            f.grid().point(k, &mut p);
            let want = [-p[0] / 0.8, -p[1] / 1.3, -p[2]];
            for d in 0..3 {
                assert!((lg.at(k)[d] - want[d]).abs() < 1e-12, "{k} {d}");
            }
        }
    }

    #[test]
    fn quotient_is_second_order() {
        let err = |n: usize| {
            let f = gaussian(n);
            let lg = LogGradient::new(&f, GradientScheme::Quotient);
            let g = f.grid();
            let mut p = [0.0; 3];
            let mut worst: f64 = 0.0;
            for k in 0..g.len() {
                g.point(k, &mut p);
                if p.iter().map(|x| x * x).sum::<f64>() < 1.0 {
                    worst = worst.max((lg.at(k)[0] + p[0] / 0.8).abs());
                }
            }
            worst
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn vacuum_nodes_are_invalid() {
        let g = VelocityGrid::new(2, 2.0, 8).unwrap();
        let f = DiscreteDistribution::from_fn(g, |v| if v[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let lg = LogGradient::new(&f, GradientScheme::LogCentral);
        for k in 0..f.grid().len() {
            assert_eq!(lg.is_valid(k), f.values()[k] > 0.0);
            if lg.is_valid(k) {
                assert!(lg.at(k).iter().all(|x| x.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn q_vanishes_for_isotropic_gaussian() {
        let g = VelocityGrid::new(3, 4.0, 8).unwrap();
        let f = DiscreteDistribution::from_fn(g.clone(), |v| {
            (-0.5 * v.iter().map(|x| x * x).sum::<f64>()).exp()
        })
        .unwrap();
        let lg = LogGradient::new(&f, GradientScheme::LogCentral);
        for v in (0..g.len()).step_by(37) {
            for w in (0..g.len()).step_by(41) {
                assert!(lg.q(&g, v, w, 0, 1).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn q_is_antisymmetric(seed in 0u64..1000, v in 0usize..216, w in 0usize..216) {
            let g = VelocityGrid::new(3, 2.0, 6).unwrap();
            let f = DiscreteDistribution::from_fn(g.clone(), |p| {
                1.0 + 0.5 * ((seed as f64) * 0.1 + p[0] * 1.3 + p[1] * p[2]).sin()
            }).unwrap();
            let lg = LogGradient::new(&f, GradientScheme::LogCentral);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(lg.q(&g, v, w, i, j), -lg.q(&g, v, w, j, i));
                }
                prop_assert_eq!(lg.q(&g, v, v, i, (i + 1) % 3), 0.0);
            }
        }
    }
}
