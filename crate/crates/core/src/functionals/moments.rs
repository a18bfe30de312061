//! Moments, entropy, weighted norms and the weighted Fisher information.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{quadrature, DiscreteDistribution};
use crate::sum::par_sum_vec;
use crate::EPS_FLOOR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mass: f64,
    pub momentum: Vec<f64>,
    /// `int f |v|^2 / 2`.
    pub energy: f64,
    /// `int f ln f`.
    pub entropy: f64,
    /// `int f |ln f|`.
    pub abs_entropy: f64,
    /// `(l, int f (1 + |v|^2)^l)` for each requested `l`.
    pub moments: Vec<(f64, f64)>,
}

impl MomentSummary {
    pub fn moment(&self, l: f64) -> Option<f64> {
        self.moments.iter().find(|(m, _)| *m == l).map(|(_, v)| *v)
    }
}

/// All moment-type functionals in one pass over the nodes.
pub fn moments(f: &DiscreteDistribution, l_list: &[f64]) -> MomentSummary {
    let grid = f.grid();
    let dim = grid.dim();
    let vals = f.values();
    let width = 1 + dim + 3 + l_list.len();
    let sums = par_sum_vec(grid.len(), width, |k, out| {
        let fk = vals[k];
        if fk == 0.0 {
            return;
        }
        let mut p = vec![0.0; dim];
        grid.point(k, &mut p);
        let r2: f64 = p.iter().map(|x| x * x).sum();
        out[0] = fk;
        for d in 0..dim {
            out[1 + d] = fk * p[d];
        }
        out[1 + dim] = 0.5 * fk * r2;
        if fk > EPS_FLOOR {
            let flnf = fk * fk.ln();
            out[2 + dim] = flnf;
            out[3 + dim] = flnf.abs();
        }
        for (t, l) in l_list.iter().enumerate() {
            out[4 + dim + t] = fk * (1.0 + r2).powf(*l);
        }
    });
    let vol = grid.cell_volume();
    let s: Vec<f64> = sums.iter().map(|x| x * vol).collect();
    MomentSummary {
        mass: s[0],
        momentum: s[1..=dim].to_vec(),
        energy: s[1 + dim],
        entropy: s[2 + dim],
        abs_entropy: s[3 + dim],
        moments: l_list.iter().copied().zip(s[4 + dim..].iter().copied()).collect(),
    }
}

/// `(int ((1 + |v|^2)^(l/2) f)^p)^(1/p)`, or the weighted max for `p = inf`.
pub fn weighted_lp(f: &DiscreteDistribution, p: f64, l: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::validation(format!("p must be >= 1, got {p}")));
    }
    let grid = f.grid();
    let dim = grid.dim();
    let vals = f.values();
    let weighted = |k: usize| {
        let fk = vals[k];
        if fk == 0.0 {
            return 0.0;
        }
        let mut pt = vec![0.0; dim];
        grid.point(k, &mut pt);
        let r2: f64 = pt.iter().map(|x| x * x).sum();
        (1.0 + r2).powf(0.5 * l) * fk
    };
    if p.is_infinite() {
        return Ok((0..grid.len()).map(weighted).fold(0.0, f64::max));
    }
    if p == 1.0 {
        return Ok(quadrature(grid, weighted));
    }
    // Scaled by the max so that large p neither overflows nor underflows.
    let max = (0..grid.len()).map(weighted).fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0.0);
    }
    let integral = quadrature(grid, |k| (weighted(k) / max).powf(p));
    Ok(max * integral.powf(1.0 / p))
}

/// `int |grad sqrt f|^2 (1 + |v|^2)^exponent`; vacuum nodes contribute 0.
pub fn fisher_with_exponent(f: &DiscreteDistribution, exponent: f64) -> f64 {
    let grid = f.grid();
    let dim = grid.dim();
    let grad = f.gradient_sqrt();
    let vals = f.values();
    quadrature(grid, |k| {
        if vals[k] <= EPS_FLOOR {
            return 0.0;
        }
        let mut p = vec![0.0; dim];
        grid.point(k, &mut p);
        let r2: f64 = p.iter().map(|x| x * x).sum();
        let g2: f64 = grad.at(k).iter().map(|x| x * x).sum();
        g2 * (1.0 + r2).powf(exponent)
    })
}

/// Fisher information with the weight `(1 + |v|^2)^min(gamma1/2, -1)`.
pub fn weighted_fisher(f: &DiscreteDistribution, gamma1: f64) -> f64 {
    fisher_with_exponent(f, fisher_exponent(gamma1))
}

pub fn fisher_exponent(gamma1: f64) -> f64 {
    (0.5 * gamma1).min(-1.0)
}
