//! Diagnostic identities evaluated on a discrete state or a time series.

use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};
use super::operator::{CollisionOperator, OperatorEvaluation};
use crate::grid::{quadrature, DiscreteDistribution};
use crate::inequalities::moment_condition;
use crate::kernels::{collision_coefficients, CoefficientMethod, PsiSpec};

/// Terms of `d/dt int f^(k+1)/(k+1) = drift_term - dissipation_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpBalance {
    pub k: f64,
    /// `k int f^(k-1) sum_ij (a_ij * f) d_i f d_j f`.
    pub dissipation_term: f64,
    /// `k int f^k sum_i (b_i * f) d_i f`.
    pub drift_term: f64,
    pub net: f64,
}

/// Evaluated with the quantities of the discrete operator: `grad f = f g`
/// with `g` the central log-gradient, `a * f = A` and `b * f = C`, summed
/// over the active nodes. The singular-quadrature errors of `A` and `C`
/// then cancel in `net` exactly as they do in the flux.
pub fn lp_energy_balance(f: &DiscreteDistribution, spec: &PsiSpec, k: f64) -> Result<LpBalance> {
    let op = CollisionOperator::new(f.grid(), spec, CoefficientMethod::Fft)?;
    let eval = op.evaluate(f)?;
    lp_energy_balance_with(&eval, f, k)
}

pub(crate) fn lp_energy_balance_with(eval: &OperatorEvaluation, f: &DiscreteDistribution, k: f64) -> Result<LpBalance> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::validation(format!("k must be positive, got {k}")));
    }
    let (diss, drift) = eval.lp_terms(f, k);
    Ok(LpBalance {
        k,
        dissipation_term: diss,
        drift_term: drift,
        net: drift - diss,
    })
}

/// `int f^(k+1) / (k+1)`.
pub fn lp_functional(f: &DiscreteDistribution, k: f64) -> f64 {
    let vals = f.values();
    quadrature(f.grid(), |node| vals[node].max(0.0).powf(k + 1.0)) / (k + 1.0)
}

/// The non-conservative form `sum_ij (a_ij * f) d_ij f - (c * f) f` at
/// interior nodes, zero on the boundary layer.
pub fn nonconservative_operator(f: &DiscreteDistribution, spec: &PsiSpec, method: CoefficientMethod) -> Result<Vec<f64>> {
    let coeffs = collision_coefficients(f, spec, method)?;
    let c = coeffs
        .c()
        .ok_or_else(|| Error::validation("c * f is undefined for this kernel"))?;
    let grid = f.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let u = f.values();
    Ok((0..grid.len())
        .map(|k| {
            if !grid.is_interior(k) {
                return 0.0;
            }
            let mut acc = 0.0;
            for i in 0..dim {
                let si = grid.stride(i);
                for j in 0..dim {
                    let d2 = if i == j {
                        (u[k + si] - 2.0 * u[k] + u[k - si]) / (h * h)
                    } else {
                        let sj = grid.stride(j);
                        (u[k + si + sj] - u[k + si - sj] - u[k - si + sj] + u[k - si - sj]) / (4.0 * h * h)
                    };
                    acc += coeffs.a(k, i, j) * d2;
                }
            }
            acc - c[k] * u[k]
        })
        .collect())
}

/// Growth summary of one moment along a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTracking {
    pub l: f64,
    pub initial: f64,
    pub sup: f64,
    pub last: f64,
    /// Least-squares polynomial of degree at most 3 in `t / T`, lowest order
    /// first.
    pub fit: Vec<f64>,
    /// `max |M_l - fit| / sup M_l`.
    pub fit_residual: f64,
    /// `max log2(S(t) / S(t/2))` over `t` in the second half of the run,
    /// with `S` the running supremum of `M_l`. A polynomial of degree `d`
    /// with nonnegative coefficients gives at most `d`.
    pub growth_exponent: f64,
    /// `growth_exponent` exceeds [`MAX_POLYNOMIAL_DEGREE`].
    pub super_polynomial: bool,
    pub bounded: bool,
    pub moment_condition: bool,
}

/// Degree of the polynomial growth accepted by [`moment_tracking`].
pub const MAX_POLYNOMIAL_DEGREE: f64 = 3.0;

pub fn moment_tracking(series: &TimeSeries, l: f64) -> Result<MomentTracking> {
    let recs = &series.records;
    if recs.len() < 2 {
        return Err(Error::validation("moment tracking needs at least two records"));
    }
    let values: Vec<f64> = recs
        .iter()
        .map(|r| r.moment(l).ok_or_else(|| Error::validation(format!("moment of order {l} was not recorded"))))
        .collect::<Result<_>>()?;
    let t0 = recs[0].time;
    let span = (recs[recs.len() - 1].time - t0).max(f64::MIN_POSITIVE);
    let ts: Vec<f64> = recs.iter().map(|r| (r.time - t0) / span).collect();
    let degree = 3.min(recs.len() - 1);
    let fit = polyfit(&ts, &values, degree)?;
    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let residual = ts
        .iter()
        .zip(&values)
        .map(|(t, m)| (m - polyval(&fit, *t)).abs())
        .fold(0.0, f64::max)
        / sup.abs().max(f64::MIN_POSITIVE);
    let growth = growth_exponent(&ts, &values);
    let bounds = series.psi.bounds();
    Ok(MomentTracking {
        l,
        initial: values[0],
        sup,
        last: values[values.len() - 1],
        fit,
        fit_residual: residual,
        growth_exponent: growth,
        super_polynomial: !(growth <= MAX_POLYNOMIAL_DEGREE),
        bounded: values.iter().all(|m| m.is_finite()),
        moment_condition: moment_condition(bounds.gamma1, bounds.gamma2),
    })
}

/// `S(t/2)` is interpolated linearly between samples.
fn growth_exponent(ts: &[f64], values: &[f64]) -> f64 {
    let mut running = Vec::with_capacity(values.len());
    let mut s = f64::NEG_INFINITY;
    for &m in values {
        s = s.max(m);
        running.push(s);
    }
    let mut worst = f64::NEG_INFINITY;
    for (k, &t) in ts.iter().enumerate() {
        if t < 0.5 {
            continue;
        }
        let half = 0.5 * t;
        let j = ts.iter().rposition(|&u| u <= half).unwrap_or(0);
        let den = if j + 1 < ts.len() && ts[j + 1] > ts[j] {
            let w = (half - ts[j]) / (ts[j + 1] - ts[j]);
            running[j] + w * (running[j + 1] - running[j])
        } else {
            running[j]
        };
        let num = running[k];
        let e = if den > 0.0 {
            (num / den).log2()
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(e);
    }
    worst
}

fn polyval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

/// Least squares through the normal equations, solved by Gaussian
/// elimination with partial pivoting.
fn polyfit(t: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&ti, &yi) in t.iter().zip(y) {
        let powers: Vec<f64> = (0..m).map(|p| ti.powi(p as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += powers[r] * powers[c];
            }
            a[r][m] += powers[r] * yi;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular polynomial fit".into()));
        }
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    Ok((0..m).map(|r| a[r][m] / a[r][r]).collect())
}
