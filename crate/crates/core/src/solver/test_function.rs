//! Test functions and the weak form of the collision operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{GradientScheme, LogGradient};
use crate::grid::DiscreteDistribution;
use crate::kernels::{packed_index, KernelTable, PsiSpec};
use crate::sum::par_sum_vec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `phi = 1`.
    Constant,
    /// `phi = v_axis`.
    Linear { axis: usize },
    /// `phi = |v|^2 / 2`.
    Energy,
    /// `phi = ln f`, on nodes where the log-gradient exists.
    LogF,
    /// `phi = (1 + |v|^2)^k chi(eta (1 + |v|^2)^(1/2))`.
    CutoffPower { k: f64, eta: f64 },
}

/// Smooth cutoff: `1` on `[0, 1]`, `0` on `[2, inf)` and
/// `1 - S(s - 1)` in between with `S(t) = 6t^5 - 15t^4 + 10t^3`.
/// Returns `(chi, chi', chi'')`.
pub fn cutoff(s: f64) -> (f64, f64, f64) {
    if s <= 1.0 {
        (1.0, 0.0, 0.0)
    } else if s >= 2.0 {
        (0.0, 0.0, 0.0)
    } else {
        let t = s - 1.0;
        let smooth = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d1 = 30.0 * t * t * (t - 1.0) * (t - 1.0);
        let d2 = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0);
        (1.0 - smooth, -d1, -d2)
    }
}

/// `phi`, its gradient and its Hessian (row-major) at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl TestFunction {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            TestFunction::Linear { axis } if axis >= dim => {
                Err(Error::validation(format!("axis {axis} out of range for dimension {dim}")))
            }
            TestFunction::CutoffPower { k, eta } if !(k.is_finite() && eta > 0.0 && eta < 1.0) => {
                Err(Error::validation(format!("cutoff_power needs finite k and eta in (0, 1), got {k}, {eta}")))
            }
            _ => Ok(()),
        }
    }

    /// Analytic derivatives; `None` for `LogF`, which depends on `f`.
    pub fn derivatives(&self, v: &[f64]) -> Option<Derivatives> {
        let n = v.len();
        let mut gradient = vec![0.0; n];
        let mut hessian = vec![0.0; n * n];
        let value = match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Linear { axis } => {
                gradient[axis] = 1.0;
                v[axis]
            }
            TestFunction::Energy => {
                gradient.copy_from_slice(v);
                for i in 0..n {
                    hessian[i * n + i] = 1.0;
                }
                0.5 * v.iter().map(|x| x * x).sum::<f64>()
            }
            TestFunction::LogF => return None,
            TestFunction::CutoffPower { k, eta } => {
                // phi = F(u), u = 1 + |v|^2.
                let u = 1.0 + v.iter().map(|x| x * x).sum::<f64>();
                let su = u.sqrt();
                let (chi, c1, c2) = cutoff(eta * su);
                let x1 = c1 * eta / (2.0 * su);
                let x2 = c2 * eta * eta / (4.0 * u) - c1 * eta / (4.0 * u * su);
                let f0 = u.powf(k) * chi;
                let f1 = k * u.powf(k - 1.0) * chi + u.powf(k) * x1;
                let f2 = k * (k - 1.0) * u.powf(k - 2.0) * chi + 2.0 * k * u.powf(k - 1.0) * x1 + u.powf(k) * x2;
                for i in 0..n {
                    gradient[i] = 2.0 * f1 * v[i];
                    for j in 0..n {
                        hessian[i * n + j] = 4.0 * f2 * v[i] * v[j] + if i == j { 2.0 * f1 } else { 0.0 };
                    }
                }
                f0
            }
        };
        Some(Derivatives {
            value,
            gradient,
            hessian,
        })
    }
}

/// `int Q(f, f) phi` together with the sum of the magnitudes of its terms,
/// which sets the scale for judging cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakFormValue {
    pub value: f64,
    pub scale: f64,
}

impl WeakFormValue {
    /// `|value| / scale`, zero when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.value.abs()
        } else {
            self.value.abs() / self.scale
        }
    }
}

/// Symmetrized pair sum for `int Q(f, f) phi`:
/// `1/2 sum f f a_ij (d_ij phi(v) + d_ij phi(w)) + sum f f b_i (d_i phi(v) - d_i phi(w))`.
/// For `phi = ln f` the equivalent first-order form
/// `-1/2 sum f f (g(v) - g(w))^T a (g(v) - g(w))` is used. Diagonal pairs are
/// skipped.
pub fn weak_form_rhs(f: &DiscreteDistribution, spec: &PsiSpec, phi: TestFunction) -> Result<WeakFormValue> {
    let grid = f.grid();
    let dim = grid.dim();
    phi.validate(dim)?;
    let table = KernelTable::new(grid, spec)?;
    let (codes, center) = table.offset_codes();
    let vals = f.values();
    let len = grid.len();
    let vol2 = grid.cell_volume() * grid.cell_volume();
    let pts = grid.points();

    if let TestFunction::LogF = phi {
        let lg = LogGradient::new(f, GradientScheme::LogCentral);
        let nodes: Vec<usize> = (0..len).filter(|&k| lg.is_valid(k)).collect();
        let sums = par_sum_vec(nodes.len(), 2, |t, out| {
            let v = nodes[t];
            let gv = lg.at(v);
            let mut dg = vec![0.0; dim];
            for &w in &nodes {
                if w == v {
                    continue;
                }
                let q = (codes[v] - codes[w] + center) as usize;
                let gw = lg.at(w);
                for d in 0..dim {
                    dg[d] = gv[d] - gw[d];
                }
                let mut quad = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        quad += dg[i] * table.a[packed_index(dim, i, j)][q] * dg[j];
                    }
                }
                let term = -0.5 * vals[v] * vals[w] * quad;
                out[0] += term;
                out[1] += term.abs();
            }
        });
        return Ok(WeakFormValue {
            value: sums[0] * vol2,
            scale: sums[1] * vol2,
        });
    }

    let derivs: Vec<Derivatives> = (0..len)
        .map(|k| phi.derivatives(&pts[k * dim..(k + 1) * dim]).expect("analytic test function"))
        .collect();
    let sums = par_sum_vec(len, 2, |v, out| {
        if vals[v] == 0.0 {
            return;
        }
        let dv = &derivs[v];
        for w in 0..len {
            if w == v || vals[w] == 0.0 {
                continue;
            }
            let q = (codes[v] - codes[w] + center) as usize;
            let dw = &derivs[w];
            let mut second = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    second += table.a[packed_index(dim, i, j)][q] * (dv.hessian[i * dim + j] + dw.hessian[i * dim + j]);
                }
            }
            let mut first = 0.0;
            for i in 0..dim {
                first += table.b[i][q] * (dv.gradient[i] - dw.gradient[i]);
            }
            let ff = vals[v] * vals[w];
            let t2 = 0.5 * ff * second;
            let t1 = ff * first;
            out[0] += t2 + t1;
            out[1] += t2.abs() + t1.abs();
        }
    });
    Ok(WeakFormValue {
        value: sums[0] * vol2,
        scale: sums[1] * vol2,
    })
}
