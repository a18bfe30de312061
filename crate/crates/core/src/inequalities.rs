//! Numerical checks of the functional inequalities satisfied by solutions
//! of the Landau equation.
//!
//! Every checker returns an [`InequalityReport`] comparing a left-hand side
//! against a right-hand side. Reports built from explicit constants decide
//! pass/fail; ratio-only reports use a unit constant and are informative.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functionals::{
    check_normalized, entropy_dissipation, fisher_exponent, fisher_with_exponent, gamma_determinant,
    gamma_floor, lambda0, moments, weighted_fisher, DissipationForm,
};
use crate::grid::{quadrature, DiscreteDistribution};
use crate::kernels::{sphere_area, KernelTable, PsiSpec};
use crate::sum::par_sum;

/// Multiplicative slack granted to the right-hand side.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Largest deviation under axis rotations accepted as radial symmetry.
pub const RADIAL_TOLERANCE: f64 = 1e-3;

/// The constant multiplying the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantUsed {
    Explicit(f64),
    /// No explicit constant is known; the right-hand side uses `C = 1`.
    RatioOnly,
}

impl Serialize for ConstantUsed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ConstantUsed::Explicit(c) => s.serialize_f64(*c),
            ConstantUsed::RatioOnly => s.serialize_str("ratio-only"),
        }
    }
}

impl<'de> Deserialize<'de> for ConstantUsed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Label(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(c) => Ok(ConstantUsed::Explicit(c)),
            Raw::Label(l) if l == "ratio-only" => Ok(ConstantUsed::RatioOnly),
            Raw::Label(l) => Err(serde::de::Error::custom(format!("unknown constant label {l:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: ConstantUsed,
    pub holds: bool,
    /// `rhs / lhs`, absent when `lhs = 0`.
    pub slack: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, constant_used: ConstantUsed) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            constant_used,
            holds: lhs <= rhs * (1.0 + RELATIVE_TOLERANCE),
            slack: (lhs > 0.0).then(|| rhs / lhs),
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, key: &str, value: f64) -> Self {
        self.inputs.insert(key.to_string(), value);
        self
    }

    /// True when the report carries an explicit constant and so decides
    /// pass/fail.
    pub fn is_explicit(&self) -> bool {
        matches!(self.constant_used, ConstantUsed::Explicit(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EddMode {
    /// Explicit constants for radial data, Coulomb kernel, `N = 3`.
    RadialExplicit,
    /// `int |grad sqrt f|^2 w` against `1 + D` with unit constant.
    Ratio,
}

/// `108 13^(3/2) (16 pi / 3)^(4/3)`.
pub fn edd_radial_constant() -> f64 {
    108.0 * 13f64.powf(1.5) * (16.0 * PI / 3.0).powf(4.0 / 3.0)
}

/// Entropy-dissipation estimate: weighted Fisher information bounded by
/// `C (1 + D)`.
pub fn check_edd_theorem(f: &DiscreteDistribution, spec: &PsiSpec, mode: EddMode) -> Result<InequalityReport> {
    let dim = f.grid().dim();
    let m = moments(f, &[]);
    match mode {
        EddMode::RadialExplicit => {
            if dim != 3 || !spec.is_coulomb() {
                return Err(Error::validation("radial_explicit needs N = 3 and the Coulomb kernel"));
            }
            let dev = f.rotation_deviation();
            if dev > RADIAL_TOLERANCE {
                return Err(Error::validation(format!(
                    "distribution is not radial (rotation deviation {dev:e})"
                )));
            }
            check_normalized(f)?;
            let lhs = fisher_with_exponent(f, -1.5);
            let d = entropy_dissipation(f, spec, DissipationForm::Projected)?;
            let hbar = m.abs_entropy;
            let c = edd_radial_constant();
            let rhs = c * (16.0 * hbar / 3.0).exp() * (2.0 + 128.0 / 3.0 * d);
            Ok(InequalityReport::new("edd_radial", lhs, rhs, ConstantUsed::Explicit(c))
                .with_input("abs_entropy", hbar)
                .with_input("dissipation", d)
                .with_input("rotation_deviation", dev))
        }
        EddMode::Ratio => {
            let gamma1 = spec.bounds().gamma1;
            let lhs = weighted_fisher(f, gamma1);
            let d = entropy_dissipation(f, spec, DissipationForm::Projected)?;
            Ok(InequalityReport::new("edd_ratio", lhs, 1.0 + d, ConstantUsed::RatioOnly)
                .with_input("dissipation", d)
                .with_input("gamma1", gamma1)
                .with_input("ratio", lhs / (1.0 + d)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum SobolevVariant {
    /// Dimension-generic form with unit constant; `q` is the Lebesgue
    /// exponent used when `N = 2`.
    General { q: Option<f64> },
    /// `N = 3`, `gamma1 = -3`, constants `6/sqrt(pi)` and `8/(3 sqrt(pi))`,
    /// Fisher weight `(1 + |v|^2)^(-3/2)`.
    CoulombExplicit,
    /// As `CoulombExplicit` with the Fisher weight `(1 + |v|^2)^(+3/2)`.
    CoulombDisplay,
}

/// Weighted Sobolev embedding of `sqrt f`.
pub fn check_sobolev(f: &DiscreteDistribution, gamma1: f64, variant: SobolevVariant) -> Result<InequalityReport> {
    let grid = f.grid();
    let dim = grid.dim();
    let mass = moments(f, &[]).mass;
    match variant {
        SobolevVariant::General { q } => {
            let m = fisher_exponent(gamma1);
            let p = if dim >= 3 {
                dim as f64 / (dim as f64 - 2.0)
            } else {
                let q = q.ok_or_else(|| Error::validation("dimension 2 needs an exponent q"))?;
                if !(q >= 1.0 && q.is_finite()) {
                    return Err(Error::validation(format!("q must be finite and >= 1, got {q}")));
                }
                q
            };
            let lhs = weighted_power_integral(f, p, p * m).powf(1.0 / p);
            let moment = if dim >= 3 {
                crate::functionals::weighted_lp(f, 1.0, 2.0)?
            } else {
                mass
            };
            let fisher = weighted_fisher(f, gamma1);
            Ok(InequalityReport::new("sobolev_general", lhs, moment + fisher, ConstantUsed::RatioOnly)
                .with_input("gamma1", gamma1)
                .with_input("exponent", p)
                .with_input("moment", moment)
                .with_input("fisher", fisher))
        }
        SobolevVariant::CoulombExplicit | SobolevVariant::CoulombDisplay => {
            if dim != 3 {
                return Err(Error::validation("the explicit Sobolev constants need N = 3"));
            }
            let lhs = weighted_power_integral(f, 3.0, -4.5).cbrt();
            let (name, weight) = match variant {
                SobolevVariant::CoulombExplicit => ("sobolev_coulomb", -1.5),
                _ => ("sobolev_coulomb_display", 1.5),
            };
            let fisher = fisher_with_exponent(f, weight);
            let c0 = 6.0 / PI.sqrt();
            let c1 = 8.0 / (3.0 * PI.sqrt());
            Ok(InequalityReport::new(name, lhs, c0 * mass + c1 * fisher, ConstantUsed::Explicit(c1))
                .with_input("mass", mass)
                .with_input("fisher", fisher)
                .with_input("fisher_weight_exponent", weight))
        }
    }
}

/// `int f^p (1 + |v|^2)^e`.
fn weighted_power_integral(f: &DiscreteDistribution, p: f64, e: f64) -> f64 {
    let grid = f.grid();
    let dim = grid.dim();
    let vals = f.values();
    quadrature(grid, |k| {
        if vals[k] == 0.0 {
            return 0.0;
        }
        let mut pt = vec![0.0; dim];
        grid.point(k, &mut pt);
        let r2: f64 = pt.iter().map(|x| x * x).sum();
        vals[k].powf(p) * (1.0 + r2).powf(e)
    })
}

/// `|| |x|^(gamma2+2) 1_{|x| <= 1} ||_{L^r}`.
pub fn young_kernel_norm(dim: usize, gamma2: f64, r: f64) -> f64 {
    (sphere_area(dim) / (r * (gamma2 + 2.0) + dim as f64)).powf(1.0 / r)
}

/// Young-type bound on `int_{R^N} int_{B(0,R)} f f psi`.
pub fn check_young(f: &DiscreteDistribution, spec: &PsiSpec, radius: f64, r: f64) -> Result<InequalityReport> {
    let grid = f.grid();
    let dim = grid.dim();
    let b = spec.bounds();
    let g2 = b.gamma2;
    if !(g2 > -4.0 && g2 < -2.0) {
        return Err(Error::validation(format!("gamma2 must lie in (-4, -2), got {g2}")));
    }
    let r_max = dim as f64 / (-g2 - 2.0);
    if !(r >= 1.0 && r < r_max) {
        return Err(Error::validation(format!("r must lie in [1, {r_max}), got {r}")));
    }
    if !(radius > 0.0) {
        return Err(Error::validation(format!("radius must be positive, got {radius}")));
    }
    let table = KernelTable::new(grid, spec)?;
    let (codes, center) = table.offset_codes();
    let psi = table.psi();
    let vals = f.values();
    let pts = grid.points();
    let in_ball = |k: usize| pts[k * dim..(k + 1) * dim].iter().map(|x| x * x).sum::<f64>() <= radius * radius;
    let lhs = par_sum(grid.len(), |v| {
        if vals[v] == 0.0 || !in_ball(v) {
            return 0.0;
        }
        let mut acc = 0.0;
        for w in 0..grid.len() {
            if w != v && vals[w] != 0.0 {
                acc += vals[w] * psi[(codes[v] - codes[w] + center) as usize];
            }
        }
        vals[v] * acc
    }) * grid.cell_volume()
        * grid.cell_volume();
    let l1 = moments(f, &[]).mass;
    let l1_2 = crate::functionals::weighted_lp(f, 1.0, 2.0)?;
    let r_conj = if r == 1.0 { f64::INFINITY } else { r / (r - 1.0) };
    let ball: Vec<f64> = (0..grid.len()).map(|k| if in_ball(k) { vals[k] } else { 0.0 }).collect();
    let local = crate::functionals::weighted_lp(&DiscreteDistribution::from_parts(grid.clone(), ball), r_conj, 0.0)?;
    let kappa = young_kernel_norm(dim, g2, r);
    let rhs = (4.0 * b.k1 * l1_2 + (b.k1 + b.k2) * l1) * l1 + b.k2 * kappa * local * l1;
    Ok(InequalityReport::new("young", lhs, rhs, ConstantUsed::Explicit(b.k2 * kappa))
        .with_input("radius", radius)
        .with_input("r", r)
        .with_input("l1", l1)
        .with_input("l1_2", l1_2)
        .with_input("local_norm", local))
}

/// Exponents of a weighted Hölder interpolation: `1/q = beta/q1 + (1-beta)/q2`
/// and `a = beta a1 + (1 - beta) a2`, with the weight `(1 + |x|^2)^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationExponents {
    #[serde(with = "exponent")]
    pub q1: f64,
    pub a1: f64,
    #[serde(with = "exponent")]
    pub q2: f64,
    pub a2: f64,
    pub beta: f64,
}

/// Lebesgue exponents in JSON: a number, or `"inf"`.
pub mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() && *q > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Label(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(q) => Ok(q),
            Raw::Label(l) if l == "inf" => Ok(f64::INFINITY),
            Raw::Label(l) => Err(serde::de::Error::custom(format!("exponent must be a number or \"inf\", got {l:?}"))),
        }
    }
}

impl InterpolationExponents {
    fn validate(&self) -> Result<()> {
        let ok_q = |q: f64| q >= 1.0 && !q.is_nan();
        if !(ok_q(self.q1) && ok_q(self.q2)) {
            return Err(Error::validation("exponents q1, q2 must lie in [1, inf]"));
        }
        if !(self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::validation("weights a1, a2 must be finite"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::validation(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }

    /// The interpolated pair `(q, a)`.
    pub fn target(&self) -> (f64, f64) {
        let b = self.beta;
        let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
        let s = b * inv(self.q1) + (1.0 - b) * inv(self.q2);
        let q = if b == 1.0 {
            self.q1
        } else if b == 0.0 {
            self.q2
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / s
        };
        let a = if b == 1.0 {
            self.a1
        } else if b == 0.0 {
            self.a2
        } else {
            b * self.a1 + (1.0 - b) * self.a2
        };
        (q, a)
    }
}

/// `|| (1 + |x|^2)^a f ||_{L^q}`, `q` possibly infinite.
pub fn weighted_norm(f: &DiscreteDistribution, q: f64, a: f64) -> Result<f64> {
    crate::functionals::weighted_lp(f, q, 2.0 * a)
}

fn hoelder_rhs(n1: f64, n2: f64, beta: f64) -> f64 {
    // Zero exponents contribute exactly 1, even for zero or infinite norms.
    let p1 = if beta == 0.0 { 1.0 } else { n1.powf(beta) };
    let p2 = if beta == 1.0 { 1.0 } else { n2.powf(1.0 - beta) };
    p1 * p2
}

/// Weighted Hölder interpolation for one distribution.
pub fn check_interpolation(f: &DiscreteDistribution, e: InterpolationExponents) -> Result<InequalityReport> {
    e.validate()?;
    let (q, a) = e.target();
    let lhs = weighted_norm(f, q, a)?;
    let n1 = weighted_norm(f, e.q1, e.a1)?;
    let n2 = weighted_norm(f, e.q2, e.a2)?;
    Ok(InequalityReport::new("interpolation", lhs, hoelder_rhs(n1, n2, e.beta), ConstantUsed::Explicit(1.0))
        .with_input("q", q)
        .with_input("a", a)
        .with_input("beta", e.beta))
}

/// Time exponents of the mixed-norm interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeExponents {
    #[serde(with = "exponent")]
    pub p1: f64,
    #[serde(with = "exponent")]
    pub p2: f64,
}

/// `( int_0^T || (1 + |x|^2)^a f(t) ||_q^p dt )^(1/p)` by the trapezoid rule.
pub fn mixed_norm(times: &[f64], states: &[DiscreteDistribution], p: f64, q: f64, a: f64) -> Result<f64> {
    let norms: Vec<f64> = states.iter().map(|f| weighted_norm(f, q, a)).collect::<Result<_>>()?;
    if p.is_infinite() {
        return Ok(norms.iter().copied().fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        acc += 0.5 * dt * (norms[k - 1].powf(p) + norms[k].powf(p));
    }
    Ok(acc.powf(1.0 / p))
}

/// Mixed `L^p(0, T; L^q_a)` Hölder interpolation along a time series.
pub fn check_interpolation_time(
    times: &[f64],
    states: &[DiscreteDistribution],
    t: TimeExponents,
    e: InterpolationExponents,
) -> Result<InequalityReport> {
    e.validate()?;
    if times.len() != states.len() || times.len() < 2 {
        return Err(Error::validation("need at least two samples with matching times"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("times must be strictly increasing"));
    }
    if !(t.p1 >= 1.0 && t.p2 >= 1.0) {
        return Err(Error::validation("time exponents must lie in [1, inf]"));
    }
    let (q, a) = e.target();
    let (p, _) = InterpolationExponents { q1: t.p1, a1: 0.0, q2: t.p2, a2: 0.0, beta: e.beta }.target();
    let lhs = mixed_norm(times, states, p, q, a)?;
    let n1 = mixed_norm(times, states, t.p1, e.q1, e.a1)?;
    let n2 = mixed_norm(times, states, t.p2, e.q2, e.a2)?;
    Ok(InequalityReport::new("interpolation_time", lhs, hoelder_rhs(n1, n2, e.beta), ConstantUsed::Explicit(1.0))
        .with_input("p", p)
        .with_input("q", q)
        .with_input("a", a)
        .with_input("beta", e.beta))
}

/// Lower bound on `Gamma_{lambda_0, i, j}` for every pair of axes.
pub fn check_gamma_lower_bound(f: &DiscreteDistribution, hbar: f64) -> Result<InequalityReport> {
    if f.grid().dim() != 3 {
        return Err(Error::validation("the explicit Gamma floor is stated for N = 3"));
    }
    let h = moments(f, &[]).abs_entropy;
    if h > hbar {
        return Err(Error::validation(format!("abs entropy {h} exceeds the bound {hbar}")));
    }
    let lambda = lambda0(hbar);
    let floor = gamma_floor(hbar);
    let mut worst = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                worst = worst.min(gamma_determinant(f, lambda, i, j)?.gamma_value);
            }
        }
    }
    Ok(InequalityReport::new("gamma_floor", floor, worst, ConstantUsed::Explicit(floor))
        .with_input("hbar", hbar)
        .with_input("abs_entropy", h)
        .with_input("lambda0", lambda))
}

/// Roundoff band around the boundary of the moment condition.
pub const MOMENT_CONDITION_TOLERANCE: f64 = 1e-12;

/// `(gamma2 + 2)(1 - min(gamma1/2, -1)) > -4`; values within roundoff of the
/// boundary count as on it, so `gamma1 = gamma2 = -2 sqrt(3)` is rejected.
pub fn moment_condition(gamma1: f64, gamma2: f64) -> bool {
    (gamma2 + 2.0) * (1.0 - (0.5 * gamma1).min(-1.0)) + 4.0 > 4.0 * MOMENT_CONDITION_TOLERANCE
}
