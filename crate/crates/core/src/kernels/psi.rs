//! Collision-kernel laws `psi(|z|)` and the projection onto `z^perp`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius samples used to assert the sandwich of a bracketed kernel.
pub const SANDWICH_SAMPLES: usize = 1000;

/// `psi(r)` for the Landau kernel `a(z) = psi(|z|) Pi(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    /// `psi(r) = 1/r` in dimension 3.
    Coulomb,
    /// `psi(r) = r^(gamma + 2)`.
    PowerLaw { gamma: f64 },
    /// A user-supplied `psi` together with the bounds it is claimed to obey.
    Bracketed(BracketedPsi),
}

/// `psi(r) = sum_t coef_t r^power_t`, asserted to satisfy
/// `k3 min(1, r^(gamma1+2)) <= psi(r) <= k1 r^(2-delta) + k2 r^(gamma2+2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketedPsi {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub terms: Vec<PsiTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiTerm {
    pub coef: f64,
    pub power: f64,
}

/// Constants of the two-sided bound on `psi` used by the inequality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiBounds {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Surface area of the unit sphere in `R^dim`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

impl PsiSpec {
    /// Power-law terms `(coef, exponent)` making up `psi`.
    pub fn terms(&self) -> Vec<PsiTerm> {
        match self {
            PsiSpec::Coulomb => vec![PsiTerm { coef: 1.0, power: -1.0 }],
            PsiSpec::PowerLaw { gamma } => vec![PsiTerm { coef: 1.0, power: gamma + 2.0 }],
            PsiSpec::Bracketed(b) => b.terms.clone(),
        }
    }

    /// `psi(r)`; `+inf` at `r = 0` for singular laws.
    pub fn eval(&self, r: f64) -> f64 {
        self.terms()
            .iter()
            .map(|t| {
                if t.coef == 0.0 {
                    0.0
                } else if r == 0.0 && t.power < 0.0 {
                    f64::INFINITY
                } else {
                    t.coef * r.powf(t.power)
                }
            })
            .sum()
    }

    /// The exponent `gamma` of a pure power law.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            PsiSpec::Coulomb => Some(-3.0),
            PsiSpec::PowerLaw { gamma } => Some(*gamma),
            PsiSpec::Bracketed(_) => None,
        }
    }

    pub fn is_coulomb(&self) -> bool {
        matches!(self, PsiSpec::Coulomb)
    }

    pub fn bounds(&self) -> PsiBounds {
        match self {
            PsiSpec::Coulomb => PsiBounds {
                k1: 1.0,
                k2: 1.0,
                k3: 1.0,
                delta: 2.0,
                gamma1: -3.0,
                gamma2: -3.0,
            },
            PsiSpec::PowerLaw { gamma } => PsiBounds {
                k1: 1.0,
                k2: 1.0,
                k3: 1.0,
                delta: 2.0,
                gamma1: gamma.min(0.0),
                gamma2: *gamma,
            },
            PsiSpec::Bracketed(b) => PsiBounds {
                k1: b.k1,
                k2: b.k2,
                k3: b.k3,
                delta: b.delta,
                gamma1: b.gamma1,
                gamma2: b.gamma2,
            },
        }
    }

    /// Checks the parameters against the dimension they will be used in.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PsiSpec::Coulomb => {
                if dim != 3 {
                    return Err(Error::validation(format!(
                        "the Coulomb kernel is defined in dimension 3, not {dim}"
                    )));
                }
            }
            PsiSpec::PowerLaw { gamma } => {
                if !gamma.is_finite() {
                    return Err(Error::validation("power-law exponent must be finite"));
                }
            }
            PsiSpec::Bracketed(b) => b.validate()?,
        }
        Ok(())
    }
}

impl BracketedPsi {
    pub fn validate(&self) -> Result<()> {
        let positive = [("k1", self.k1), ("k2", self.k2), ("k3", self.k3)];
        for (name, k) in positive {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {k}")));
            }
        }
        if !(self.delta > 0.0 && self.delta <= 2.0) {
            return Err(Error::validation(format!("delta must lie in (0, 2], got {}", self.delta)));
        }
        if !(self.gamma1 <= 0.0) {
            return Err(Error::validation(format!("gamma1 must be <= 0, got {}", self.gamma1)));
        }
        let g2 = self.gamma2;
        if !((g2 > -4.0 && g2 < -2.0) || (g2 > -2.0 && g2 < 0.0)) {
            return Err(Error::validation(format!(
                "gamma2 must lie in (-4, -2) or (-2, 0), got {g2}"
            )));
        }
        if self.terms.is_empty()
            || self.terms.iter().any(|t| !(t.coef.is_finite() && t.power.is_finite()))
        {
            return Err(Error::validation("psi needs at least one finite term"));
        }
        let spec = PsiSpec::Bracketed(self.clone());
        for s in 0..SANDWICH_SAMPLES {
            let r = 10f64.powf(-3.0 + 6.0 * s as f64 / (SANDWICH_SAMPLES - 1) as f64);
            let psi = spec.eval(r);
            let lower = self.k3 * r.powf(self.gamma1 + 2.0).min(1.0);
            let upper = self.k1 * r.powf(2.0 - self.delta) + self.k2 * r.powf(g2 + 2.0);
            let tol = 1e-12 * psi.abs().max(lower).max(upper);
            if !(psi >= 0.0 && psi + tol >= lower && psi <= upper + tol) {
                return Err(Error::validation(format!(
                    "psi({r:e}) = {psi:e} violates the bounds [{lower:e}, {upper:e}]"
                )));
            }
        }
        Ok(())
    }
}

/// `Id - z z^T / |z|^2`, row-major.
pub fn projection(z: &[f64]) -> Result<Vec<f64>> {
    let r2: f64 = z.iter().map(|x| x * x).sum();
    if !(r2 > 0.0) {
        return Err(Error::validation("projection is undefined for z = 0"));
    }
    let n = z.len();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = if i == j { 1.0 } else { 0.0 } - z[i] * z[j] / r2;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coulomb_values() {
        assert_eq!(PsiSpec::Coulomb.eval(2.0), 0.5);
        assert_eq!(PsiSpec::Coulomb.eval(0.0), f64::INFINITY);
        assert_eq!(PsiSpec::PowerLaw { gamma: 0.0 }.eval(3.0), 9.0);
    }

    #[test]
    fn projection_examples() {
        let p = projection(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let s = 0.5f64.sqrt();
        let p = projection(&[s, s, 0.0]).unwrap();
        let expect = [0.5, -0.5, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(projection(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn json_tags() {
        let s: PsiSpec = serde_json::from_str(r#"{"kind":"coulomb"}"#).unwrap();
        assert_eq!(s, PsiSpec::Coulomb);
        let s: PsiSpec = serde_json::from_str(r#"{"kind":"power_law","gamma":-2.5}"#).unwrap();
        assert_eq!(s, PsiSpec::PowerLaw { gamma: -2.5 });
        let b = r#"{"kind":"bracketed","k1":1,"k2":1,"k3":0.5,"delta":1,"gamma1":-3,
            "gamma2":-3,"terms":[{"coef":1,"power":-1},{"coef":0.5,"power":1}]}"#;
        let s: PsiSpec = serde_json::from_str(b).unwrap();
        s.validate(3).unwrap();
        assert_eq!(serde_json::from_str::<PsiSpec>(&serde_json::to_string(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn bracketed_sandwich_violation() {
        let b = BracketedPsi {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            delta: 1.0,
            gamma1: -3.0,
            gamma2: -3.0,
            terms: vec![PsiTerm { coef: 1.0, power: 1.5 }],
        };
        assert!(b.validate().is_err());
    }

    #[test]
    fn coulomb_needs_three_dimensions() {
        assert!(PsiSpec::Coulomb.validate(2).is_err());
        assert!(PsiSpec::Coulomb.validate(3).is_ok());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_kills_z(
            z in proptest::collection::vec(-5.0f64..5.0, 3)
        ) {
            prop_assume!(z.iter().map(|x| x * x).sum::<f64>() > 1e-6);
            let p = projection(&z).unwrap();
            for i in 0..3 {
                let pz: f64 = (0..3).map(|j| p[i * 3 + j] * z[j]).sum();
                prop_assert!(pz.abs() < 1e-12);
                for j in 0..3 {
                    prop_assert_eq!(p[i * 3 + j], p[j * 3 + i]);
                    let pp: f64 = (0..3).map(|k| p[i * 3 + k] * p[k * 3 + j]).sum();
                    prop_assert!((pp - p[i * 3 + j]).abs() < 1e-12);
                }
            }
            let trace: f64 = (0..3).map(|i| p[i * 4]).sum();
            prop_assert!((trace - 2.0).abs() < 1e-12);
        }

        #[test]
        fn bracketed_respects_bounds(r in 1e-3f64..1e3) {
            let b = BracketedPsi {
                k1: 1.0, k2: 1.0, k3: 0.5, delta: 1.0, gamma1: -3.0, gamma2: -3.0,
                terms: vec![PsiTerm { coef: 1.0, power: -1.0 }, PsiTerm { coef: 0.5, power: 1.0 }],
            };
            let psi = PsiSpec::Bracketed(b.clone()).eval(r);
            prop_assert!(psi >= b.k3 * r.powf(b.gamma1 + 2.0).min(1.0));
            prop_assert!(psi <= b.k1 * r.powf(2.0 - b.delta) + b.k2 * r.powf(b.gamma2 + 2.0));
        }
    }
}
