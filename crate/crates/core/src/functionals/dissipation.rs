//! The entropy dissipation `D_psi(f)` as a direct double sum over node pairs.

use serde::{Deserialize, Serialize};

use super::log_gradient::{GradientScheme, LogGradient};
use crate::error::{Error, Result};
use crate::grid::DiscreteDistribution;
use crate::kernels::{KernelTable, PsiSpec};
use crate::sum::par_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationForm {
    /// `1/2 sum f f psi (dg)^T Pi (dg)`.
    #[default]
    Projected,
    /// `1/4 sum_{i != j} f f psi / |z|^2 q_ij^2`.
    Pairdiff,
}

/// `D_psi(f)` with the default log-gradient.
pub fn entropy_dissipation(f: &DiscreteDistribution, spec: &PsiSpec, form: DissipationForm) -> Result<f64> {
    let table = KernelTable::new(f.grid(), spec)?;
    let lg = LogGradient::new(f, GradientScheme::LogCentral);
    dissipation_with(&table, f, &lg, form)
}

/// `D_psi(f)` for a precomputed kernel table and log-gradient. Pairs with
/// `w = v` or touching a node without a log-gradient are skipped.
pub fn dissipation_with(
    table: &KernelTable,
    f: &DiscreteDistribution,
    lg: &LogGradient,
    form: DissipationForm,
) -> Result<f64> {
    let grid = f.grid();
    if !table.grid().same_shape(grid) {
        return Err(Error::validation("distribution grid does not match the kernel grid"));
    }
    let dim = grid.dim();
    let vals = f.values();
    let active: Vec<usize> = (0..grid.len()).filter(|&k| lg.is_valid(k)).collect();
    let pts = grid.points();
    let (codes, center) = table.offset_codes();
    let psi = table.psi();
    let total = par_sum(active.len(), |a| {
        let v = active[a];
        let pv = &pts[v * dim..(v + 1) * dim];
        let gv = lg.at(v);
        let mut z = vec![0.0; dim];
        let mut dg = vec![0.0; dim];
        let mut acc = 0.0;
        for &w in &active {
            if w == v {
                continue;
            }
            let pw = &pts[w * dim..(w + 1) * dim];
            let gw = lg.at(w);
            let mut r2 = 0.0;
            for d in 0..dim {
                z[d] = pv[d] - pw[d];
                dg[d] = gv[d] - gw[d];
                r2 += z[d] * z[d];
            }
            let term = match form {
                DissipationForm::Projected => {
                    let mut g2 = 0.0;
                    let mut zg = 0.0;
                    for d in 0..dim {
                        g2 += dg[d] * dg[d];
                        zg += z[d] * dg[d];
                    }
                    0.5 * (g2 - zg * zg / r2)
                }
                DissipationForm::Pairdiff => {
                    let mut s = 0.0;
                    for i in 0..dim {
                        for j in 0..dim {
                            if i != j {
                                let q = z[i] * dg[j] - z[j] * dg[i];
                                s += q * q;
                            }
                        }
                    }
                    0.25 * s / r2
                }
            };
            let q = (codes[v] - codes[w] + center) as usize;
            acc += vals[w] * psi[q] * term;
        }
        vals[v] * acc
    });
    Ok(total * grid.cell_volume() * grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_positive(grid: &VelocityGrid, seed: u64) -> DiscreteDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DiscreteDistribution::new(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(0.1..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn forms_agree_and_are_nonnegative() {
        let g = VelocityGrid::new(3, 2.0, 6).unwrap();
        for seed in 0..5 {
            let f = random_positive(&g, seed);
            let a = entropy_dissipation(&f, &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
            let b = entropy_dissipation(&f, &PsiSpec::Coulomb, DissipationForm::Pairdiff).unwrap();
            assert!(a > 0.0);
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn quadratic_scaling() {
        let g = VelocityGrid::new(3, 2.0, 5).unwrap();
        let f = random_positive(&g, 9);
        let a = entropy_dissipation(&f, &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
        let b = entropy_dissipation(&f.scaled(3.0).unwrap(), &PsiSpec::Coulomb, DissipationForm::Projected)
            .unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn monotone_in_psi() {
        let g = VelocityGrid::new(3, 2.0, 5).unwrap();
        let f = random_positive(&g, 10);
        // On [0, 2 sqrt(3) * 2] both kernels are ordered: r^-1 >= r^-1.5 * 0.1.
        let big = entropy_dissipation(&f, &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
        let small = {
            let b = crate::kernels::BracketedPsi {
                k1: 1.0,
                k2: 1.0,
                k3: 0.01,
                delta: 2.0,
                gamma1: -3.5,
                gamma2: -3.5,
                terms: vec![crate::kernels::PsiTerm { coef: 0.1, power: -1.5 }],
            };
            entropy_dissipation(&f, &PsiSpec::Bracketed(b), DissipationForm::Projected).unwrap()
        };
        assert!(small <= big);
    }

    #[test]
    fn translation_invariance() {
        let g = VelocityGrid::new(3, 3.0, 8).unwrap();
        let bump = |c: f64| {
            DiscreteDistribution::from_fn(g.clone(), move |v| {
                let r2 = (v[0] - c).powi(2) + v[1] * v[1] + v[2] * v[2];
                (1.0 - r2 / 2.25).max(0.0).powi(3) * (1.0 + 0.3 * (v[1] * 2.0).sin().powi(2))
            })
            .unwrap()
        };
        let h = g.spacing();
        let a = entropy_dissipation(&bump(-0.5 * h), &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
        let b = entropy_dissipation(&bump(0.5 * h), &PsiSpec::Coulomb, DissipationForm::Projected).unwrap();
        assert!((a - b).abs() < 1e-10 * a, "{a} {b}");
    }
}
