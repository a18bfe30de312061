//! Serializable summary of the functionals of one distribution.

use serde::{Deserialize, Serialize};

use super::dissipation::{entropy_dissipation, DissipationForm};
use super::moments::{moments, weighted_fisher};
use crate::error::Result;
use crate::grid::DiscreteDistribution;
use crate::kernels::PsiSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    pub abs_entropy: f64,
    pub dissipation: f64,
    /// Fisher information weighted by `(1 + |v|^2)^min(gamma1/2, -1)`.
    pub fisher_weighted: f64,
    pub form: DissipationForm,
    /// Nodes per axis.
    pub resolution: usize,
    pub psi: PsiSpec,
}

pub fn functional_report(f: &DiscreteDistribution, psi: &PsiSpec, form: DissipationForm) -> Result<FunctionalReport> {
    let m = moments(f, &[]);
    Ok(FunctionalReport {
        mass: m.mass,
        momentum: m.momentum,
        energy: m.energy,
        entropy: m.entropy,
        abs_entropy: m.abs_entropy,
        dissipation: entropy_dissipation(f, psi, form)?,
        fisher_weighted: weighted_fisher(f, psi.bounds().gamma1),
        form,
        resolution: f.grid().nodes_per_axis(),
        psi: psi.clone(),
    })
}
