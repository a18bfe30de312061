//! Collision kernels and the nonlocal coefficients of the operator.

pub mod coefficients;
pub mod psi;

pub(crate) use coefficients::direct_convolutions;
pub use coefficients::{
    collision_coefficients, max_eigenvalue, packed_index, packed_len, symmetric_eigenvalues,
    CoefficientEngine, CoefficientMethod, CollisionCoefficients, KernelTable,
};
pub use psi::{projection, sphere_area, BracketedPsi, PsiBounds, PsiSpec, PsiTerm};
