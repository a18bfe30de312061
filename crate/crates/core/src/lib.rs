//! Landau collision operator: kernels, entropy-dissipation functionals,
//! inequality checkers and a conservative spatially homogeneous solver.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fft;
pub mod functionals;
pub mod generators;
pub mod grid;
pub mod inequalities;
pub mod kernels;
pub mod solver;
pub mod sum;

pub use error::{Error, Result};
pub use generators::{generate_distribution, DistributionKind, DistributionSpec};
pub use grid::{DiscreteDistribution, NormalizationTransform, VelocityGrid, VectorField};
pub use kernels::{CoefficientMethod, CollisionCoefficients, PsiSpec};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Densities below this value are treated as vacuum.
pub const EPS_FLOOR: f64 = 1e-30;
