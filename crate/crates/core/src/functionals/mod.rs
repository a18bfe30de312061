//! Scalar functionals of a distribution.

pub mod dissipation;
pub mod gamma;
pub mod log_gradient;
pub mod moments;
pub mod report;

pub use dissipation::{dissipation_with, entropy_dissipation, DissipationForm};
pub use gamma::{
    check_normalized, gamma_determinant, gamma_floor, lambda0, reconstruct_log_gradient, GammaDeterminant,
    Reconstructor,
};
pub use log_gradient::{GradientScheme, LogGradient};
pub use moments::{fisher_exponent, fisher_with_exponent, moments, weighted_fisher, weighted_lp, MomentSummary};
pub use report::{functional_report, FunctionalReport};
