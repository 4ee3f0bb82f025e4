//! The product space `Z = X × Y` and self-adjoint operators acting on it.
//!
//! Operators come in four storage forms: scaled identity, diagonal, dense
//! symmetric and Gram (`shift·I + scale·FᵀF` or `FFᵀ`). Spectra are computed
//! by a dense symmetric eigendecomposition the first time they are needed and
//! cached on the operator; Gram operators share one decomposition per factor.

mod block;
mod operator;
mod point;

pub use block::{apply, extremal_eigs, solve_spd, weighted_norm_sq, BlockOperator};
pub use operator::{
    GramFactor, GramSide, Representation, SelfAdjointOperator, PD_TOL, PSD_TOL, SYMMETRY_TOL,
};
pub use point::ProductPoint;
