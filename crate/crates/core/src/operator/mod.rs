//! Hermitian operator algebra over labelled tensor-product spaces, fidelity
//! and purified distance, purifications and seeded state generators.

mod hermitian;
pub(crate) use hermitian::{checked_eigen, checked_eigenvalues};
pub mod io;
mod layout;
pub mod random;
mod state;

pub use hermitian::{
    complexify_matrix, eig_h, fidelity_psd, hermitian_deviation, negative_projector, partial_trace, pinv_sqrt,
    psd_power, psd_sqrt, realify_matrix, symmetrize, tensor, trace_norm, trace_product, CMat, CVec,
    EigenDecomposition, HermitianOperator, Spectrum,
};
pub use layout::{parse_labels, Factor, Split, SystemLayout};
pub(crate) use layout::IndexSplit;
pub use random::{random_pure, random_state};
pub use state::{
    fidelity, generalized_fidelity, matching_extension, purified_distance, purify, purify_with, state_sqrt,
    PureState, QuantumState,
};

/// Eigenvalues within ±1e-10 count as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Entrywise tolerance for Hermiticity validation.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a state is −1e-9.
pub const STATE_EIG_TOL: f64 = 1e-9;
/// Admissible trace overshoot of a state.
pub const STATE_TRACE_TOL: f64 = 1e-9;
