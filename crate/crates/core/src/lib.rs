//! One-shot conditional entropies of finite-dimensional quantum states.
//!
//! # Modules
//!
//! - [`operator`]: Hermitian operators on labelled tensor products, fidelity, purified distance.
//! - [`sdp`]: primal-dual interior-point solver for Hermitian semidefinite programs.
//! - [`entropy`]: min-, max- and S-entropies (relative and optimized).
//! - [`smoothing`]: smooth entropies and constructive smoothing recipes.
//! - [`chain`]: error terms, chain-rule inequalities, counterexample, campaigns.
//! - [`verify`]: randomized invariant suites.
//!
//! All entropies are in bits.

pub mod error;
pub mod operator;
pub mod sdp;
pub mod entropy;
pub mod smoothing;
pub mod chain;
pub mod verify;

pub use error::{Error, Result};
