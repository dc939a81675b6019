//! Error terms, the eight chain inequalities, the reversed-rule counterexample and randomized
//! verification campaigns.

mod campaign;
mod counterexample;
mod rules;
mod terms;

pub use campaign::*;
pub use counterexample::*;
pub use rules::*;
pub use terms::*;
