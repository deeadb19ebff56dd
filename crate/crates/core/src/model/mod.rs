//! Objectives and the two L1 solvers.
//!
//! Squared loss is minimized by cyclic coordinate descent (Gram form for
//! moderate `p`, residual form beyond [`SolverConfig::gram_limit`]); logistic
//! loss by proximal gradient with backtracking. Both solvers try an exact
//! solve on the current support once the sign pattern stops changing, and
//! only stop when the KKT residual is below tolerance.

mod dataset;
mod loss;
mod solver;

pub use dataset::Dataset;
pub use loss::{FitScale, LossKind, LossModel};
pub use solver::{FitResult, SolverConfig};
