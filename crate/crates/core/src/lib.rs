//! Convex-hull summaries of the near-optimal solutions of L1-regularized
//! regression and classification.
//!
//! The pipeline fits the optimum, samples extreme points of the level set
//! `{β : L(β) ≤ ν}` along random directions, greedily keeps the few points
//! whose hull best covers the sample, and measures the result against a fresh
//! evaluation sample.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod selector;

pub use error::{Error, Result};
