//! Black-box optimization with attention-parameterized evolutionary operators.
//!
//! The optimizer keeps a population of candidate solutions and produces
//! offspring through three differentiable operators: an attention-based
//! selection matrix, a residual crossover MLP and a gene-wise attention
//! mutation. After every generation the operator parameters take one AdamW
//! step that pulls the offspring toward the elite archive.
//!
//! The crate also ships canonical benchmark functions, a UAV path-planning
//! objective, classical baselines (random search, DE, PSO) and an experiment
//! harness with rank-sum statistics and CSV/JSON reporting.

pub mod adaptation;
pub mod baselines;
pub mod benchmarks;
mod error;
pub mod evolution;
pub mod harness;
pub mod numerics;
pub mod operators;

pub use error::{Error, Result};
