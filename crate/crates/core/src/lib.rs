//! Entanglement hierarchy toolkit.
//!
//! Classifies the bipartite reduced states of multipartite pure states into
//! the S ≤ P ≤ N ≤ D ≤ M hierarchy (separable, PPT entangled, NPT
//! non-distillable, distillable but reduction-satisfying, reduction-violating),
//! classifies tripartite pure states by the triple of their reduced classes,
//! and replays the associated structural results numerically.
//!
//! Party 0 is always the slowest-varying tensor index.

pub mod error;
pub mod families;
pub mod classify;
pub mod criteria;
pub mod distill;
pub mod linalg;
pub mod multipartite;
pub mod petz;
pub mod qstate;
pub mod sampling;
pub mod statefile;
pub mod suites;

pub use error::{Error, Result};
