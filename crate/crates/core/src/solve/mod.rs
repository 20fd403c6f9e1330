//! Optimal transport solvers over the transportation polytope.

pub mod exact;
pub mod sinkhorn;

pub use exact::solve_exact;
pub use sinkhorn::{solve_sinkhorn, SinkhornOptions};
