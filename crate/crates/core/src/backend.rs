//! Solver backend selection shared by the distance and bound evaluators.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::Result;
use crate::plan::TransportPlan;
use crate::solve::{solve_exact, solve_sinkhorn, SinkhornOptions};

/// Instance size (n * m) up to which `Backend::Auto` stays exact.
pub const AUTO_EXACT_LIMIT: usize = 40_000;
/// The "auto" regularization rule: this fraction of the median cost entry.
pub const AUTO_EPSILON_FRACTION: f64 = 0.01;

/// Regularization strength for entropic solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Epsilon {
    Fixed(f64),
    /// `AUTO_EPSILON_FRACTION` times the median cost entry.
    AutoMedian,
}

impl Epsilon {
    pub fn resolve(self, cost: &CostMatrix) -> f64 {
        match self {
            Epsilon::Fixed(e) => e,
            Epsilon::AutoMedian => {
                let median = cost.median_entry();
                let scale = if median > 0.0 {
                    median
                } else {
                    cost.max_entry()
                };
                (AUTO_EPSILON_FRACTION * scale).max(1e-12)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornBackend {
    pub epsilon: Epsilon,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornBackend {
    fn default() -> Self {
        Self {
            epsilon: Epsilon::AutoMedian,
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

/// Which solver to run for an optimal transport subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Backend {
    Exact,
    Sinkhorn(SinkhornBackend),
    /// Exact while `n * m <= AUTO_EXACT_LIMIT`, entropic above.
    #[default]
    Auto,
}

/// The backend a solve actually ran with, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResolvedBackend {
    Exact,
    Sinkhorn { epsilon: f64 },
}

impl Backend {
    pub fn solve(
        &self,
        a: ArrayView1<'_, f64>,
        b: ArrayView1<'_, f64>,
        cost: &CostMatrix,
    ) -> Result<(TransportPlan, ResolvedBackend)> {
        match self {
            Backend::Exact => Ok((solve_exact(a, b, cost)?, ResolvedBackend::Exact)),
            Backend::Sinkhorn(cfg) => {
                let epsilon = cfg.epsilon.resolve(cost);
                let plan = solve_sinkhorn(
                    a,
                    b,
                    cost,
                    SinkhornOptions {
                        epsilon,
                        tol: cfg.tol,
                        max_iter: cfg.max_iter,
                    },
                )?;
                Ok((plan, ResolvedBackend::Sinkhorn { epsilon }))
            }
            Backend::Auto => {
                if a.len() * b.len() <= AUTO_EXACT_LIMIT {
                    Backend::Exact.solve(a, b, cost)
                } else {
                    Backend::Sinkhorn(SinkhornBackend::default()).solve(a, b, cost)
                }
            }
        }
    }
}
