//! Wasserstein distance of order p between discrete measures.

use crate::backend::{Backend, ResolvedBackend};
use crate::cost::cost_matrix;
use crate::error::Result;
use crate::measure::DiscreteMeasure;
use crate::plan::TransportPlan;

/// The distance together with the plan that realizes it.
#[derive(Debug, Clone)]
pub struct WassersteinResult {
    pub distance: f64,
    pub plan: TransportPlan,
    pub order: f64,
    pub backend: ResolvedBackend,
}

/// W_p(mu, nu) under the Euclidean ground metric.
///
/// Solves `min <gamma, d^p>` over U(a, b) and roots the objective, so the
/// exact backend returns the true discrete Wasserstein distance.
pub fn wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    backend: &Backend,
) -> Result<WassersteinResult> {
    let cost = cost_matrix(mu, nu, p)?;
    let (plan, resolved) = backend.solve(mu.weights(), nu.weights(), &cost)?;
    // Root of a tiny negative float (identical measures) must stay 0, not NaN.
    let distance = plan.objective.max(0.0).powf(1.0 / p);
    Ok(WassersteinResult {
        distance,
        plan,
        order: p,
        backend: resolved,
    })
}
