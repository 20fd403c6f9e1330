//! Transport plans (couplings) with certified marginals.

use ndarray::{Array1, Array2};

use crate::cost::CostMatrix;

/// A coupling between two discrete measures, together with the marginals it
/// was solved against and the transport cost it realizes.
///
/// `objective` is always the plain transport cost `<coupling, C>_F`; entropic
/// solvers do NOT fold their regularization term into it. `marginal_violation`
/// is the L1 deviation of the realized row/column sums from `row_marginal`
/// and `col_marginal`.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    pub row_marginal: Array1<f64>,
    pub col_marginal: Array1<f64>,
    pub objective: f64,
    pub marginal_violation: f64,
    /// Iterations spent by the solver that produced this plan.
    pub iterations: usize,
    /// False when an iterative solver hit its iteration cap before meeting
    /// its marginal tolerance.
    pub converged: bool,
}

impl TransportPlan {
    pub(crate) fn from_coupling(
        coupling: Array2<f64>,
        row_marginal: Array1<f64>,
        col_marginal: Array1<f64>,
        cost: &CostMatrix,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let objective = frobenius(&coupling, cost.entries());
        let marginal_violation = l1_marginal_violation(&coupling, &row_marginal, &col_marginal);
        Self {
            coupling,
            row_marginal,
            col_marginal,
            objective,
            marginal_violation,
            iterations,
            converged,
        }
    }

    /// Recompute `<coupling, C>_F` from scratch; used by integrity checks.
    pub fn recompute_objective(&self, cost: &CostMatrix) -> f64 {
        frobenius(&self.coupling, cost.entries())
    }
}

pub(crate) fn frobenius(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn l1_marginal_violation(
    coupling: &Array2<f64>,
    a: &Array1<f64>,
    b: &Array1<f64>,
) -> f64 {
    let mut v = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        v += (coupling.row(i).sum() - ai).abs();
    }
    for (j, &bj) in b.iter().enumerate() {
        v += (coupling.column(j).sum() - bj).abs();
    }
    v
}
