//! Measures over measures and the hierarchical Wasserstein distance.
//!
//! A [`MeasureOfMeasures`] is a weighted collection of [`DiscreteMeasure`]
//! atoms. HW_p solves an outer transport problem whose ground cost between
//! two atoms is their inner Wasserstein distance: the outer objective is
//! computed on W_p^p entries and rooted at the end, so HW_p composes the
//! same way W_p does. [`flatten`] collapses the hierarchy into the mixture
//! measure, which is what the hierarchical monotonicity inequality
//! `W_p(flatten(phi), flatten(psi)) <= HW_p(phi, psi)` compares against.

use ndarray::{Array1, Array2};

use crate::backend::{Backend, ResolvedBackend};
use crate::cost::{CostMatrix, GroundMetric};
use crate::error::{Error, Result};
use crate::measure::{validate_simplex, DiscreteMeasure};
use crate::plan::TransportPlan;
use crate::wasserstein::wasserstein;

/// A discrete measure whose atoms are themselves discrete measures.
#[derive(Debug, Clone)]
pub struct MeasureOfMeasures {
    atoms: Vec<DiscreteMeasure>,
    weights: Array1<f64>,
}

impl MeasureOfMeasures {
    pub fn new(atoms: Vec<DiscreteMeasure>, weights: Array1<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: atoms.len(),
                right: weights.len(),
            });
        }
        validate_simplex(weights.view())?;
        let d = atoms[0].dim();
        for atom in &atoms[1..] {
            if atom.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: atom.dim(),
                });
            }
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform outer weights over the given atoms.
    pub fn uniform(atoms: Vec<DiscreteMeasure>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::EmptySupport);
        }
        let w = Array1::from_elem(k, 1.0 / k as f64);
        Self::new(atoms, w)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[DiscreteMeasure] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &DiscreteMeasure {
        &self.atoms[i]
    }

    pub fn weights(&self) -> ndarray::ArrayView1<'_, f64> {
        self.weights.view()
    }
}

/// Result of a hierarchical Wasserstein solve.
#[derive(Debug, Clone)]
pub struct HierarchicalResult {
    pub distance: f64,
    /// Outer h x l coupling between the two atom sets.
    pub outer_plan: TransportPlan,
    /// Pairwise inner W_p values (not raised to p).
    pub inner_cost: Array2<f64>,
    pub order: f64,
    pub outer_backend: ResolvedBackend,
}

/// Pairwise inner distances: entry (i, j) = W_p(phi_i, psi_j).
pub fn inner_cost_matrix(
    phi: &MeasureOfMeasures,
    psi: &MeasureOfMeasures,
    p: f64,
    backend: &Backend,
) -> Result<Array2<f64>> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: psi.dim(),
        });
    }
    let h = phi.len();
    let l = psi.len();
    let mut w = Array2::zeros((h, l));
    for i in 0..h {
        for j in 0..l {
            w[[i, j]] = wasserstein(phi.atom(i), psi.atom(j), p, backend)?.distance;
        }
    }
    Ok(w)
}

/// HW_p(phi, psi): outer transport over the atom weights with inner W_p^p cost.
pub fn hierarchical_wasserstein(
    phi: &MeasureOfMeasures,
    psi: &MeasureOfMeasures,
    p: f64,
    inner_backend: &Backend,
    outer_backend: &Backend,
) -> Result<HierarchicalResult> {
    let inner = inner_cost_matrix(phi, psi, p, inner_backend)?;
    let outer_entries = inner.mapv(|w| w.powf(p));
    let outer_cost = CostMatrix::from_entries(outer_entries, p, GroundMetric::Euclidean)?;
    let (outer_plan, outer_resolved) =
        outer_backend.solve(phi.weights(), psi.weights(), &outer_cost)?;
    let distance = outer_plan.objective.max(0.0).powf(1.0 / p);
    Ok(HierarchicalResult {
        distance,
        outer_plan,
        inner_cost: inner,
        order: p,
        outer_backend: outer_resolved,
    })
}

/// The mixture measure `sum_i alpha_i * atom_i` as a flat [`DiscreteMeasure`]:
/// concatenated supports, weights `alpha_i *` (atom weights), duplicates merged.
pub fn flatten(phi: &MeasureOfMeasures) -> DiscreteMeasure {
    let total: usize = phi.atoms().iter().map(|a| a.len()).sum();
    let d = phi.dim();
    let mut support = Array2::zeros((total, d));
    let mut weights = Array1::zeros(total);
    let mut row = 0;
    for (atom, &alpha) in phi.atoms().iter().zip(phi.weights().iter()) {
        for i in 0..atom.len() {
            support.row_mut(row).assign(&atom.point(i));
            weights[row] = alpha * atom.weights()[i];
            row += 1;
        }
    }
    DiscreteMeasure::new(support, weights)
        .expect("mixture of valid measures is a valid measure")
        .merged()
}
