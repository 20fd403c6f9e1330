//! Discrete probability measures as weighted point clouds in R^d.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Tolerance for "weights sum to one" checks.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Two support points closer than this (Euclidean) are treated as the same atom.
pub const MERGE_TOL: f64 = 1e-12;

/// A discrete probability measure: weighted points in R^d.
///
/// Invariants (enforced at construction): weights are non-negative and sum
/// to 1 within [`SIMPLEX_TOL`], support and weights have equal length >= 1,
/// and every point lives in the same dimension d >= 1.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    support: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        if support.nrows() == 0 {
            return Err(Error::EmptySupport);
        }
        if support.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "support points must have dimension >= 1".into(),
            ));
        }
        if support.nrows() != weights.len() {
            return Err(Error::LengthMismatch {
                left: support.nrows(),
                right: weights.len(),
            });
        }
        validate_simplex(weights.view())?;
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("support contains non-finite coordinates".into()));
        }
        Ok(Self { support, weights })
    }

    /// Uniform measure over the given points.
    pub fn uniform(support: Array2<f64>) -> Result<Self> {
        let n = support.nrows();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        let w = Array1::from_elem(n, 1.0 / n as f64);
        Self::new(support, w)
    }

    /// A single Dirac mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        let support = Array2::from_shape_vec((1, point.len()), point.to_vec())
            .expect("1 x d shape always matches");
        Self::new(support, Array1::from_elem(1, 1.0))
    }

    pub fn len(&self) -> usize {
        self.support.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 1 point
    }

    pub fn dim(&self) -> usize {
        self.support.ncols()
    }

    pub fn support(&self) -> ArrayView2<'_, f64> {
        self.support.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.support.row(i)
    }

    /// Merge support points within [`MERGE_TOL`] of each other, summing weights.
    ///
    /// The first occurrence keeps its coordinates; order of first occurrences
    /// is preserved, so the result is deterministic.
    pub fn merged(&self) -> Self {
        let n = self.len();
        let mut keep: Vec<usize> = Vec::with_capacity(n);
        let mut weight_of: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.support.row(i);
            let mut found = None;
            for (slot, &j) in keep.iter().enumerate() {
                if sq_dist(p, self.support.row(j)) <= MERGE_TOL * MERGE_TOL {
                    found = Some(slot);
                    break;
                }
            }
            match found {
                Some(slot) => weight_of[slot] += self.weights[i],
                None => {
                    keep.push(i);
                    weight_of.push(self.weights[i]);
                }
            }
        }
        let mut support = Array2::zeros((keep.len(), self.dim()));
        for (row, &j) in keep.iter().enumerate() {
            support.row_mut(row).assign(&self.support.row(j));
        }
        Self {
            support,
            weights: Array1::from_vec(weight_of),
        }
    }

    /// Whether two measures coincide as weighted point sets after atom merging.
    ///
    /// Points are matched within [`MERGE_TOL`], weights within `weight_tol`.
    pub fn coincides_with(&self, other: &Self, weight_tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let a = self.merged();
        let b = other.merged();
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        'outer: for i in 0..a.len() {
            for j in 0..b.len() {
                if !used[j]
                    && sq_dist(a.support.row(i), b.support.row(j)) <= MERGE_TOL * MERGE_TOL
                    && (a.weights[i] - b.weights[j]).abs() <= weight_tol
                {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

pub(crate) fn sq_dist(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

/// Check that `w` is a probability vector: entries >= 0 summing to 1 within [`SIMPLEX_TOL`].
pub fn validate_simplex(w: ArrayView1<'_, f64>) -> Result<()> {
    if w.is_empty() {
        return Err(Error::EmptySupport);
    }
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = w.sum();
    if !(min >= 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL || !sum.is_finite() {
        return Err(Error::NotOnSimplex { sum, min });
    }
    Ok(())
}
