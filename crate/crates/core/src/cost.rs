//! Ground-cost matrices between discrete measures.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{sq_dist, DiscreteMeasure};

/// How a cost entry is derived from the Euclidean distance d(x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundMetric {
    /// Entry = d(x, y)^p.
    Euclidean,
    /// Entry = (d(x, y)^2)^p.
    SquaredEuclidean,
}

/// A dense n x m matrix of non-negative transport costs.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    entries: Array2<f64>,
    metric_order: f64,
    ground_metric: GroundMetric,
}

impl CostMatrix {
    /// Pairwise costs between the supports of `mu` and `nu` with entries
    /// `||x_i - y_j||^p` (or its square for [`GroundMetric::SquaredEuclidean`]).
    pub fn between(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        p: f64,
        ground_metric: GroundMetric,
    ) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                got: nu.dim(),
            });
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "metric order must satisfy p >= 1, got {p}"
            )));
        }
        let n = mu.len();
        let m = nu.len();
        let mut entries = Array2::zeros((n, m));
        for i in 0..n {
            let xi = mu.point(i);
            for j in 0..m {
                let d2 = sq_dist(xi, nu.point(j));
                entries[[i, j]] = match ground_metric {
                    GroundMetric::Euclidean => d2.sqrt().powf(p),
                    GroundMetric::SquaredEuclidean => d2.powf(p),
                };
            }
        }
        Ok(Self {
            entries,
            metric_order: p,
            ground_metric,
        })
    }

    /// Wrap precomputed entries. Rejects negative or non-finite costs.
    pub fn from_entries(entries: Array2<f64>, p: f64, ground_metric: GroundMetric) -> Result<Self> {
        if entries.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "cost entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            entries,
            metric_order: p,
            ground_metric,
        })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn metric_order(&self) -> f64 {
        self.metric_order
    }

    pub fn ground_metric(&self) -> GroundMetric {
        self.ground_metric
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }

    /// Median of the entries; used by "auto" regularization rules.
    pub fn median_entry(&self) -> f64 {
        let mut v: Vec<f64> = self.entries.iter().cloned().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n == 0 {
            return 0.0;
        }
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Convenience wrapper for the common `||x - y||^p` cost.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<CostMatrix> {
    CostMatrix::between(mu, nu, p, GroundMetric::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn line_distances_order_one() {
        let mu = DiscreteMeasure::uniform(array![[0.0], [1.0]]).unwrap();
        let c = cost_matrix(&mu, &mu, 1.0).unwrap();
        assert_eq!(c.entries(), &array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn three_four_five_squared() {
        let mu = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[3.0, 4.0]).unwrap();
        let c = cost_matrix(&mu, &nu, 2.0).unwrap();
        assert!((c.entries()[[0, 0]] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn matches_scalar_loop_reference() {
        // Independent 4x3 oracle: plain double loop over coordinates,
        // written before the main implementation path.
        let xs = [
            [0.3, -1.2, 0.9],
            [2.0, 0.0, -0.5],
            [-0.7, 0.4, 1.1],
            [0.0, 0.0, 0.0],
        ];
        let ys = [[1.0, 1.0, 1.0], [-0.2, 0.5, 0.0], [0.8, -0.8, 2.0]];
        let p = 1.7;
        let mut expected = [[0.0; 3]; 4];
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let mut s: f64 = 0.0;
                for k in 0..3 {
                    s += (x[k] - y[k]) * (x[k] - y[k]);
                }
                expected[i][j] = s.sqrt().powf(p);
            }
        }
        let mu = DiscreteMeasure::uniform(Array2::from_shape_vec((4, 3), xs.concat()).unwrap())
            .unwrap();
        let nu = DiscreteMeasure::uniform(Array2::from_shape_vec((3, 3), ys.concat()).unwrap())
            .unwrap();
        let c = cost_matrix(&mu, &nu, p).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                assert!((c.entries()[[i, j]] - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_cost_is_symmetric_with_zero_diagonal() {
        let mu = DiscreteMeasure::uniform(array![[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]).unwrap();
        let c = cost_matrix(&mu, &mu, 2.0).unwrap();
        for i in 0..3 {
            assert_eq!(c.entries()[[i, i]], 0.0);
            for j in 0..3 {
                assert!((c.entries()[[i, j]] - c.entries()[[j, i]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mu = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[1.0]).unwrap();
        assert!(cost_matrix(&mu, &nu, 1.0).is_err());
    }
}
