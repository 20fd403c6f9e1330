//! Hypotheses, loss functions, and empirical risk measurement.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::measure::sq_dist;

/// A hypothesis mapping points to class labels.
pub trait Classifier {
    fn predict(&self, point: ArrayView1<'_, f64>) -> Label;

    /// Human-readable identifier, used when reports list hypothesis pools.
    fn name(&self) -> &str;

    fn predict_all(&self, points: ArrayView2<'_, f64>) -> Vec<Label> {
        (0..points.nrows()).map(|i| self.predict(points.row(i))).collect()
    }
}

/// 1-nearest-neighbor classifier. Deterministic and hyperparameter-free;
/// distance ties resolve to the lowest training index.
#[derive(Debug, Clone)]
pub struct NearestNeighbor {
    name: String,
    points: Array2<f64>,
    labels: Vec<Label>,
}

impl NearestNeighbor {
    pub fn fit(dataset: &LabeledDataset, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: dataset.points().to_owned(),
            labels: dataset.labels().to_vec(),
        }
    }

    pub fn from_parts(points: Array2<f64>, labels: Vec<Label>, name: impl Into<String>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: points.nrows(),
                right: labels.len(),
            });
        }
        if points.nrows() == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(Self {
            name: name.into(),
            points,
            labels,
        })
    }
}

impl Classifier for NearestNeighbor {
    fn predict(&self, point: ArrayView1<'_, f64>) -> Label {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..self.points.nrows() {
            let d = sq_dist(point, self.points.row(i));
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.labels[best].clone()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Bounded loss on label pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    /// 1 when the labels differ, else 0.
    ZeroOne,
    /// |h - f|^q on integer labels, clamped to [0, 1] (losses are bounded).
    Power { q: f64 },
}

impl Loss {
    fn eval(&self, predicted: &Label, truth: &Label) -> Result<f64> {
        match self {
            Loss::ZeroOne => Ok(if predicted == truth { 0.0 } else { 1.0 }),
            Loss::Power { q } => match (predicted, truth) {
                (Label::Int(a), Label::Int(b)) => {
                    Ok(((*a - *b).abs() as f64).powf(*q).min(1.0))
                }
                _ => Err(Error::InvalidParameter(
                    "power loss needs integer labels".into(),
                )),
            },
        }
    }
}

/// Mean loss over an evaluation set; always in [0, 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub loss: Loss,
    pub n_eval: usize,
}

/// Mean loss of `predictions` against `truth`.
pub fn empirical_risk(predictions: &[Label], truth: &[Label], loss: Loss) -> Result<RiskEstimate> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(truth.iter()) {
        total += loss.eval(p, t)?;
    }
    Ok(RiskEstimate {
        value: total / predictions.len() as f64,
        loss,
        n_eval: predictions.len(),
    })
}

/// Empirical risk of a classifier on a labeled dataset.
pub fn dataset_risk(h: &dyn Classifier, dataset: &LabeledDataset, loss: Loss) -> Result<RiskEstimate> {
    let predictions = h.predict_all(dataset.points());
    empirical_risk(&predictions, dataset.labels(), loss)
}

/// Disagreement risk between two hypotheses over a point set.
pub fn pair_risk(
    h: &dyn Classifier,
    h_prime: &dyn Classifier,
    points: ArrayView2<'_, f64>,
    loss: Loss,
) -> Result<RiskEstimate> {
    if points.nrows() == 0 {
        return Err(Error::EmptySupport);
    }
    let a = h.predict_all(points);
    let b = h_prime.predict_all(points);
    empirical_risk(&a, &b, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn labels(v: &[i64]) -> Vec<Label> {
        v.iter().map(|&x| Label::Int(x)).collect()
    }

    #[test]
    fn zero_one_risk_extremes_and_half() {
        let truth = labels(&[0, 1, 0, 1]);
        assert_eq!(
            empirical_risk(&truth, &truth, Loss::ZeroOne).unwrap().value,
            0.0
        );
        let wrong = labels(&[1, 0, 1, 0]);
        assert_eq!(
            empirical_risk(&wrong, &truth, Loss::ZeroOne).unwrap().value,
            1.0
        );
        let half = labels(&[0, 1, 1, 0]);
        assert_eq!(
            empirical_risk(&half, &truth, Loss::ZeroOne).unwrap().value,
            0.5
        );
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = empirical_risk(&labels(&[0]), &labels(&[0, 1]), Loss::ZeroOne).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn power_loss_is_clamped_and_needs_integers() {
        let r = empirical_risk(&labels(&[0, 0]), &labels(&[1, 5]), Loss::Power { q: 2.0 })
            .unwrap();
        assert_eq!(r.value, 1.0); // both pairs clamp to 1
        let err = empirical_risk(
            &[Label::Str("a".into())],
            &[Label::Str("b".into())],
            Loss::Power { q: 1.0 },
        )
        .unwrap_err();
        assert!(err.is_rejected_input());
    }

    #[test]
    fn nearest_neighbor_memorizes_training_points() {
        let ds = LabeledDataset::new(
            array![[0.0, 0.0], [5.0, 5.0], [0.0, 5.0]],
            labels(&[0, 1, 2]),
        )
        .unwrap();
        let nn = NearestNeighbor::fit(&ds, "1nn");
        let risk = dataset_risk(&nn, &ds, Loss::ZeroOne).unwrap();
        assert_eq!(risk.value, 0.0);
        assert_eq!(nn.predict(array![4.9, 4.8].view()), Label::Int(1));
    }

    #[test]
    fn pair_risk_measures_disagreement() {
        let a = NearestNeighbor::from_parts(array![[0.0]], labels(&[0]), "const0").unwrap();
        let b = NearestNeighbor::from_parts(array![[0.0]], labels(&[1]), "const1").unwrap();
        let pts = array![[0.0], [1.0], [2.0]];
        let r = pair_risk(&a, &b, pts.view(), Loss::ZeroOne).unwrap();
        assert_eq!(r.value, 1.0);
    }
}
