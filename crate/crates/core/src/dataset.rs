//! Labeled and unlabeled sample sets.

use std::cmp::Ordering;
use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class identifier. Integer labels order numerically, string labels
/// lexicographically, and all integers sort before all strings, so class
/// order is stable regardless of row order in the data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Str(String),
}

impl Label {
    /// Parse an integer if possible, otherwise keep the raw string.
    pub fn parse(raw: &str) -> Label {
        match raw.trim().parse::<i64>() {
            Ok(v) => Label::Int(v),
            Err(_) => Label::Str(raw.trim().to_string()),
        }
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Label::Int(a), Label::Int(b)) => a.cmp(b),
            (Label::Str(a), Label::Str(b)) => a.cmp(b),
            (Label::Int(_), Label::Str(_)) => Ordering::Less,
            (Label::Str(_), Label::Int(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Str(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

/// n samples in R^d with one class label each.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    points: Array2<f64>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(points: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: points.nrows(),
                right: labels.len(),
            });
        }
        if points.nrows() == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Distinct labels in their canonical (sorted) order.
    pub fn classes(&self) -> Vec<Label> {
        let mut classes: Vec<Label> = self.labels.clone();
        classes.sort();
        classes.dedup();
        classes
    }

    pub fn without_labels(&self) -> UnlabeledDataset {
        UnlabeledDataset::new(self.points.clone()).expect("labeled dataset is non-empty")
    }
}

/// m samples in R^d with no labels.
#[derive(Debug, Clone)]
pub struct UnlabeledDataset {
    points: Array2<f64>,
}

impl UnlabeledDataset {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn label_order_is_row_order_independent() {
        let mut a = vec![
            Label::parse("b"),
            Label::parse("10"),
            Label::parse("2"),
            Label::parse("a"),
        ];
        a.sort();
        assert_eq!(
            a,
            vec![
                Label::Int(2),
                Label::Int(10),
                Label::Str("a".into()),
                Label::Str("b".into())
            ]
        );
    }

    #[test]
    fn classes_are_sorted_and_deduped() {
        let ds = LabeledDataset::new(
            array![[0.0], [1.0], [2.0], [3.0]],
            vec![2.into(), 1.into(), 2.into(), 1.into()],
        )
        .unwrap();
        assert_eq!(ds.classes(), vec![Label::Int(1), Label::Int(2)]);
    }
}
