//! Decomposing datasets into class or cluster structures.
//!
//! Both decompositions produce a [`MeasureOfMeasures`]: each atom is the
//! uniform empirical measure over one class (or cluster), and the outer
//! weights are uniform 1/k by default. A proportional-weights mode is
//! available for callers that want outer weights matching group sizes.

pub mod kmeans;

use ndarray::{Array1, Array2};

pub use kmeans::{kmeans, KMeansConfig, KMeansFit, KMeansInit};

use crate::dataset::{Label, LabeledDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::hierarchical::MeasureOfMeasures;
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    ClassBased,
    ClusterBased,
}

/// Outer weights over structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterWeights {
    /// 1/k per structure regardless of its size (the default construction).
    #[default]
    Uniform,
    /// |C_h| / n per structure.
    Proportional,
}

#[derive(Debug, Clone)]
pub struct StructureDecomposition {
    pub structures: MeasureOfMeasures,
    /// Atom index for every dataset row.
    pub membership: Vec<usize>,
    pub kind: StructureKind,
    /// Class label per atom, in atom order (class-based only).
    pub class_labels: Option<Vec<Label>>,
    /// Final clustering inertia (cluster-based only), surfaced as the
    /// clustering-quality metric.
    pub inertia: Option<f64>,
}

impl StructureDecomposition {
    pub fn k(&self) -> usize {
        self.structures.len()
    }
}

/// Group a labeled dataset into one uniform measure per class.
///
/// Atoms appear in sorted label order, so the decomposition does not depend
/// on row order. Outer weights are uniform 1/k.
pub fn classes_from_labels(dataset: &LabeledDataset) -> Result<StructureDecomposition> {
    classes_from_labels_with(dataset, OuterWeights::Uniform)
}

pub fn classes_from_labels_with(
    dataset: &LabeledDataset,
    outer: OuterWeights,
) -> Result<StructureDecomposition> {
    let classes = dataset.classes();
    decompose_by_classes(dataset, &classes, outer)
}

/// Like [`classes_from_labels`] but against a caller-declared class list;
/// a declared class with no points is a rejected input.
pub fn classes_from_declared(
    dataset: &LabeledDataset,
    declared: &[Label],
    outer: OuterWeights,
) -> Result<StructureDecomposition> {
    decompose_by_classes(dataset, declared, outer)
}

fn decompose_by_classes(
    dataset: &LabeledDataset,
    classes: &[Label],
    outer: OuterWeights,
) -> Result<StructureDecomposition> {
    if classes.is_empty() {
        return Err(Error::InvalidParameter("no classes declared".into()));
    }
    let k = classes.len();
    let n = dataset.len();
    let d = dataset.dim();

    let mut membership = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, label) in dataset.labels().iter().enumerate() {
        match classes.iter().position(|c| c == label) {
            Some(h) => {
                membership[i] = h;
                members[h].push(i);
            }
            None => {
                return Err(Error::InvalidParameter(format!(
                    "label {label} does not appear in the declared class list"
                )))
            }
        }
    }
    for (h, m) in members.iter().enumerate() {
        if m.is_empty() {
            return Err(Error::EmptyClass(classes[h].to_string()));
        }
    }

    let mut atoms = Vec::with_capacity(k);
    for m in &members {
        let mut support = Array2::zeros((m.len(), d));
        for (row, &i) in m.iter().enumerate() {
            support.row_mut(row).assign(&dataset.points().row(i));
        }
        atoms.push(DiscreteMeasure::uniform(support)?);
    }
    let weights = outer_weights(outer, &members, n);
    Ok(StructureDecomposition {
        structures: MeasureOfMeasures::new(atoms, weights)?,
        membership,
        kind: StructureKind::ClassBased,
        class_labels: Some(classes.to_vec()),
        inertia: None,
    })
}

fn outer_weights(outer: OuterWeights, members: &[Vec<usize>], n: usize) -> Array1<f64> {
    let k = members.len();
    match outer {
        OuterWeights::Uniform => Array1::from_elem(k, 1.0 / k as f64),
        OuterWeights::Proportional => {
            Array1::from_iter(members.iter().map(|m| m.len() as f64 / n as f64))
        }
    }
}

/// Cluster an unlabeled dataset into k uniform structures via k-means.
pub fn clusters_kmeans(
    dataset: &UnlabeledDataset,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<StructureDecomposition> {
    let cfg = KMeansConfig {
        restarts,
        ..KMeansConfig::new(k, seed)
    };
    clusters_kmeans_with(dataset, &cfg)
}

pub fn clusters_kmeans_with(
    dataset: &UnlabeledDataset,
    cfg: &KMeansConfig,
) -> Result<StructureDecomposition> {
    clusters_kmeans_weighted(dataset, cfg, OuterWeights::Uniform)
}

pub fn clusters_kmeans_weighted(
    dataset: &UnlabeledDataset,
    cfg: &KMeansConfig,
    outer: OuterWeights,
) -> Result<StructureDecomposition> {
    let fit = kmeans(dataset.points(), cfg)?;
    let k = cfg.k;
    let d = dataset.dim();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in fit.membership.iter().enumerate() {
        members[c].push(i);
    }
    let mut atoms = Vec::with_capacity(k);
    for m in &members {
        debug_assert!(!m.is_empty(), "kmeans returned an empty cluster");
        let mut support = Array2::zeros((m.len(), d));
        for (row, &i) in m.iter().enumerate() {
            support.row_mut(row).assign(&dataset.points().row(i));
        }
        atoms.push(DiscreteMeasure::uniform(support)?);
    }
    let weights = outer_weights(outer, &members, dataset.len());
    Ok(StructureDecomposition {
        structures: MeasureOfMeasures::new(atoms, weights)?,
        membership: fit.membership,
        kind: StructureKind::ClusterBased,
        class_labels: None,
        inertia: Some(fit.inertia),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchical::flatten;
    use ndarray::array;

    fn ab_dataset() -> LabeledDataset {
        LabeledDataset::new(
            array![[0.0], [1.0], [10.0], [11.0]],
            vec![
                Label::Str("A".into()),
                Label::Str("A".into()),
                Label::Str("B".into()),
                Label::Str("B".into()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_classes_of_two_points() {
        let dec = classes_from_labels(&ab_dataset()).unwrap();
        assert_eq!(dec.k(), 2);
        assert_eq!(dec.membership, vec![0, 0, 1, 1]);
        assert_eq!(dec.structures.weights()[0], 0.5);
        assert_eq!(dec.structures.atom(0).len(), 2);
        assert_eq!(dec.structures.atom(0).weights()[0], 0.5);
    }

    #[test]
    fn single_label_gives_one_atom_over_everything() {
        let ds = LabeledDataset::new(
            array![[0.0], [1.0], [2.0]],
            vec![7.into(), 7.into(), 7.into()],
        )
        .unwrap();
        let dec = classes_from_labels(&ds).unwrap();
        assert_eq!(dec.k(), 1);
        assert_eq!(dec.structures.atom(0).len(), 3);
    }

    #[test]
    fn row_permutation_gives_same_decomposition() {
        let ds = ab_dataset();
        let permuted = LabeledDataset::new(
            array![[11.0], [0.0], [10.0], [1.0]],
            vec![
                Label::Str("B".into()),
                Label::Str("A".into()),
                Label::Str("B".into()),
                Label::Str("A".into()),
            ],
        )
        .unwrap();
        let a = classes_from_labels(&ds).unwrap();
        let b = classes_from_labels(&permuted).unwrap();
        assert_eq!(a.k(), b.k());
        for h in 0..a.k() {
            assert!(a
                .structures
                .atom(h)
                .coincides_with(b.structures.atom(h), 1e-12));
        }
    }

    #[test]
    fn declared_empty_class_is_rejected() {
        let err = classes_from_declared(
            &ab_dataset(),
            &[
                Label::Str("A".into()),
                Label::Str("B".into()),
                Label::Str("C".into()),
            ],
            OuterWeights::Uniform,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyClass(_)));
    }

    #[test]
    fn balanced_flatten_recovers_uniform_empirical_measure() {
        let dec = classes_from_labels(&ab_dataset()).unwrap();
        let flat = flatten(&dec.structures);
        let uniform =
            DiscreteMeasure::uniform(ab_dataset().points().to_owned()).unwrap();
        assert!(flat.coincides_with(&uniform, 1e-12));
    }

    #[test]
    fn unbalanced_flatten_carries_imbalance_reweighting() {
        // 3 points of A, 1 of B: uniform outer weights give each A point
        // (1/2) * (1/3) = 1/6 and the B point 1/2, not 1/4 each.
        let ds = LabeledDataset::new(
            array![[0.0], [1.0], [2.0], [10.0]],
            vec![0.into(), 0.into(), 0.into(), 1.into()],
        )
        .unwrap();
        let dec = classes_from_labels(&ds).unwrap();
        let flat = flatten(&dec.structures);
        for i in 0..flat.len() {
            let expected = if flat.point(i)[0] < 5.0 { 1.0 / 6.0 } else { 0.5 };
            assert!((flat.weights()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_decomposition_is_deterministic() {
        let ds = UnlabeledDataset::new(array![
            [0.0, 0.0],
            [0.4, 0.1],
            [15.0, 0.0],
            [15.2, 0.3],
            [15.1, -0.4]
        ])
        .unwrap();
        let a = clusters_kmeans(&ds, 2, 9, 10).unwrap();
        let b = clusters_kmeans(&ds, 2, 9, 10).unwrap();
        assert_eq!(a.membership, b.membership);
        assert_eq!(a.inertia, b.inertia);
        assert!(a.inertia.unwrap() >= 0.0);
    }
}
