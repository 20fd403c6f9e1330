//! The structure-matching adaptation pipeline.
//!
//! Source classes and target clusters are matched through an
//! entropy-regularized outer transport problem on their pairwise
//! 2-Wasserstein cost matrix, hardened into a class-to-cluster assignment by
//! row argmax. Each class is then pushed onto its matched cluster with the
//! barycentric mapping of a fresh entropic plan, and a downstream classifier
//! can be trained on the transported labeled points.

use ndarray::{Array2, ArrayView1};

use crate::backend::Backend;
use crate::cost::{CostMatrix, GroundMetric};
use crate::dataset::{LabeledDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::hierarchical::{inner_cost_matrix, MeasureOfMeasures};
use crate::measure::DiscreteMeasure;
use crate::plan::TransportPlan;
use crate::solve::{solve_sinkhorn, SinkhornOptions};
use crate::structures::{
    classes_from_labels, clusters_kmeans_with, KMeansConfig, KMeansInit, StructureDecomposition,
};

/// Relative slack under which two outer-plan entries count as tied.
const TIE_REL_TOL: f64 = 1e-4;

/// Hard class-to-cluster assignment derived from a regularized outer plan.
#[derive(Debug, Clone)]
pub struct Matching {
    /// The k x k entropic outer plan.
    pub outer_plan: TransportPlan,
    /// Row argmax per class; ties break to the lowest cluster index.
    pub sigma: Vec<usize>,
    /// Rows whose argmax was not unique (within [`TIE_REL_TOL`] relative).
    pub tie_report: Vec<usize>,
    /// The inner Wasserstein cost matrix the plan was solved on.
    pub inner_cost: Array2<f64>,
    /// Regularization actually used.
    pub epsilon: f64,
}

impl Matching {
    /// Classes whose assigned cluster collides with another class's.
    ///
    /// The hard argmax need not be a bijection; collisions are legal but
    /// worth surfacing to the caller.
    pub fn collisions(&self) -> Vec<usize> {
        let k = self.sigma.len();
        let mut hit = vec![0usize; k];
        for &l in &self.sigma {
            hit[l] += 1;
        }
        (0..k).filter(|&h| hit[self.sigma[h]] > 1).collect()
    }
}

/// Match source structures to target structures (both with k atoms and
/// uniform outer weights) through entropic transport on the pairwise
/// W_p cost matrix. `epsilon = None` uses 0.01 x median of that matrix.
pub fn match_structures(
    phi_source: &MeasureOfMeasures,
    phi_target: &MeasureOfMeasures,
    epsilon: Option<f64>,
    p: f64,
) -> Result<Matching> {
    let k = phi_source.len();
    if phi_target.len() != k {
        return Err(Error::LengthMismatch {
            left: k,
            right: phi_target.len(),
        });
    }
    for side in [phi_source, phi_target] {
        for &w in side.weights().iter() {
            if (w - 1.0 / k as f64).abs() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "structure matching expects uniform outer weights".into(),
                ));
            }
        }
    }

    let inner = inner_cost_matrix(phi_source, phi_target, p, &Backend::Auto)?;
    let cost = CostMatrix::from_entries(inner.clone(), p, GroundMetric::Euclidean)?;
    let epsilon = epsilon.unwrap_or_else(|| auto_epsilon(&cost));
    let outer_plan = solve_sinkhorn(
        phi_source.weights(),
        phi_target.weights(),
        &cost,
        SinkhornOptions {
            epsilon,
            ..Default::default()
        },
    )?;

    let mut sigma = Vec::with_capacity(k);
    let mut tie_report = Vec::new();
    for h in 0..k {
        let row = outer_plan.coupling.row(h);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..k)
            .filter(|&j| row[j] >= max - TIE_REL_TOL * max.abs())
            .collect();
        if tied.len() > 1 {
            tie_report.push(h);
        }
        sigma.push(tied[0]);
    }
    Ok(Matching {
        outer_plan,
        sigma,
        tie_report,
        inner_cost: inner,
        epsilon,
    })
}

fn auto_epsilon(cost: &CostMatrix) -> f64 {
    let median = cost.median_entry();
    let scale = if median > 0.0 { median } else { cost.max_entry() };
    (0.01 * scale).max(1e-12)
}

/// Map each source point of `class` onto the coupling-weighted average of
/// `cluster`'s points, using a fresh entropic plan with squared-Euclidean
/// ground cost. `epsilon = None` uses 0.01 x median of that cost.
pub fn barycentric_transport(
    class: &DiscreteMeasure,
    cluster: &DiscreteMeasure,
    epsilon_prime: Option<f64>,
) -> Result<Array2<f64>> {
    let cost = CostMatrix::between(class, cluster, 1.0, GroundMetric::SquaredEuclidean)?;
    let epsilon = epsilon_prime.unwrap_or_else(|| auto_epsilon(&cost));
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "barycentric regularization must be positive, got {epsilon}"
        )));
    }
    let plan = solve_sinkhorn(
        class.weights(),
        cluster.weights(),
        &cost,
        SinkhornOptions {
            epsilon,
            ..Default::default()
        },
    )?;
    barycentric_points(&plan.coupling, cluster)
}

fn barycentric_points(coupling: &Array2<f64>, cluster: &DiscreteMeasure) -> Result<Array2<f64>> {
    let n = coupling.nrows();
    let d = cluster.dim();
    let mut out = Array2::zeros((n, d));
    for i in 0..n {
        let mass: f64 = coupling.row(i).sum();
        // Entropic plans have strictly positive rows for positive-mass atoms.
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Numerical(format!(
                "barycentric mapping hit zero row mass at source point {i}"
            )));
        }
        for j in 0..cluster.len() {
            let w = coupling[[i, j]] / mass;
            if w == 0.0 {
                continue;
            }
            let y = cluster.point(j);
            for c in 0..d {
                out[[i, c]] += w * y[c];
            }
        }
    }
    Ok(out)
}

/// Source points after per-class barycentric transport, labels intact.
#[derive(Debug, Clone)]
pub struct TransportedDataset {
    pub points: Array2<f64>,
    pub labels: Vec<crate::dataset::Label>,
    /// Per-point (class index, matched cluster index).
    pub provenance: Vec<(usize, usize)>,
}

impl TransportedDataset {
    pub fn as_labeled(&self) -> LabeledDataset {
        LabeledDataset::new(self.points.clone(), self.labels.clone())
            .expect("transported dataset keeps source cardinality")
    }
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    /// Outer matching regularization; None = 0.01 x median of the W cost.
    pub epsilon: Option<f64>,
    /// Barycentric regularization; None = 0.01 x median of the ground cost.
    pub epsilon_prime: Option<f64>,
    /// Order of the inner distances used for matching.
    pub matching_order: f64,
    pub seed: u64,
    pub restarts: usize,
    pub kmeans_max_iter: usize,
    /// Explicit initial cluster centers (k x d) instead of k-means++.
    pub cluster_init: Option<Array2<f64>>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            epsilon_prime: None,
            matching_order: 2.0,
            seed: 0,
            restarts: 10,
            kmeans_max_iter: 300,
            cluster_init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub transported: TransportedDataset,
    pub matching: Matching,
    pub source_structures: StructureDecomposition,
    pub target_structures: StructureDecomposition,
}

/// End-to-end adaptation: class structures from the source labels, cluster
/// structures from the target, entropic matching, then per-pair barycentric
/// transport. Deterministic under a fixed config.
pub fn adapt(
    source: &LabeledDataset,
    target: &UnlabeledDataset,
    config: &AdaptConfig,
) -> Result<AdaptResult> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    let source_structures = classes_from_labels(source)?;
    let k = source_structures.k();

    let kmeans_cfg = KMeansConfig {
        k,
        seed: config.seed,
        restarts: config.restarts,
        max_iter: config.kmeans_max_iter,
        init: match &config.cluster_init {
            Some(centers) => KMeansInit::Centers(centers.clone()),
            None => KMeansInit::PlusPlus,
        },
    };
    let target_structures = clusters_kmeans_with(target, &kmeans_cfg)?;

    let matching = match_structures(
        &source_structures.structures,
        &target_structures.structures,
        config.epsilon,
        config.matching_order,
    )?;

    // Transport each class onto its matched cluster, writing results back
    // into the original row order.
    let n = source.len();
    let d = source.dim();
    let mut points = Array2::zeros((n, d));
    let mut provenance = vec![(0usize, 0usize); n];
    for h in 0..k {
        let class_atom = source_structures.structures.atom(h);
        let cluster_atom = target_structures.structures.atom(matching.sigma[h]);
        let moved = barycentric_transport(class_atom, cluster_atom, config.epsilon_prime)?;
        let member_rows: Vec<usize> = source_structures
            .membership
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == h)
            .map(|(i, _)| i)
            .collect();
        debug_assert_eq!(member_rows.len(), moved.nrows());
        for (local, &row) in member_rows.iter().enumerate() {
            points.row_mut(row).assign(&moved.row(local));
            provenance[row] = (h, matching.sigma[h]);
        }
    }

    Ok(AdaptResult {
        transported: TransportedDataset {
            points,
            labels: source.labels().to_vec(),
            provenance,
        },
        matching,
        source_structures,
        target_structures,
    })
}

/// Convenience view of a point set as a bounding box, used to check that
/// transported points stay inside their matched cluster.
pub fn bounding_box(points: ndarray::ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let d = points.ncols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..points.nrows() {
        for c in 0..d {
            lo[c] = lo[c].min(points[[i, c]]);
            hi[c] = hi[c].max(points[[i, c]]);
        }
    }
    (lo, hi)
}

pub fn inside_box(point: ArrayView1<'_, f64>, lo: &[f64], hi: &[f64], slack: f64) -> bool {
    point
        .iter()
        .enumerate()
        .all(|(c, &x)| x >= lo[c] - slack && x <= hi[c] + slack)
}
