//! Numerical evaluators for the HW_1 target-risk bounds.
//!
//! Every evaluator produces a [`BoundReport`]: a named map of additive terms
//! whose sum is `rhs_total`, plus a `details` map of raw quantities (inner
//! distances, weights) that back those terms without being addends. The
//! ideal-joint-error lambda is inherently not estimable, so it is always
//! reported as a minimum over a finite, named hypothesis pool and only when
//! diagnostic target labels are supplied.
//!
//! The Talagrand-derived constant zeta' that scales the concentration term
//! has no defensible default; callers must choose it explicitly.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::dataset::{Label, LabeledDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::hierarchical::{hierarchical_wasserstein, HierarchicalResult, MeasureOfMeasures};
use crate::risk::{dataset_risk, Classifier, Loss};
use crate::structures::{
    classes_from_labels, clusters_kmeans_with, KMeansConfig, KMeansInit, StructureDecomposition,
};

/// Parameters of the empirical-measure concentration term.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConcentrationParams {
    /// Confidence level in (0, 1).
    pub delta: f64,
    /// Transport-inequality constant zeta' > 0 (user-supplied; see module docs).
    pub zeta_prime: f64,
    /// Number of structures per domain.
    pub k: usize,
}

impl ConcentrationParams {
    pub fn new(delta: f64, zeta_prime: f64, k: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(zeta_prime > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "zeta_prime must be positive, got {zeta_prime}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Self {
            delta,
            zeta_prime,
            k,
        })
    }

    /// `2 * sqrt(2 * ln(1/delta) / (zeta' * k))`
    pub fn term(&self) -> f64 {
        2.0 * (2.0 * (1.0 / self.delta).ln() / (self.zeta_prime * self.k as f64)).sqrt()
    }
}

/// Free-function form of [`ConcentrationParams::term`].
pub fn concentration_term(params: &ConcentrationParams) -> f64 {
    params.term()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "unsupervised")]
    Unsupervised,
    #[serde(rename = "corollary")]
    Corollary,
    #[serde(rename = "semi-supervised")]
    SemiSupervised,
    #[serde(rename = "multi-pairwise")]
    MultiPairwise,
    #[serde(rename = "multi-combined")]
    MultiCombined,
}

/// One evaluated bound, broken into named additive terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Additive terms; `rhs_total` is exactly their sum.
    pub terms: BTreeMap<String, f64>,
    pub rhs_total: f64,
    /// Empirical target risk of the diagnosed hypothesis, when target labels
    /// were revealed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs_target_risk: Option<f64>,
    /// Whether lhs <= rhs held; diagnostic only, never asserted by tests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied: Option<bool>,
    /// Raw backing values (per-source distances, weights); not addends.
    pub details: BTreeMap<String, f64>,
    /// Names of the hypothesis pool behind lambda estimates.
    pub pool: Vec<String>,
}

impl BoundReport {
    fn assemble(
        kind: BoundKind,
        terms: Vec<(&str, f64)>,
        details: Vec<(&str, f64)>,
        pool: &[Box<dyn Classifier>],
        lhs_target_risk: Option<f64>,
    ) -> Self {
        let terms: BTreeMap<String, f64> =
            terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let rhs_total = terms.values().sum();
        let satisfied = lhs_target_risk.map(|lhs| lhs <= rhs_total + 1e-12);
        Self {
            kind,
            terms,
            rhs_total,
            lhs_target_risk,
            satisfied,
            details: details
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            pool: pool.iter().map(|h| h.name().to_string()).collect(),
        }
    }
}

/// Shared evaluator knobs.
#[derive(Debug, Clone)]
pub struct BoundOptions {
    /// Backend for every bound-side distance; the bounds need the true
    /// infimum, so this defaults to exact.
    pub backend: Backend,
    pub seed: u64,
    pub restarts: usize,
    /// Explicit initial cluster centers for the target decomposition.
    pub cluster_init: Option<Array2<f64>>,
    /// Kernel bound K of the sample-complexity terms.
    pub kernel_bound: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Exact,
            seed: 0,
            restarts: 10,
            cluster_init: None,
            kernel_bound: 1.0,
        }
    }
}

fn target_structures(
    target: &UnlabeledDataset,
    k: usize,
    opts: &BoundOptions,
) -> Result<StructureDecomposition> {
    let cfg = KMeansConfig {
        k,
        seed: opts.seed,
        restarts: opts.restarts,
        max_iter: 300,
        init: match &opts.cluster_init {
            Some(c) => KMeansInit::Centers(c.clone()),
            None => KMeansInit::PlusPlus,
        },
    };
    clusters_kmeans_with(target, &cfg)
}

fn labeled_target(target: &UnlabeledDataset, labels: &[Label]) -> Result<LabeledDataset> {
    LabeledDataset::new(target.points().to_owned(), labels.to_vec())
}

/// Pool-restricted upper estimate of the ideal joint error:
/// `min_h eps_S(h) + eps_T(h)` over the finite pool, zero-one loss.
pub fn estimate_lambda(
    source: &LabeledDataset,
    target_labeled: &LabeledDataset,
    pool: &[Box<dyn Classifier>],
) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter("hypothesis pool is empty".into()));
    }
    let mut best = f64::INFINITY;
    for h in pool {
        let s = dataset_risk(h.as_ref(), source, Loss::ZeroOne)?.value;
        let t = dataset_risk(h.as_ref(), target_labeled, Loss::ZeroOne)?.value;
        best = best.min(s + t);
    }
    Ok(best)
}

/// Theta-weighted convex combination of empirical target and source risk.
pub fn weighted_risk(
    h: &dyn Classifier,
    source: &LabeledDataset,
    target_labeled: &LabeledDataset,
    theta: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let s = dataset_risk(h, source, Loss::ZeroOne)?.value;
    let t = dataset_risk(h, target_labeled, Loss::ZeroOne)?.value;
    Ok(theta * t + (1.0 - theta) * s)
}

fn hw_between(
    source: &LabeledDataset,
    target: &UnlabeledDataset,
    k: usize,
    opts: &BoundOptions,
) -> Result<(HierarchicalResult, StructureDecomposition, StructureDecomposition)> {
    let src_dec = classes_from_labels(source)?;
    if src_dec.k() != k {
        return Err(Error::InvalidParameter(format!(
            "source has {} classes but k = {k} was requested",
            src_dec.k()
        )));
    }
    let tgt_dec = target_structures(target, k, opts)?;
    let hier = hierarchical_wasserstein(
        &src_dec.structures,
        &tgt_dec.structures,
        1.0,
        &opts.backend,
        &opts.backend,
    )?;
    Ok((hier, src_dec, tgt_dec))
}

/// The unsupervised target-risk bound:
/// `eps_S(h) + HW_1(phi_S, phi_T) + concentration + lambda`.
pub fn bound_unsupervised(
    source: &LabeledDataset,
    target: &UnlabeledDataset,
    target_labels: Option<&[Label]>,
    hypothesis: &dyn Classifier,
    pool: &[Box<dyn Classifier>],
    params: &ConcentrationParams,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let k = classes_from_labels(source)?.k();
    ensure_k(params, k)?;
    let (hier, _, _) = hw_between(source, target, k, opts)?;
    let source_risk = dataset_risk(hypothesis, source, Loss::ZeroOne)?.value;

    let mut terms = vec![
        ("source_risk", source_risk),
        ("hw_distance", hier.distance),
        ("concentration", params.term()),
    ];
    let mut lhs = None;
    if let Some(labels) = target_labels {
        let t_labeled = labeled_target(target, labels)?;
        terms.push(("lambda", estimate_lambda(source, &t_labeled, pool)?));
        lhs = Some(dataset_risk(hypothesis, &t_labeled, Loss::ZeroOne)?.value);
    }
    Ok(BoundReport::assemble(
        BoundKind::Unsupervised,
        terms,
        vec![("k", k as f64)],
        pool,
        lhs,
    ))
}

/// The sigma-matching decomposition of the unsupervised bound:
/// `eps_S(h) + sum_h W_1(rho_h, varrho_sigma(h)) + k(k-1) iota + concentration + lambda`,
/// with sigma read off the unregularized optimal outer plan.
pub fn bound_corollary(
    source: &LabeledDataset,
    target: &UnlabeledDataset,
    target_labels: Option<&[Label]>,
    hypothesis: &dyn Classifier,
    pool: &[Box<dyn Classifier>],
    params: &ConcentrationParams,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let k = classes_from_labels(source)?.k();
    ensure_k(params, k)?;
    // Sigma is defined through the exact outer plan, independent of the
    // backend used for inner distances.
    let exact_outer = BoundOptions {
        backend: Backend::Exact,
        ..opts.clone()
    };
    let (hier, _, _) = hw_between(source, target, k, &exact_outer)?;

    let w = &hier.inner_cost;
    let sigma: Vec<usize> = (0..k)
        .map(|h| {
            let row = hier.outer_plan.coupling.row(h);
            (0..k)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .expect("k >= 1")
        })
        .collect();
    let pairwise_sum: f64 = (0..k).map(|h| w[[h, sigma[h]]]).sum();
    let iota = if k == 1 {
        0.0 // max over the empty off-match set
    } else {
        let mut m = 0.0f64;
        for h in 0..k {
            for l in 0..k {
                if l != sigma[h] {
                    m = m.max(w[[h, l]]);
                }
            }
        }
        m
    };
    let iota_term = (k * (k - 1)) as f64 * iota;
    let source_risk = dataset_risk(hypothesis, source, Loss::ZeroOne)?.value;

    let mut terms = vec![
        ("source_risk", source_risk),
        ("pairwise_sum", pairwise_sum),
        ("iota_term", iota_term),
        ("concentration", params.term()),
    ];
    let mut lhs = None;
    if let Some(labels) = target_labels {
        let t_labeled = labeled_target(target, labels)?;
        terms.push(("lambda", estimate_lambda(source, &t_labeled, pool)?));
        lhs = Some(dataset_risk(hypothesis, &t_labeled, Loss::ZeroOne)?.value);
    }
    Ok(BoundReport::assemble(
        BoundKind::Corollary,
        terms,
        vec![
            ("hw_distance", hier.distance),
            ("iota", iota),
            ("k", k as f64),
        ],
        pool,
        lhs,
    ))
}

/// Semi-supervised bound for the empirical minimizer of the theta-weighted
/// risk: a target-risk proxy, two sample-complexity terms, and the
/// `2(1 - theta)(HW_1 + lambda + concentration)` adaptation block.
#[allow(clippy::too_many_arguments)]
pub fn bound_semisupervised(
    source: &LabeledDataset,
    target_labeled: &LabeledDataset,
    target: &UnlabeledDataset,
    pool: &[Box<dyn Classifier>],
    params: &ConcentrationParams,
    theta: f64,
    vartheta: Option<f64>,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    if pool.is_empty() {
        return Err(Error::InvalidParameter("hypothesis pool is empty".into()));
    }
    let n = (source.len() + target_labeled.len()) as f64;
    let vt = vartheta.unwrap_or(target_labeled.len() as f64 / n);
    if !(vt > 0.0 && vt < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "vartheta must lie in (0, 1), got {vt}"
        )));
    }
    let k = classes_from_labels(source)?.k();
    ensure_k(params, k)?;
    let kb = opts.kernel_bound;

    let (hier, _, _) = hw_between(source, target, k, opts)?;
    let lambda = estimate_lambda(source, target_labeled, pool)?;
    let conc = params.term();

    // Empirical minimizer of the weighted risk, and the best-on-target proxy.
    let mut h_hat = 0usize;
    let mut best_weighted = f64::INFINITY;
    let mut target_risk_star = f64::INFINITY;
    for (i, h) in pool.iter().enumerate() {
        let wr = weighted_risk(h.as_ref(), source, target_labeled, theta)?;
        if wr < best_weighted {
            best_weighted = wr;
            h_hat = i;
        }
        let tr = dataset_risk(h.as_ref(), target_labeled, Loss::ZeroOne)?.value;
        target_risk_star = target_risk_star.min(tr);
    }

    let mix = (1.0 - theta).powi(2) / (1.0 - vt) + theta.powi(2) / vt;
    let sample_deviation = 2.0 * (2.0 * kb * mix * (2.0 / params.delta).ln() / n).sqrt();
    let sample_rate = 4.0
        * (kb / n).sqrt()
        * (theta / (n * vt * vt.sqrt()) + (1.0 - theta) / (n * (1.0 - vt) * (1.0 - vt).sqrt()));
    let adaptation_block = 2.0 * (1.0 - theta) * (hier.distance + lambda + conc);

    let lhs = dataset_risk(pool[h_hat].as_ref(), target_labeled, Loss::ZeroOne)?.value;
    Ok(BoundReport::assemble(
        BoundKind::SemiSupervised,
        vec![
            ("target_risk_star", target_risk_star),
            ("sample_deviation", sample_deviation),
            ("sample_rate", sample_rate),
            ("adaptation_block", adaptation_block),
        ],
        vec![
            ("hw_distance", hier.distance),
            ("lambda", lambda),
            ("concentration", conc),
            ("theta", theta),
            ("vartheta", vt),
            ("weighted_risk_min", best_weighted),
            ("k", k as f64),
        ],
        pool,
        Some(lhs),
    ))
}

/// N labeled source domains with mixture weights theta and sample fractions
/// vartheta, both on the simplex.
#[derive(Debug, Clone)]
pub struct SourceCollection {
    sources: Vec<LabeledDataset>,
    theta: Array1<f64>,
    vartheta: Array1<f64>,
}

impl SourceCollection {
    /// `theta`/`vartheta` default to the sources' size fractions.
    pub fn new(
        sources: Vec<LabeledDataset>,
        theta: Option<Vec<f64>>,
        vartheta: Option<Vec<f64>>,
    ) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::EmptySupport);
        }
        let n_total: usize = sources.iter().map(|s| s.len()).sum();
        let default_fractions: Vec<f64> = sources
            .iter()
            .map(|s| s.len() as f64 / n_total as f64)
            .collect();
        let vartheta = Array1::from_vec(vartheta.unwrap_or_else(|| default_fractions.clone()));
        let theta = Array1::from_vec(theta.unwrap_or(default_fractions));
        for (name, v) in [("theta", &theta), ("vartheta", &vartheta)] {
            if v.len() != sources.len() {
                return Err(Error::LengthMismatch {
                    left: v.len(),
                    right: sources.len(),
                });
            }
            let sum: f64 = v.sum();
            if (sum - 1.0).abs() > 1e-9 || v.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie on the probability simplex (sum = {sum})"
                )));
            }
        }
        if vartheta.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidParameter(
                "every vartheta entry must be positive".into(),
            ));
        }
        let d = sources[0].dim();
        if sources.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: sources.iter().map(|s| s.dim()).find(|&x| x != d).unwrap(),
            });
        }
        Ok(Self {
            sources,
            theta,
            vartheta,
        })
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn sources(&self) -> &[LabeledDataset] {
        &self.sources
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn vartheta(&self) -> &Array1<f64> {
        &self.vartheta
    }

    pub fn n_total(&self) -> usize {
        self.sources.iter().map(|s| s.len()).sum()
    }

    /// Shared class count; all sources must decompose into the same k.
    fn shared_k(&self) -> Result<usize> {
        let k = classes_from_labels(&self.sources[0])?.k();
        for s in &self.sources[1..] {
            let kj = classes_from_labels(s)?.k();
            if kj != k {
                return Err(Error::InvalidParameter(format!(
                    "sources disagree on class count: {k} vs {kj}"
                )));
            }
        }
        Ok(k)
    }
}

fn multisource_sample_terms(
    collection: &SourceCollection,
    params: &ConcentrationParams,
    kernel_bound: f64,
) -> (f64, f64) {
    let n = collection.n_total() as f64;
    let ratio: f64 = collection
        .theta
        .iter()
        .zip(collection.vartheta.iter())
        .map(|(&t, &v)| t * t / v)
        .sum();
    let deviation = 2.0 * (2.0 * kernel_bound * ratio * (2.0 / params.delta).ln() / n).sqrt();
    let rate_sum: f64 = collection
        .theta
        .iter()
        .zip(collection.vartheta.iter())
        .map(|(&t, &v)| kernel_bound * t / (v * n))
        .sum();
    (deviation, 2.0 * rate_sum.sqrt())
}

/// Per-pool-member theta-weighted source risk, and target risk when labels exist.
fn multisource_diagnostics(
    collection: &SourceCollection,
    target_labeled: Option<&LabeledDataset>,
    pool: &[Box<dyn Classifier>],
) -> Result<(Option<f64>, Option<f64>)> {
    let Some(t_labeled) = target_labeled else {
        return Ok((None, None));
    };
    if pool.is_empty() {
        return Ok((None, None));
    }
    let mut h_hat = 0usize;
    let mut best = f64::INFINITY;
    let mut star = f64::INFINITY;
    for (i, h) in pool.iter().enumerate() {
        let mut wr = 0.0;
        for (j, s) in collection.sources.iter().enumerate() {
            wr += collection.theta[j] * dataset_risk(h.as_ref(), s, Loss::ZeroOne)?.value;
        }
        if wr < best {
            best = wr;
            h_hat = i;
        }
        star = star.min(dataset_risk(h.as_ref(), t_labeled, Loss::ZeroOne)?.value);
    }
    let lhs = dataset_risk(pool[h_hat].as_ref(), t_labeled, Loss::ZeroOne)?.value;
    Ok((Some(star), Some(lhs)))
}

/// Multi-source bound built on per-source HW_1 distances:
/// sample terms plus `2 sum_j theta_j (HW_1(phi_Sj, phi_T) + lambda_j + concentration)`.
pub fn bound_multisource_pairwise(
    collection: &SourceCollection,
    target: &UnlabeledDataset,
    target_labels: Option<&[Label]>,
    pool: &[Box<dyn Classifier>],
    params: &ConcentrationParams,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let k = collection.shared_k()?;
    ensure_k(params, k)?;
    let tgt_dec = target_structures(target, k, opts)?;
    let t_labeled = target_labels
        .map(|labels| labeled_target(target, labels))
        .transpose()?;

    let mut hw_weighted = 0.0;
    let mut lambda_weighted = t_labeled.as_ref().map(|_| 0.0);
    let mut details: Vec<(String, f64)> = Vec::new();
    for (j, src) in collection.sources.iter().enumerate() {
        let src_dec = classes_from_labels(src)?;
        if src_dec.k() != k {
            return Err(Error::InvalidParameter(format!(
                "source {j} has {} classes, expected {k}",
                src_dec.k()
            )));
        }
        let hier = hierarchical_wasserstein(
            &src_dec.structures,
            &tgt_dec.structures,
            1.0,
            &opts.backend,
            &opts.backend,
        )?;
        hw_weighted += collection.theta[j] * hier.distance;
        details.push((format!("hw_source_{j}"), hier.distance));
        if let Some(tl) = &t_labeled {
            let lj = estimate_lambda(src, tl, pool)?;
            *lambda_weighted.as_mut().unwrap() += collection.theta[j] * lj;
            details.push((format!("lambda_source_{j}"), lj));
        }
    }

    let (deviation, rate) = multisource_sample_terms(collection, params, opts.kernel_bound);
    let conc = params.term();
    let (star, lhs) = multisource_diagnostics(collection, t_labeled.as_ref(), pool)?;

    let mut terms = vec![
        ("sample_deviation", deviation),
        ("sample_rate", rate),
        ("hw_block", 2.0 * hw_weighted),
        ("concentration_block", 2.0 * conc),
    ];
    if let Some(lw) = lambda_weighted {
        terms.push(("lambda_block", 2.0 * lw));
    }
    if let Some(star) = star {
        terms.push(("target_risk_star", star));
    }

    details.push(("hw".to_string(), hw_weighted));
    if let Some(lw) = lambda_weighted {
        details.push(("lambda".to_string(), lw));
    }
    details.push(("k".to_string(), k as f64));
    let detail_refs: Vec<(&str, f64)> = details.iter().map(|(k, v)| (k.as_str(), *v)).collect();

    Ok(BoundReport::assemble(
        BoundKind::MultiPairwise,
        terms,
        detail_refs,
        pool,
        lhs,
    ))
}

/// Multi-source bound on the combined mixture: sample terms plus
/// `2 (HW_1(phi_S_theta, phi_T) + lambda_theta + concentration)`, where
/// phi_S_theta carries every source's class atoms with outer weight
/// theta_j / k.
pub fn bound_multisource_combined(
    collection: &SourceCollection,
    target: &UnlabeledDataset,
    target_labels: Option<&[Label]>,
    pool: &[Box<dyn Classifier>],
    params: &ConcentrationParams,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let k = collection.shared_k()?;
    ensure_k(params, k)?;
    let tgt_dec = target_structures(target, k, opts)?;
    let t_labeled = target_labels
        .map(|labels| labeled_target(target, labels))
        .transpose()?;

    // phi_S_theta: all class atoms, weighted theta_j / k within source j.
    let mut atoms = Vec::with_capacity(collection.len() * k);
    let mut weights = Vec::with_capacity(collection.len() * k);
    for (j, src) in collection.sources.iter().enumerate() {
        let src_dec = classes_from_labels(src)?;
        for atom in src_dec.structures.atoms() {
            atoms.push(atom.clone());
            weights.push(collection.theta[j] / k as f64);
        }
    }
    let mixture = MeasureOfMeasures::new(atoms, Array1::from_vec(weights))?;
    let hier = hierarchical_wasserstein(
        &mixture,
        &tgt_dec.structures,
        1.0,
        &opts.backend,
        &opts.backend,
    )?;

    // lambda_theta: joint error of the theta-mixture of sources.
    let lambda_theta = match &t_labeled {
        Some(tl) => {
            if pool.is_empty() {
                return Err(Error::InvalidParameter("hypothesis pool is empty".into()));
            }
            let mut best = f64::INFINITY;
            for h in pool {
                let mut s_mix = 0.0;
                for (j, s) in collection.sources.iter().enumerate() {
                    s_mix +=
                        collection.theta[j] * dataset_risk(h.as_ref(), s, Loss::ZeroOne)?.value;
                }
                let t = dataset_risk(h.as_ref(), tl, Loss::ZeroOne)?.value;
                best = best.min(s_mix + t);
            }
            Some(best)
        }
        None => None,
    };

    let (deviation, rate) = multisource_sample_terms(collection, params, opts.kernel_bound);
    let conc = params.term();
    let (star, lhs) = multisource_diagnostics(collection, t_labeled.as_ref(), pool)?;

    let mut terms = vec![
        ("sample_deviation", deviation),
        ("sample_rate", rate),
        ("hw_block", 2.0 * hier.distance),
        ("concentration_block", 2.0 * conc),
    ];
    if let Some(lt) = lambda_theta {
        terms.push(("lambda_block", 2.0 * lt));
    }
    if let Some(star) = star {
        terms.push(("target_risk_star", star));
    }

    let mut details = vec![("hw", hier.distance), ("k", k as f64)];
    if let Some(lt) = lambda_theta {
        details.push(("lambda", lt));
    }

    Ok(BoundReport::assemble(
        BoundKind::MultiCombined,
        terms,
        details,
        pool,
        lhs,
    ))
}

fn ensure_k(params: &ConcentrationParams, k: usize) -> Result<()> {
    if params.k != k {
        return Err(Error::InvalidParameter(format!(
            "concentration params declare k = {} but the data has k = {k} structures",
            params.k
        )));
    }
    Ok(())
}
