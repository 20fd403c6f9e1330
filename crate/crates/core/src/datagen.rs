//! Reproducible synthetic Gaussian-mixture adaptation scenarios.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Full description of a two-domain scenario: k isotropic Gaussian classes,
/// a per-class displacement between domains, and an optional permutation of
/// class identities in the target (the class-flip failure mode).
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub k: usize,
    pub d: usize,
    pub n_source: usize,
    pub n_target: usize,
    /// k x d class centers shared by both domains.
    pub class_centers: Array2<f64>,
    /// k x d per-class displacement applied in the target domain.
    pub shift: Array2<f64>,
    /// Per-class isotropic standard deviation.
    pub spread: Vec<f64>,
    /// Target class y draws its features at class `perm[y]`.
    pub label_permutation: Option<Vec<usize>>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("k and d must be at least 1".into()));
        }
        if self.n_source < self.k || self.n_target < self.k {
            return Err(Error::InvalidParameter(format!(
                "need at least k = {} samples per domain",
                self.k
            )));
        }
        if self.class_centers.nrows() != self.k || self.class_centers.ncols() != self.d {
            return Err(Error::ShapeMismatch {
                expected_rows: self.k,
                expected_cols: self.d,
                rows: self.class_centers.nrows(),
                cols: self.class_centers.ncols(),
            });
        }
        if self.shift.nrows() != self.k || self.shift.ncols() != self.d {
            return Err(Error::ShapeMismatch {
                expected_rows: self.k,
                expected_cols: self.d,
                rows: self.shift.nrows(),
                cols: self.shift.ncols(),
            });
        }
        if self.spread.len() != self.k {
            return Err(Error::LengthMismatch {
                left: self.spread.len(),
                right: self.k,
            });
        }
        if self.spread.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter("spread must be positive".into()));
        }
        if let Some(perm) = &self.label_permutation {
            let mut seen = vec![false; self.k];
            if perm.len() != self.k || perm.iter().any(|&p| p >= self.k || std::mem::replace(&mut seen[p], true)) {
                return Err(Error::InvalidParameter(
                    "label_permutation must be a permutation of 0..k".into(),
                ));
            }
        }
        Ok(())
    }

    /// Well-separated construction: centers with pairwise distance at least
    /// `separation`, equal per-class `spread`, and one common shift vector of
    /// norm `shift_norm` applied to every class.
    #[allow(clippy::too_many_arguments)]
    pub fn separated(
        k: usize,
        d: usize,
        n_source: usize,
        n_target: usize,
        separation: f64,
        spread: f64,
        shift_norm: f64,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidParameter("k and d must be at least 1".into()));
        }
        if !(separation > 0.0) || !(spread > 0.0) {
            return Err(Error::InvalidParameter(
                "separation and spread must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX); // keep placement independent of sampling

        let mut centers = Array2::zeros((k, d));
        let mut placed = 0usize;
        let mut box_side = separation * (k as f64).powf(1.0 / d as f64) * 1.5;
        let mut attempts = 0usize;
        while placed < k {
            let candidate: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * box_side).collect();
            let ok = (0..placed).all(|c| {
                let dist2: f64 = (0..d)
                    .map(|j| {
                        let diff: f64 = centers[[c, j]] - candidate[j];
                        diff * diff
                    })
                    .sum();
                dist2 >= separation * separation
            });
            if ok {
                for (j, &x) in candidate.iter().enumerate() {
                    centers[[placed, j]] = x;
                }
                placed += 1;
            }
            attempts += 1;
            if attempts % 1000 == 0 {
                box_side *= 1.5; // give rejection sampling more room
            }
        }

        let mut direction: Vec<f64> = (0..d)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut direction {
            *x *= shift_norm / norm.max(1e-12);
        }
        let mut shift = Array2::zeros((k, d));
        for c in 0..k {
            for (j, &x) in direction.iter().enumerate() {
                shift[[c, j]] = x;
            }
        }

        Ok(Self {
            k,
            d,
            n_source,
            n_target,
            class_centers: centers,
            shift,
            spread: vec![spread; k],
            label_permutation: None,
            seed,
        })
    }
}

/// Draw the source and target datasets described by `spec`.
///
/// The returned target carries its true labels for diagnostics; drop them
/// with [`LabeledDataset::without_labels`] before feeding the pipeline.
pub fn generate(spec: &ScenarioSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let source = sample_domain(spec, &mut rng, spec.n_source, false);
    let target = sample_domain(spec, &mut rng, spec.n_target, true);
    Ok((source, target))
}

fn sample_domain(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    n: usize,
    shifted: bool,
) -> LabeledDataset {
    let mut points = Array2::zeros((n, spec.d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = rng.random_range(0..spec.k);
        let geom = if shifted {
            spec.label_permutation.as_ref().map_or(y, |perm| perm[y])
        } else {
            y
        };
        for j in 0..spec.d {
            let noise: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            let mut x = spec.class_centers[[geom, j]] + spec.spread[geom] * noise;
            if shifted {
                x += spec.shift[[geom, j]];
            }
            points[[i, j]] = x;
        }
        labels.push(Label::Int(y as i64));
    }
    LabeledDataset::new(points, labels).expect("generated datasets are non-empty")
}

/// Per-class sample counts, used by proportion checks.
pub fn class_counts(dataset: &LabeledDataset, k: usize) -> Array1<usize> {
    let mut counts = Array1::from_elem(k, 0usize);
    for label in dataset.labels() {
        if let Label::Int(v) = label {
            counts[*v as usize] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec(seed: u64) -> ScenarioSpec {
        ScenarioSpec::separated(3, 2, 150, 150, 10.0, 1.0, 3.0, seed).unwrap()
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = base_spec(21);
        let (s1, t1) = generate(&spec).unwrap();
        let (s2, t2) = generate(&spec).unwrap();
        assert_eq!(s1.points(), s2.points());
        assert_eq!(t1.points(), t2.points());
        assert_eq!(s1.labels(), s2.labels());
    }

    #[test]
    fn class_proportions_within_three_sigma() {
        let spec = base_spec(33);
        let (s, t) = generate(&spec).unwrap();
        for ds in [&s, &t] {
            let counts = class_counts(ds, spec.k);
            let n = ds.len() as f64;
            let p = 1.0 / spec.k as f64;
            let sigma = (n * p * (1.0 - p)).sqrt();
            for &c in counts.iter() {
                assert!(
                    (c as f64 - n * p).abs() <= 3.0 * sigma,
                    "count {c} vs expected {}",
                    n * p
                );
            }
        }
    }

    #[test]
    fn centers_respect_separation() {
        let spec = base_spec(5);
        for a in 0..spec.k {
            for b in (a + 1)..spec.k {
                let dist2: f64 = (0..spec.d)
                    .map(|j| (spec.class_centers[[a, j]] - spec.class_centers[[b, j]]).powi(2))
                    .sum();
                assert!(dist2.sqrt() >= 10.0 - 1e-9);
            }
        }
    }

    #[test]
    fn label_permutation_moves_target_geometry() {
        let mut spec = base_spec(8);
        spec.k = 2;
        spec.class_centers = ndarray::array![[0.0, 0.0], [30.0, 0.0]];
        spec.shift = Array2::zeros((2, 2));
        spec.spread = vec![0.5, 0.5];
        spec.label_permutation = Some(vec![1, 0]);
        let (_, target) = generate(&spec).unwrap();
        for i in 0..target.len() {
            let x = target.points()[[i, 0]];
            match target.labels()[i] {
                Label::Int(0) => assert!(x > 15.0, "label 0 should sit at the far center"),
                Label::Int(1) => assert!(x < 15.0),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = base_spec(0);
        spec.spread[0] = 0.0;
        assert!(generate(&spec).is_err());
        let mut spec = base_spec(0);
        spec.label_permutation = Some(vec![0, 0, 1]);
        assert!(generate(&spec).is_err());
        let mut spec = base_spec(0);
        spec.n_source = 2;
        assert!(generate(&spec).is_err());
    }
}
