//! Lloyd's k-means with k-means++ seeding and deterministic restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{sq_dist, MERGE_TOL};

#[derive(Debug, Clone)]
pub enum KMeansInit {
    /// Weighted farthest-point seeding (k-means++).
    PlusPlus,
    /// Explicit initial centers (k x d); runs a single restart.
    Centers(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub init: KMeansInit,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            restarts: 10,
            max_iter: 300,
            init: KMeansInit::PlusPlus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub membership: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    /// Inertia after every Lloyd iteration of the winning restart.
    pub inertia_trace: Vec<f64>,
}

/// Cluster `points` into `cfg.k` non-empty clusters.
///
/// Fully reproducible: restart r draws from stream r of a ChaCha generator
/// seeded with `cfg.seed`, and the best restart is the lowest inertia with
/// ties going to the earlier restart.
pub fn kmeans(points: ArrayView2<'_, f64>, cfg: &KMeansConfig) -> Result<KMeansFit> {
    let m = points.nrows();
    let k = cfg.k;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if m < k {
        return Err(Error::DegenerateClustering { distinct: m, k });
    }
    let distinct = count_distinct(points, k);
    if distinct < k {
        return Err(Error::DegenerateClustering { distinct, k });
    }

    let restarts = match cfg.init {
        KMeansInit::Centers(_) => 1,
        KMeansInit::PlusPlus => cfg.restarts.max(1),
    };

    let mut best: Option<KMeansFit> = None;
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let centers = match &cfg.init {
            KMeansInit::Centers(c) => {
                if c.nrows() != k || c.ncols() != points.ncols() {
                    return Err(Error::ShapeMismatch {
                        expected_rows: k,
                        expected_cols: points.ncols(),
                        rows: c.nrows(),
                        cols: c.ncols(),
                    });
                }
                c.clone()
            }
            KMeansInit::PlusPlus => plus_plus_seeding(points, k, &mut rng),
        };
        let fit = lloyd(points, centers, cfg.max_iter);
        let better = match &best {
            None => true,
            Some(b) => fit.inertia < b.inertia,
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

fn count_distinct(points: ArrayView2<'_, f64>, needed: usize) -> usize {
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..points.nrows() {
        let p = points.row(i);
        if !reps
            .iter()
            .any(|&j| sq_dist(p, points.row(j)) <= MERGE_TOL * MERGE_TOL)
        {
            reps.push(i);
            if reps.len() >= needed {
                break;
            }
        }
    }
    reps.len()
}

fn plus_plus_seeding(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let m = points.nrows();
    let d = points.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = rng.random_range(0..m);
    centers.row_mut(0).assign(&points.row(first));

    let mut dist2: Vec<f64> = (0..m)
        .map(|i| sq_dist(points.row(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 && total.is_finite() {
            let mut r = rng.random::<f64>() * total;
            let mut idx = m - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            // All remaining mass sits on already-chosen centers; take the
            // first point not coinciding with any of them.
            (0..m)
                .find(|&i| {
                    (0..c).all(|cc| sq_dist(points.row(i), centers.row(cc)) > MERGE_TOL * MERGE_TOL)
                })
                .unwrap_or(first)
        };
        centers.row_mut(c).assign(&points.row(chosen));
        for i in 0..m {
            dist2[i] = dist2[i].min(sq_dist(points.row(i), centers.row(c)));
        }
    }
    centers
}

fn lloyd(points: ArrayView2<'_, f64>, mut centers: Array2<f64>, max_iter: usize) -> KMeansFit {
    let m = points.nrows();
    let k = centers.nrows();
    let d = points.ncols();
    let mut membership = vec![0usize; m];
    let mut trace = Vec::new();
    let mut prev_inertia = f64::INFINITY;

    for _ in 0..max_iter {
        let changed = assign(points, centers.view(), &mut membership);
        repair_empty_clusters(points, &mut centers, &mut membership);

        // Update step: centers move to member means.
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for (i, &c) in membership.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += &points.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = centers.row_mut(c);
                row.assign(&(&sums.row(c) / counts[c] as f64));
            }
        }

        let inertia = total_inertia(points, centers.view(), &membership);
        debug_assert!(
            inertia <= prev_inertia * (1.0 + 1e-12) + 1e-12,
            "Lloyd iteration increased inertia: {prev_inertia} -> {inertia}"
        );
        prev_inertia = inertia;
        trace.push(inertia);

        if !changed {
            break;
        }
    }

    KMeansFit {
        membership,
        inertia: prev_inertia,
        centers,
        inertia_trace: trace,
    }
}

/// Nearest-center assignment; ties go to the lowest center index.
/// Returns whether any membership changed.
fn assign(points: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>, membership: &mut [usize]) -> bool {
    let mut changed = false;
    for i in 0..points.nrows() {
        let c = nearest_center(points.row(i), centers);
        if membership[i] != c {
            membership[i] = c;
            changed = true;
        }
    }
    changed
}

fn nearest_center(point: ArrayView1<'_, f64>, centers: ArrayView2<'_, f64>) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..centers.nrows() {
        let d = sq_dist(point, centers.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Re-seed every empty cluster at the point farthest from its nearest center.
fn repair_empty_clusters(
    points: ArrayView2<'_, f64>,
    centers: &mut Array2<f64>,
    membership: &mut [usize],
) {
    let k = centers.nrows();
    loop {
        let mut counts = vec![0usize; k];
        for &c in membership.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far_idx = 0usize;
        let mut far_d = -1.0;
        for i in 0..points.nrows() {
            // Skip points that are alone in their cluster; stealing them
            // would just move the hole.
            if counts[membership[i]] <= 1 {
                continue;
            }
            let d = sq_dist(points.row(i), centers.row(membership[i]));
            if d > far_d {
                far_d = d;
                far_idx = i;
            }
        }
        centers.row_mut(empty).assign(&points.row(far_idx));
        membership[far_idx] = empty;
    }
}

fn total_inertia(
    points: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    membership: &[usize],
) -> f64 {
    (0..points.nrows())
        .map(|i| sq_dist(points.row(i), centers.row(membership[i])))
        .sum()
}
