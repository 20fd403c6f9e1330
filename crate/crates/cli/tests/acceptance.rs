//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Run with `cargo test -p hotda-cli --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hotda_core::bounds::{
    bound_multisource_combined, bound_multisource_pairwise, bound_semisupervised,
    bound_unsupervised, BoundOptions, ConcentrationParams, SourceCollection,
};
use hotda_core::datagen::{generate, ScenarioSpec};
use hotda_core::pipeline::{adapt, AdaptConfig};
use hotda_core::risk::{dataset_risk, Classifier, Loss, NearestNeighbor};
use hotda_core::structures::classes_from_labels;
use hotda_core::{
    flatten, hierarchical_wasserstein, solve_exact, solve_sinkhorn, wasserstein, Backend,
    CostMatrix, DiscreteMeasure, GroundMetric, Label, LabeledDataset, MeasureOfMeasures,
    SinkhornOptions,
};
use itertools::Itertools;
use ndarray::{Array1, Array2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_measure(rng: &mut StdRng, max_pts: usize, d: usize) -> DiscreteMeasure {
    let n = rng.random_range(1..=max_pts);
    let support = Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0));
    let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    let s: f64 = w.iter().sum();
    w[0] += 1.0 - s;
    DiscreteMeasure::new(support, Array1::from_vec(w)).unwrap()
}

fn uniform_collection(rng: &mut StdRng, k: usize, d: usize) -> MeasureOfMeasures {
    MeasureOfMeasures::uniform((0..k).map(|_| random_measure(rng, 4, d)).collect()).unwrap()
}

fn w1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    wasserstein(a, b, 1.0, &Backend::Exact).unwrap().distance
}

fn hw1(a: &MeasureOfMeasures, b: &MeasureOfMeasures) -> f64 {
    hierarchical_wasserstein(a, b, 1.0, &Backend::Exact, &Backend::Exact)
        .unwrap()
        .distance
}

/// Criterion 1: exact solver equals the permutation brute force on 500
/// random uniform instances with n = m in 2..=6, within 1e-9 and 10 s.
#[test]
fn criterion_1_exact_solver_oracle() {
    let start = Instant::now();
    let mut rng: StdRng = SeedableRng::seed_from_u64(2024);
    for trial in 0..500 {
        let n = rng.random_range(2..=6);
        let entries = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..5.0));
        let cost =
            CostMatrix::from_entries(entries.clone(), 1.0, GroundMetric::Euclidean).unwrap();
        let uniform = Array1::from_elem(n, 1.0 / n as f64);
        let plan = solve_exact(uniform.view(), uniform.view(), &cost).unwrap();
        assert!(plan.marginal_violation <= 1e-9);
        let brute = (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| entries[[i, j]]).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min);
        assert!(
            (plan.objective - brute).abs() <= 1e-9,
            "trial {trial}: solver {} vs brute {brute}",
            plan.objective
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("[PASS] criterion 1: exact-solver oracle equivalence (500 instances, {elapsed:?})");
}

/// Criterion 2: sinkhorn at eps = 1e-3 max(C) lands within 1% of exact with
/// marginal violation <= 1e-9 on 100 random 10x10 instances, within 30 s.
#[test]
fn criterion_2_sinkhorn_convergence() {
    let start = Instant::now();
    let mut rng: StdRng = SeedableRng::seed_from_u64(4096);
    for trial in 0..100 {
        let n = 10;
        let entries = Array2::from_shape_fn((n, n), |_| rng.random_range(0.05..4.0));
        let cost = CostMatrix::from_entries(entries, 1.0, GroundMetric::Euclidean).unwrap();
        let uniform = Array1::from_elem(n, 1.0 / n as f64);
        let exact = solve_exact(uniform.view(), uniform.view(), &cost).unwrap();
        let plan = solve_sinkhorn(
            uniform.view(),
            uniform.view(),
            &cost,
            SinkhornOptions {
                epsilon: 1e-3 * cost.max_entry(),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            plan.marginal_violation <= 1e-9,
            "trial {trial}: violation {}",
            plan.marginal_violation
        );
        let rel = (plan.objective - exact.objective).abs() / exact.objective.max(1e-12);
        assert!(rel <= 0.01, "trial {trial}: relative gap {rel}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("[PASS] criterion 2: sinkhorn convergence (100 instances, {elapsed:?})");
}

/// Criterion 3: metric axioms for W_1 and HW_1 on 200 random instances each.
#[test]
fn criterion_3_metric_axioms() {
    let mut rng: StdRng = SeedableRng::seed_from_u64(31);
    for _ in 0..200 {
        let a = random_measure(&mut rng, 6, 2);
        let b = random_measure(&mut rng, 6, 2);
        let c = random_measure(&mut rng, 6, 2);
        assert!((w1(&a, &b) - w1(&b, &a)).abs() <= 1e-9);
        assert!(w1(&a, &c) <= w1(&a, &b) + w1(&b, &c) + 1e-8);
        assert!(w1(&a, &a.merged()) <= 1e-9);
        if w1(&a, &b) <= 1e-9 {
            assert!(a.coincides_with(&b, 1e-6));
        }
    }
    for _ in 0..200 {
        let k = rng.random_range(1..=3);
        let a = uniform_collection(&mut rng, k, 2);
        let b = uniform_collection(&mut rng, k, 2);
        let c = uniform_collection(&mut rng, k, 2);
        assert!((hw1(&a, &b) - hw1(&b, &a)).abs() <= 1e-9);
        assert!(hw1(&a, &c) <= hw1(&a, &b) + hw1(&b, &c) + 1e-8);
        assert!(hw1(&a, &a) <= 1e-9);
    }
    println!("[PASS] criterion 3: W1 and HW1 metric axioms (200 instances each)");
}

/// Criterion 4: W_1 of flattened mixtures never exceeds HW_1, and
/// HW_1 <= HW_2, on 200 random instances with exact backends.
#[test]
fn criterion_4_hierarchical_monotonicity() {
    let mut rng: StdRng = SeedableRng::seed_from_u64(41);
    for trial in 0..200 {
        let ka = rng.random_range(1..=3);
        let kb = rng.random_range(1..=3);
        let phi = uniform_collection(&mut rng, ka, 2);
        let psi = uniform_collection(&mut rng, kb, 2);
        let flat = w1(&flatten(&phi), &flatten(&psi));
        let h1 = hw1(&phi, &psi);
        assert!(flat <= h1 + 1e-8, "trial {trial}: {flat} > {h1}");
        let h2 = hierarchical_wasserstein(&phi, &psi, 2.0, &Backend::Exact, &Backend::Exact)
            .unwrap()
            .distance;
        assert!(h1 <= h2 + 1e-8, "trial {trial}: HW1 {h1} > HW2 {h2}");
    }
    println!("[PASS] criterion 4: hierarchical monotonicity and HW1 <= HW2 (200 instances)");
}

/// Criterion 5: the sigma-matching chain HW1 <= pairwise sum + k(k-1) iota
/// and the 1/k cap HW1 <= mean pairwise W1, on 200 structure pairs.
#[test]
fn criterion_5_corollary_chain() {
    let mut rng: StdRng = SeedableRng::seed_from_u64(51);
    for trial in 0..200 {
        let k = rng.random_range(2..=5);
        let phi = uniform_collection(&mut rng, k, 2);
        let psi = uniform_collection(&mut rng, k, 2);
        let result =
            hierarchical_wasserstein(&phi, &psi, 1.0, &Backend::Exact, &Backend::Exact).unwrap();
        let w = &result.inner_cost;
        let sigma: Vec<usize> = (0..k)
            .map(|h| {
                let row = result.outer_plan.coupling.row(h);
                (0..k).max_by(|&x, &y| row[x].total_cmp(&row[y])).unwrap()
            })
            .collect();
        let pairwise: f64 = (0..k).map(|h| w[[h, sigma[h]]]).sum();
        let mut iota = 0.0f64;
        for h in 0..k {
            for l in 0..k {
                if l != sigma[h] {
                    iota = iota.max(w[[h, l]]);
                }
            }
        }
        let chain = pairwise + (k * (k - 1)) as f64 * iota;
        assert!(
            result.distance <= chain + 1e-8,
            "trial {trial}: HW {} > chain {chain}",
            result.distance
        );
        let cap = w.iter().sum::<f64>() / k as f64;
        assert!(
            result.distance <= cap + 1e-8,
            "trial {trial}: HW {} > cap {cap}",
            result.distance
        );
    }
    println!("[PASS] criterion 5: corollary chain and 1/k tightening (200 pairs, k in 2..=5)");
}

fn majority_labels(
    membership: &[usize],
    k: usize,
    labels: &[Label],
    classes: &[Label],
) -> Vec<Option<usize>> {
    (0..k)
        .map(|cluster| {
            let mut counts = vec![0usize; classes.len()];
            let mut total = 0usize;
            for (i, &c) in membership.iter().enumerate() {
                if c == cluster {
                    total += 1;
                    if let Some(pos) = classes.iter().position(|l| l == &labels[i]) {
                        counts[pos] += 1;
                    }
                }
            }
            let best = (0..classes.len()).max_by_key(|&h| counts[h])?;
            (2 * counts[best] > total).then_some(best)
        })
        .collect()
}

/// Criterion 6: on separated constant-shift scenarios the matching recovers
/// the planted correspondence in at least 99/100 trials, and adaptation
/// never lowers 1-NN target accuracy in a recovering trial.
#[test]
fn criterion_6_pipeline_recovery() {
    let mut recovered = 0usize;
    for trial in 0..100u64 {
        let k = 2 + (trial % 3) as usize;
        let spec = ScenarioSpec::separated(k, 2, 200, 200, 10.0, 1.0, 3.0, 60_000 + trial)
            .unwrap();
        let (source, target_labeled) = generate(&spec).unwrap();
        let target = target_labeled.without_labels();
        let out = adapt(
            &source,
            &target,
            &AdaptConfig {
                seed: trial,
                ..Default::default()
            },
        )
        .unwrap();

        // Planted correspondence: class h must match the cluster whose
        // majority label is h, bijectively.
        let classes = classes_from_labels(&source).unwrap();
        let class_list = classes.class_labels.clone().unwrap();
        let majors = majority_labels(
            &out.target_structures.membership,
            k,
            target_labeled.labels(),
            &class_list,
        );
        let ok = (0..k).all(|h| majors[out.matching.sigma[h]] == Some(h))
            && (0..k).map(|h| out.matching.sigma[h]).sorted().eq(0..k);
        if !ok {
            continue;
        }
        recovered += 1;

        let pre = NearestNeighbor::fit(&source, "pre");
        let post = NearestNeighbor::fit(&out.transported.as_labeled(), "post");
        let pre_acc = 1.0 - dataset_risk(&pre, &target_labeled, Loss::ZeroOne).unwrap().value;
        let post_acc = 1.0
            - dataset_risk(&post, &target_labeled, Loss::ZeroOne)
                .unwrap()
                .value;
        assert!(
            post_acc >= pre_acc,
            "trial {trial}: post {post_acc} < pre {pre_acc}"
        );
    }
    assert!(recovered >= 99, "recovered only {recovered}/100");
    println!("[PASS] criterion 6: pipeline recovery ({recovered}/100 planted matchings)");
}

/// Criterion 7: self-adaptation with clustering seeded at the class means
/// reproduces the true labels exactly.
#[test]
fn criterion_7_self_adaptation_identity() {
    let spec = ScenarioSpec::separated(3, 2, 150, 150, 20.0, 1.0, 0.0, 777).unwrap();
    let (source, _) = generate(&spec).unwrap();
    let target = source.without_labels();

    let dec = classes_from_labels(&source).unwrap();
    let k = dec.k();
    let mut means = Array2::zeros((k, source.dim()));
    for h in 0..k {
        let atom = dec.structures.atom(h);
        for i in 0..atom.len() {
            for c in 0..source.dim() {
                means[[h, c]] += atom.point(i)[c] / atom.len() as f64;
            }
        }
    }

    let out = adapt(
        &source,
        &target,
        &AdaptConfig {
            cluster_init: Some(means),
            ..Default::default()
        },
    )
    .unwrap();
    let nn = NearestNeighbor::fit(&out.transported.as_labeled(), "post");
    let predictions = nn.predict_all(source.points());
    let accuracy = predictions
        .iter()
        .zip(source.labels())
        .filter(|(p, t)| p == t)
        .count() as f64
        / source.len() as f64;
    assert_eq!(accuracy, 1.0);
    println!("[PASS] criterion 7: self-adaptation identity (accuracy 1.0)");
}

/// Criterion 8: every report's rhs_total is exactly the sum of its terms;
/// N = 1 multi-source reports reproduce the unsupervised HW and lambda
/// values; theta = 1 semi-supervised reports have a zero adaptation block.
#[test]
fn criterion_8_bound_report_integrity() {
    let spec = ScenarioSpec::separated(3, 2, 90, 90, 12.0, 1.0, 3.0, 88).unwrap();
    let (source, target_labeled) = generate(&spec).unwrap();
    let target = target_labeled.without_labels();
    let labels = target_labeled.labels().to_vec();
    let h = NearestNeighbor::fit(&source, "1nn-source");
    let pool: Vec<Box<dyn Classifier>> = vec![Box::new(h.clone())];
    let params = ConcentrationParams::new(0.05, 1.0, 3).unwrap();
    let opts = BoundOptions::default();

    let uni =
        bound_unsupervised(&source, &target, Some(&labels), &h, &pool, &params, &opts).unwrap();
    let collection = SourceCollection::new(vec![source.clone()], None, None).unwrap();
    let pair = bound_multisource_pairwise(&collection, &target, Some(&labels), &pool, &params, &opts)
        .unwrap();
    let comb = bound_multisource_combined(&collection, &target, Some(&labels), &pool, &params, &opts)
        .unwrap();

    let t_labeled_subset = LabeledDataset::new(
        target_labeled.points().to_owned(),
        target_labeled.labels().to_vec(),
    )
    .unwrap();
    let semi = bound_semisupervised(
        &source,
        &t_labeled_subset,
        &target,
        &pool,
        &params,
        1.0,
        Some(0.5),
        &opts,
    )
    .unwrap();

    for report in [&uni, &pair, &comb, &semi] {
        let sum: f64 = report.terms.values().sum();
        assert!(
            (report.rhs_total - sum).abs() <= 1e-9,
            "{:?}: rhs {} vs sum {sum}",
            report.kind,
            report.rhs_total
        );
        assert!(report.terms.values().all(|&v| v >= 0.0));
    }
    assert!((pair.details["hw"] - uni.terms["hw_distance"]).abs() < 1e-12);
    assert!((comb.details["hw"] - uni.terms["hw_distance"]).abs() < 1e-12);
    assert!((pair.details["lambda"] - uni.terms["lambda"]).abs() < 1e-12);
    assert!((comb.details["lambda"] - uni.terms["lambda"]).abs() < 1e-12);
    assert_eq!(semi.terms["adaptation_block"], 0.0);
    println!("[PASS] criterion 8: bound report integrity and degenerations");
}

fn run_cli(args: &[&str], dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_hotda"))
        .args(args)
        .current_dir(dir)
        .status()
        .expect("binary runs");
    assert!(status.success(), "hotda {args:?} failed");
}

/// Criterion 9: identical seeds and configs give byte-identical CLI outputs.
#[test]
fn criterion_9_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for round in ["a", "b"] {
        std::fs::create_dir_all(dir.join(round)).unwrap();
        run_cli(
            &[
                "gen", "--k", "3", "--d", "2", "--n-source", "80", "--n-target", "80",
                "--separation", "12", "--spread", "1", "--shift-norm", "3", "--seed", "9",
                "--out-source", &format!("{round}/S.csv"),
                "--out-target", &format!("{round}/T.csv"),
                "--out-target-labels", &format!("{round}/TL.csv"),
            ],
            dir,
        );
        run_cli(
            &[
                "adapt", "--source", &format!("{round}/S.csv"),
                "--target", &format!("{round}/T.csv"),
                "--out-dir", &format!("{round}/out"), "--seed", "9",
            ],
            dir,
        );
        run_cli(
            &[
                "bound", "--kind", "corollary", "--source", &format!("{round}/S.csv"),
                "--target", &format!("{round}/TL.csv"), "--zeta-prime", "1.0",
                "--diagnostic", "--seed", "9", "--out", &format!("{round}/report.json"),
            ],
            dir,
        );
    }
    for file in [
        "S.csv",
        "T.csv",
        "TL.csv",
        "out/transported.csv",
        "out/matching.json",
        "out/predictions.csv",
        "report.json",
    ] {
        let a = std::fs::read(dir.join("a").join(file)).unwrap();
        let b = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "outputs differ for {file}");
    }
    println!("[PASS] criterion 9: CLI outputs are byte-identical across reruns");
}
