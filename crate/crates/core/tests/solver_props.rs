//! Property tests for the transport solvers.

use hotda_core::{solve_exact, solve_sinkhorn, CostMatrix, GroundMetric, SinkhornOptions};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|mut v| {
        let s: f64 = v.iter().sum();
        for x in &mut v {
            *x /= s;
        }
        let s: f64 = v.iter().sum();
        v[0] += 1.0 - s;
        Array1::from_vec(v)
    })
}

fn instance() -> impl Strategy<Value = (Array1<f64>, Array1<f64>, CostMatrix)> {
    (2usize..6, 2usize..6).prop_flat_map(|(n, m)| {
        (
            simplex(n),
            simplex(m),
            prop::collection::vec(0.0f64..5.0, n * m).prop_map(move |v| {
                CostMatrix::from_entries(
                    Array2::from_shape_vec((n, m), v).unwrap(),
                    1.0,
                    GroundMetric::Euclidean,
                )
                .unwrap()
            }),
        )
    })
}

/// Degeneracy stress: zero weights and heavily tied (quantized) costs are
/// exactly where simplex pivoting can stall or cycle. The transpose check is
/// a strong optimality invariant: a premature stop on either orientation
/// breaks the equality.
#[test]
fn exact_solver_survives_degenerate_instances() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng: StdRng = SeedableRng::seed_from_u64(271);
    for trial in 0..200 {
        let n = rng.random_range(2..=7);
        let m = rng.random_range(2..=7);
        let entries =
            Array2::from_shape_fn((n, m), |_| f64::from(rng.random_range(0..4u8)) * 0.5);
        let cost = CostMatrix::from_entries(entries.clone(), 1.0, GroundMetric::Euclidean).unwrap();
        let cost_t =
            CostMatrix::from_entries(entries.t().to_owned(), 1.0, GroundMetric::Euclidean).unwrap();

        let sparse_simplex = |rng: &mut StdRng, len: usize| {
            let mut w: Vec<f64> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0.0
                    } else {
                        rng.random_range(0.1..1.0)
                    }
                })
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                w[0] = 1.0;
            }
            let s: f64 = w.iter().sum();
            for x in &mut w {
                *x /= s;
            }
            let s: f64 = w.iter().sum();
            let first_positive = w.iter().position(|&x| x > 0.0).unwrap();
            w[first_positive] += 1.0 - s;
            Array1::from_vec(w)
        };
        let a = sparse_simplex(&mut rng, n);
        let b = sparse_simplex(&mut rng, m);

        let fwd = solve_exact(a.view(), b.view(), &cost).unwrap();
        let bwd = solve_exact(b.view(), a.view(), &cost_t).unwrap();
        assert!(fwd.marginal_violation <= 1e-9, "trial {trial}");
        assert!(
            (fwd.objective - bwd.objective).abs() <= 1e-9,
            "trial {trial}: {} vs {}",
            fwd.objective,
            bwd.objective
        );
        // Zero-weight atoms must carry no mass.
        for i in 0..n {
            if a[i] == 0.0 {
                assert!(fwd.coupling.row(i).sum() <= 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn exact_plans_are_feasible_vertices((a, b, cost) in instance()) {
        let plan = solve_exact(a.view(), b.view(), &cost).unwrap();
        prop_assert!(plan.coupling.iter().all(|&x| x >= 0.0));
        prop_assert!(plan.marginal_violation <= 1e-9);
        let recomputed = plan.recompute_objective(&cost);
        prop_assert!((plan.objective - recomputed).abs() <= 1e-9);
    }

    #[test]
    fn sinkhorn_respects_the_exact_lower_bound((a, b, cost) in instance()) {
        let exact = solve_exact(a.view(), b.view(), &cost).unwrap();
        let plan = solve_sinkhorn(a.view(), b.view(), &cost, SinkhornOptions {
            epsilon: 0.05 * cost.max_entry().max(1e-9),
            ..Default::default()
        }).unwrap();
        prop_assert!(plan.coupling.iter().all(|&x| x >= 0.0));
        prop_assert!(plan.marginal_violation <= 1e-9);
        prop_assert!(plan.objective >= exact.objective - 1e-12);
    }
}
