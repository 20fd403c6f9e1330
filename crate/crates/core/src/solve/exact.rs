//! Exact solver for discrete optimal transport.
//!
//! Network-simplex specialization to the dense transportation polytope
//! U(a, b): the basis is a spanning tree over the n + m row/column nodes,
//! seeded by the northwest-corner rule. Pivots pick the most negative
//! reduced cost; if the solve degenerates for too long we fall back to
//! Bland's rule, which cannot cycle.

use ndarray::{Array2, ArrayView1};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::measure::validate_simplex;
use crate::plan::TransportPlan;

#[derive(Debug, Clone, Copy)]
struct BasicCell {
    row: usize,
    col: usize,
    flow: f64,
}

/// Solve `min <gamma, C>_F` over the transportation polytope U(a, b).
///
/// `a` and `b` must be probability vectors matching the cost matrix shape.
/// The returned plan is a vertex of the polytope and a global minimizer up
/// to a reduced-cost tolerance of `1e-12 * (1 + max C)`.
pub fn solve_exact(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: &CostMatrix,
) -> Result<TransportPlan> {
    let n = a.len();
    let m = b.len();
    if n != cost.nrows() || m != cost.ncols() {
        return Err(Error::ShapeMismatch {
            expected_rows: n,
            expected_cols: m,
            rows: cost.nrows(),
            cols: cost.ncols(),
        });
    }
    validate_simplex(a)?;
    validate_simplex(b)?;

    let c = cost.entries();
    let reduced_tol = 1e-12 * (1.0 + cost.max_entry());

    let mut cells = northwest_corner(a, b);
    let mut is_basic = vec![false; n * m];
    for cell in &cells {
        is_basic[cell.row * m + cell.col] = true;
    }

    let max_pivots = 10_000 + 200 * (n + m);
    let degenerate_limit = 100 + 10 * (n + m);
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    let mut pivots = 0usize;

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];

    loop {
        compute_duals(&cells, c, n, m, &mut u, &mut v)?;

        // Entering arc selection.
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if is_basic[i * m + j] {
                    continue;
                }
                let r = c[[i, j]] - u[i] - v[j];
                if r < -reduced_tol {
                    if bland {
                        entering = Some((i, j, r));
                        break 'scan;
                    }
                    match entering {
                        Some((_, _, best)) if r >= best => {}
                        _ => entering = Some((i, j, r)),
                    }
                }
            }
        }
        let Some((ei, ej, best_r)) = entering else {
            break; // optimal
        };

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::ExactSolverStalled {
                iterations: pivots,
                reduced_cost: best_r,
            });
        }

        // Unique tree path from row node `ei` to column node `n + ej`.
        let path = tree_path(&cells, n, m, ei, n + ej)?;

        // Going around the cycle, path edges at even positions lose flow.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (t, &cell_idx) in path.iter().enumerate() {
            if t % 2 == 0 && cells[cell_idx].flow <= theta {
                theta = cells[cell_idx].flow;
                leaving = cell_idx;
            }
        }
        debug_assert!(leaving != usize::MAX);
        let theta = theta.max(0.0);

        if theta <= 0.0 {
            degenerate_streak += 1;
            if degenerate_streak > degenerate_limit {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
        }

        for (t, &cell_idx) in path.iter().enumerate() {
            if t % 2 == 0 {
                cells[cell_idx].flow = (cells[cell_idx].flow - theta).max(0.0);
            } else {
                cells[cell_idx].flow += theta;
            }
        }
        let old = cells[leaving];
        is_basic[old.row * m + old.col] = false;
        is_basic[ei * m + ej] = true;
        cells[leaving] = BasicCell {
            row: ei,
            col: ej,
            flow: theta,
        };
    }

    let mut coupling = Array2::zeros((n, m));
    for cell in &cells {
        coupling[[cell.row, cell.col]] += cell.flow;
    }
    Ok(TransportPlan::from_coupling(
        coupling,
        a.to_owned(),
        b.to_owned(),
        cost,
        pivots,
        true,
    ))
}

/// Northwest-corner initial basis: exactly n + m - 1 staircase cells.
fn northwest_corner(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Vec<BasicCell> {
    let n = a.len();
    let m = b.len();
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = ra[i].min(rb[j]).max(0.0);
        cells.push(BasicCell {
            row: i,
            col: j,
            flow: f,
        });
        ra[i] -= f;
        rb[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if j == m - 1 {
            i += 1;
        } else if i == n - 1 {
            j += 1;
        } else if ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(cells.len(), n + m - 1);
    cells
}

/// Propagate duals over the basis tree: u[i] + v[j] = c[i, j] on basic cells.
fn compute_duals(
    cells: &[BasicCell],
    c: &Array2<f64>,
    n: usize,
    m: usize,
    u: &mut [f64],
    v: &mut [f64],
) -> Result<()> {
    let adj = adjacency(cells, n, m);
    let mut known = vec![false; n + m];
    let mut stack = vec![0usize];
    known[0] = true;
    u[0] = 0.0;
    let mut seen = 1usize;
    while let Some(node) = stack.pop() {
        for &(next, cell_idx) in &adj[node] {
            if known[next] {
                continue;
            }
            let cell = cells[cell_idx];
            if next >= n {
                v[next - n] = c[[cell.row, cell.col]] - u[cell.row];
            } else {
                u[next] = c[[cell.row, cell.col]] - v[cell.col];
            }
            known[next] = true;
            seen += 1;
            stack.push(next);
        }
    }
    if seen != n + m {
        return Err(Error::Numerical(
            "transport basis lost connectivity".into(),
        ));
    }
    Ok(())
}

fn adjacency(cells: &[BasicCell], n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n + m];
    for (idx, cell) in cells.iter().enumerate() {
        adj[cell.row].push((n + cell.col, idx));
        adj[n + cell.col].push((cell.row, idx));
    }
    adj
}

/// Cell indices along the unique tree path from `from` to `to`.
fn tree_path(cells: &[BasicCell], n: usize, m: usize, from: usize, to: usize) -> Result<Vec<usize>> {
    let adj = adjacency(cells, n, m);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + m];
    let mut visited = vec![false; n + m];
    visited[from] = true;
    let mut stack = vec![from];
    while let Some(node) = stack.pop() {
        if node == to {
            break;
        }
        for &(next, cell_idx) in &adj[node] {
            if !visited[next] {
                visited[next] = true;
                parent[next] = Some((node, cell_idx));
                stack.push(next);
            }
        }
    }
    if !visited[to] {
        return Err(Error::Numerical("transport basis lost connectivity".into()));
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let (prev, cell_idx) = parent[node].expect("walked off the tree path");
        path.push(cell_idx);
        node = prev;
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::GroundMetric;
    use ndarray::array;

    fn cm(entries: Array2<f64>) -> CostMatrix {
        CostMatrix::from_entries(entries, 1.0, GroundMetric::Euclidean).unwrap()
    }

    #[test]
    fn single_atom() {
        let plan = solve_exact(
            array![1.0].view(),
            array![1.0].view(),
            &cm(array![[3.5]]),
        )
        .unwrap();
        assert_eq!(plan.coupling[[0, 0]], 1.0);
        assert!((plan.objective - 3.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_marginals_force_the_plan() {
        let plan = solve_exact(
            array![1.0, 0.0].view(),
            array![0.0, 1.0].view(),
            &cm(array![[9.0, 4.0], [1.0, 2.0]]),
        )
        .unwrap();
        assert!((plan.coupling[[0, 1]] - 1.0).abs() < 1e-12);
        assert!((plan.objective - 4.0).abs() < 1e-12);
        assert!(plan.marginal_violation <= 1e-9);
    }

    #[test]
    fn two_by_two_prefers_diagonal() {
        let plan = solve_exact(
            array![0.5, 0.5].view(),
            array![0.5, 0.5].view(),
            &cm(array![[0.0, 1.0], [1.0, 0.0]]),
        )
        .unwrap();
        assert!(plan.objective.abs() < 1e-12);
        assert!((plan.coupling[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((plan.coupling[[1, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_simplex_inputs() {
        let err = solve_exact(
            array![0.6, 0.6].view(),
            array![0.5, 0.5].view(),
            &cm(array![[0.0, 1.0], [1.0, 0.0]]),
        )
        .unwrap_err();
        assert!(err.is_rejected_input());
    }

    #[test]
    fn objective_matches_frobenius_of_coupling() {
        let cost = cm(array![[0.2, 1.5, 0.7], [1.1, 0.1, 0.9]]);
        let plan = solve_exact(
            array![0.4, 0.6].view(),
            array![0.3, 0.3, 0.4].view(),
            &cost,
        )
        .unwrap();
        let recomputed = plan.recompute_objective(&cost);
        assert!((plan.objective - recomputed).abs() < 1e-12);
        assert!(plan.marginal_violation <= 1e-9);
    }
}
