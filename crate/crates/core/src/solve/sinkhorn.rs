//! Entropic optimal transport via Sinkhorn matrix scaling.
//!
//! The objective is `min <gamma, C>_F - eps * H(gamma)` over U(a, b) with
//! `H(gamma) = -sum gamma_ij (log gamma_ij - 1)`. The reported plan objective
//! is the plain transport cost of the returned coupling; the entropy term is
//! never folded in.
//!
//! Scaling iterations run in the ordinary domain while the kernel
//! `exp(-C/eps)` is representable; once any scaling factor exceeds 1e300 or
//! underflows, the solve restarts in the log domain (dual potentials with
//! log-sum-exp updates). Small target epsilons get two accelerations that
//! leave the fixed point untouched: the regularization anneals downward to
//! warm-start the potentials, and the final polish takes damped Newton steps
//! on the dual once plain iterations are close.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::measure::validate_simplex;
use crate::plan::TransportPlan;

/// Scaling factors beyond this trigger the log-domain fallback.
const SCALING_OVERFLOW: f64 = 1e300;
/// Kernel exponent range where plain scaling is safe.
const PLAIN_DOMAIN_RATIO: f64 = 200.0;
/// Newton polish is worthwhile below this node count.
const NEWTON_NODE_LIMIT: usize = 2_000;

#[derive(Debug, Clone, Copy)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    /// Stop once the L1 marginal violation drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-1,
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

/// Solve entropy-regularized transport between `a` and `b` under `cost`.
///
/// Returns a plan with `converged = false` when `max_iter` ran out before the
/// marginal tolerance was met. Numerical breakdown in both domains is an error.
pub fn solve_sinkhorn(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: &CostMatrix,
    opts: SinkhornOptions,
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
    if !(opts.epsilon > 0.0) || !opts.epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sinkhorn regularization must be positive, got {}",
            opts.epsilon
        )));
    }

    let max_c = cost.max_entry();
    if max_c / opts.epsilon <= PLAIN_DOMAIN_RATIO {
        // Give the plain domain half the budget; a stall there hands its
        // potentials to the stabilized path instead of giving up.
        match plain_scaling(a, b, cost, opts, opts.max_iter / 2) {
            Ok(plan) => return Ok(plan),
            Err(ScalingBreakdown { iterations, warm }) => {
                return log_domain(a, b, cost, opts, iterations, warm);
            }
        }
    }
    log_domain(a, b, cost, opts, 0, None)
}

struct ScalingBreakdown {
    iterations: usize,
    /// Log-domain potentials carried over from a stalled-but-stable solve.
    warm: Option<(Vec<f64>, Vec<f64>)>,
}

fn plain_scaling(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: &CostMatrix,
    opts: SinkhornOptions,
    budget: usize,
) -> std::result::Result<TransportPlan, ScalingBreakdown> {
    let n = a.len();
    let m = b.len();
    let eps = opts.epsilon;
    let kernel = cost.entries().mapv(|c| (-c / eps).exp());
    let mut u = Array1::ones(n);
    let mut v = Array1::ones(m);

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < budget {
        let kv = kernel.dot(&v);
        for i in 0..n {
            u[i] = if a[i] == 0.0 { 0.0 } else { a[i] / kv[i] };
        }
        let ktu = kernel.t().dot(&u);
        for j in 0..m {
            v[j] = if b[j] == 0.0 { 0.0 } else { b[j] / ktu[j] };
        }
        iterations += 1;

        let unstable = u
            .iter()
            .chain(v.iter())
            .any(|x| !x.is_finite() || x.abs() > SCALING_OVERFLOW);
        let underflow = (0..n).any(|i| a[i] > 0.0 && u[i] == 0.0)
            || (0..m).any(|j| b[j] > 0.0 && v[j] == 0.0);
        if unstable || underflow {
            return Err(ScalingBreakdown {
                iterations,
                warm: None,
            });
        }

        // Column sums are exact right after the v update; measure rows.
        let kv = kernel.dot(&v);
        let viol: f64 = (0..n).map(|i| (u[i] * kv[i] - a[i]).abs()).sum();
        if viol <= opts.tol * 0.9 {
            converged = true;
            break;
        }
    }

    if !converged {
        let f = u
            .iter()
            .map(|&x| if x > 0.0 { eps * x.ln() } else { f64::NEG_INFINITY })
            .collect();
        let g = v
            .iter()
            .map(|&x| if x > 0.0 { eps * x.ln() } else { f64::NEG_INFINITY })
            .collect();
        return Err(ScalingBreakdown {
            iterations,
            warm: Some((f, g)),
        });
    }

    let mut coupling = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            coupling[[i, j]] = u[i] * kernel[[i, j]] * v[j];
        }
    }
    if coupling.iter().any(|x| !x.is_finite()) {
        return Err(ScalingBreakdown {
            iterations,
            warm: None,
        });
    }
    round_to_polytope(&mut coupling, a, b);
    Ok(TransportPlan::from_coupling(
        coupling,
        a.to_owned(),
        b.to_owned(),
        cost,
        iterations,
        converged,
    ))
}

/// Project an almost-feasible coupling onto U(a, b): scale rows and columns
/// down to their marginals, then patch the missing mass with a rank-1
/// correction. Feasibility afterwards is exact up to rounding, which keeps
/// the transport cost from undershooting the unregularized optimum.
fn round_to_polytope(coupling: &mut Array2<f64>, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) {
    let n = a.len();
    let m = b.len();
    for i in 0..n {
        let r: f64 = coupling.row(i).sum();
        if r > a[i] && r > 0.0 {
            let scale = a[i] / r;
            for j in 0..m {
                coupling[[i, j]] *= scale;
            }
        }
    }
    for j in 0..m {
        let c: f64 = coupling.column(j).sum();
        if c > b[j] && c > 0.0 {
            let scale = b[j] / c;
            for i in 0..n {
                coupling[[i, j]] *= scale;
            }
        }
    }
    let mut err_r = vec![0.0f64; n];
    let mut err_c = vec![0.0f64; m];
    let mut missing = 0.0f64;
    for i in 0..n {
        err_r[i] = (a[i] - coupling.row(i).sum()).max(0.0);
        missing += err_r[i];
    }
    for j in 0..m {
        err_c[j] = (b[j] - coupling.column(j).sum()).max(0.0);
    }
    if missing > 0.0 {
        let col_total: f64 = err_c.iter().sum();
        if col_total > 0.0 {
            for i in 0..n {
                if err_r[i] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    coupling[[i, j]] += err_r[i] * err_c[j] / col_total;
                }
            }
        }
    }
}

struct LogState {
    f: Vec<f64>,
    g: Vec<f64>,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
}

fn log_domain(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: &CostMatrix,
    opts: SinkhornOptions,
    spent: usize,
    warm: Option<(Vec<f64>, Vec<f64>)>,
) -> Result<TransportPlan> {
    let n = a.len();
    let m = b.len();
    let c = cost.entries();
    let eps = opts.epsilon;

    let log_of = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let warmed = warm.is_some();
    let (f0, g0) = warm.unwrap_or_else(|| {
        (
            a.iter().map(|&x| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }).collect(),
            b.iter().map(|&x| if x > 0.0 { 0.0 } else { f64::NEG_INFINITY }).collect(),
        )
    });
    let mut state = LogState {
        f: f0,
        g: g0,
        log_a: a.iter().map(|&x| log_of(x)).collect(),
        log_b: b.iter().map(|&x| log_of(x)).collect(),
    };

    let mut iterations = spent;
    let budget = opts.max_iter;

    // Annealing: walk epsilon down toward the target to warm-start the
    // potentials; convergence is only measured at the target epsilon.
    // Pointless when the plain domain already brought us close.
    let max_c = cost.max_entry();
    if !warmed && max_c > 0.0 && eps < max_c / 10.0 {
        let mut eps_cur = max_c / 10.0;
        while eps_cur > eps && iterations + 10 <= budget / 2 {
            for _ in 0..10 {
                plain_log_iteration(&mut state, c, eps_cur);
                iterations += 1;
            }
            eps_cur *= 0.7;
        }
    }

    let newton_ok = n + m <= NEWTON_NODE_LIMIT;
    let mut plain_done = 0usize;
    let mut converged = false;
    loop {
        let viol = full_violation(&state, c, eps, a, b);
        if viol <= opts.tol * 0.9 {
            converged = true;
            break;
        }
        if iterations >= budget {
            break;
        }
        if newton_ok && plain_done >= 10 && newton_step(&mut state, c, eps, a, b, viol) {
            iterations += 1;
            continue;
        }
        plain_log_iteration(&mut state, c, eps);
        iterations += 1;
        plain_done += 1;
    }

    let mut coupling = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            coupling[[i, j]] = plan_entry(&state, c, eps, i, j);
        }
    }
    if coupling.iter().any(|x| !x.is_finite()) {
        let plan_viol =
            crate::plan::l1_marginal_violation(&coupling, &a.to_owned(), &b.to_owned());
        return Err(Error::SinkhornFailed {
            iterations,
            violation: plan_viol,
        });
    }
    round_to_polytope(&mut coupling, a, b);
    Ok(TransportPlan::from_coupling(
        coupling,
        a.to_owned(),
        b.to_owned(),
        cost,
        iterations,
        converged,
    ))
}

fn plan_entry(state: &LogState, c: &Array2<f64>, eps: f64, i: usize, j: usize) -> f64 {
    if state.f[i] == f64::NEG_INFINITY || state.g[j] == f64::NEG_INFINITY {
        0.0
    } else {
        ((state.f[i] + state.g[j] - c[[i, j]]) / eps).exp()
    }
}

/// One balanced Sinkhorn iteration in the log domain (f sweep, then g sweep).
fn plain_log_iteration(state: &mut LogState, c: &Array2<f64>, eps: f64) {
    let n = state.f.len();
    let m = state.g.len();
    let LogState { f, g, log_a, log_b } = state;
    for i in 0..n {
        if log_a[i] == f64::NEG_INFINITY {
            continue;
        }
        let lse = logsumexp((0..m).map(|j| {
            if g[j] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                (g[j] - c[[i, j]]) / eps
            }
        }));
        f[i] = eps * (log_a[i] - lse);
    }
    for j in 0..m {
        if log_b[j] == f64::NEG_INFINITY {
            continue;
        }
        let lse = logsumexp((0..n).map(|i| {
            if f[i] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                (f[i] - c[[i, j]]) / eps
            }
        }));
        g[j] = eps * (log_b[j] - lse);
    }
}

/// L1 deviation of both marginals of the current primal iterate.
fn full_violation(
    state: &LogState,
    c: &Array2<f64>,
    eps: f64,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> f64 {
    let n = a.len();
    let m = b.len();
    let mut rows = vec![0.0f64; n];
    let mut cols = vec![0.0f64; m];
    for i in 0..n {
        for j in 0..m {
            let p = plan_entry(state, c, eps, i, j);
            rows[i] += p;
            cols[j] += p;
        }
    }
    let mut viol = 0.0;
    for i in 0..n {
        viol += (rows[i] - a[i]).abs();
    }
    for j in 0..m {
        viol += (cols[j] - b[j]).abs();
    }
    if viol.is_finite() {
        viol
    } else {
        f64::INFINITY
    }
}

/// One damped Newton step on the concave dual. Returns false (leaving the
/// potentials untouched) when the step cannot be built or does not improve
/// the marginal violation.
fn newton_step(
    state: &mut LogState,
    c: &Array2<f64>,
    eps: f64,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    current_viol: f64,
) -> bool {
    let n = a.len();
    let m = b.len();
    let act_r: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let act_c: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let na = act_r.len();
    let nc = act_c.len();
    if na == 0 || nc < 2 {
        return false;
    }

    // Primal entries and marginals on the active support.
    let mut p = Array2::zeros((na, nc));
    let mut rows = vec![0.0f64; na];
    let mut cols = vec![0.0f64; nc];
    for (ri, &i) in act_r.iter().enumerate() {
        for (cj, &j) in act_c.iter().enumerate() {
            let v = plan_entry(state, c, eps, i, j);
            if !v.is_finite() {
                return false;
            }
            p[[ri, cj]] = v;
            rows[ri] += v;
            cols[cj] += v;
        }
    }

    // Gradient of the dual; the last active column is pinned to kill the
    // constant-shift null direction.
    let dim = na + nc - 1;
    let mut grad = DVector::zeros(dim);
    for ri in 0..na {
        grad[ri] = a[act_r[ri]] - rows[ri];
    }
    for cj in 0..nc - 1 {
        grad[na + cj] = b[act_c[cj]] - cols[cj];
    }

    let mut h = DMatrix::zeros(dim, dim);
    let mut max_diag = 0.0f64;
    for ri in 0..na {
        h[(ri, ri)] = rows[ri];
        max_diag = max_diag.max(rows[ri]);
        for cj in 0..nc - 1 {
            h[(ri, na + cj)] = p[[ri, cj]];
            h[(na + cj, ri)] = p[[ri, cj]];
        }
    }
    for cj in 0..nc - 1 {
        h[(na + cj, na + cj)] = cols[cj];
        max_diag = max_diag.max(cols[cj]);
    }
    // At small epsilon the plan is near a vertex and the support graph
    // nearly disconnects; a ridge keeps the system solvable there.
    let ridge = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
    for d in 0..dim {
        h[(d, d)] += ridge;
    }

    let Some(dir) = h.lu().solve(&grad) else {
        return false;
    };

    // `eps * dir` enters exp((f + g - C) / eps) as a bare exponent shift, so
    // cap the move in exponent units before damping.
    let dir_max = dir.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if !dir_max.is_finite() || dir_max == 0.0 {
        return false;
    }
    let cap = if dir_max > 20.0 { 20.0 / dir_max } else { 1.0 };

    for halving in 0..5 {
        let step = cap * 0.5f64.powi(halving);
        let mut trial_f = state.f.clone();
        let mut trial_g = state.g.clone();
        for ri in 0..na {
            trial_f[act_r[ri]] += eps * step * dir[ri];
        }
        for cj in 0..nc - 1 {
            trial_g[act_c[cj]] += eps * step * dir[na + cj];
        }
        if trial_f.iter().chain(trial_g.iter()).any(|x| x.is_nan()) {
            continue;
        }
        let trial = LogState {
            f: trial_f,
            g: trial_g,
            log_a: state.log_a.clone(),
            log_b: state.log_b.clone(),
        };
        let viol = full_violation(&trial, c, eps, a, b);
        if viol < current_viol {
            state.f = trial.f;
            state.g = trial.g;
            return true;
        }
    }
    false
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}
