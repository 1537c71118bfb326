//! Newton path on the stationarity system of the dual.
//!
//! For an interior optimum every partial derivative of the dual equals the
//! same constant. Subtracting the first from the others gives `M − 1`
//! equations, closed by `Σ μ = 1`:
//!
//! ```text
//! F_j(μ) = ∂g/∂μ_0 − ∂g/∂μ_j = 0,   j = 1..M−1
//! F_M(μ) = Σ_j μ_j − 1       = 0
//! ```
//!
//! For GRQSM the rows are ordered `λ_1..λ_K, δ_1..δ_K`, so the differences
//! against `λ_1` pair the `(A_1, C_1)` coefficients with `(A_k, C_k)` for the
//! λ rows and with `(B_k, D_k)` for the δ rows.

use nalgebra::{DMatrix, DVector};

use super::dual::solve_dual_from;
use super::project_simplex;
use super::workspace::DualWorkspace;
use super::{relative_gap, PhaseSolution, SolverOptions};

fn residual(grad: &[f64], mu: &[f64]) -> Vec<f64> {
    let m = mu.len();
    let mut f = Vec::with_capacity(m);
    for j in 1..m {
        f.push(grad[0] - grad[j]);
    }
    f.push(mu.iter().sum::<f64>() - 1.0);
    f
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

enum Outcome {
    Converged(Vec<f64>, usize),
    Failed,
}

fn newton(ws: &DualWorkspace, init: &[f64], opts: &SolverOptions) -> Outcome {
    let m = ws.rows();
    if init.iter().any(|x| !(*x >= 0.0)) || init.len() != m {
        return Outcome::Failed;
    }
    let mut mu = init.to_vec();
    let (mut ev, mut hess) = ws.evaluate_with_hessian(&mu);
    let mut f = residual(&ev.grad, &mu);
    for iter in 0..=opts.newton_max_iter {
        let gap_ok = relative_gap(ev.value, min_of(&ev.grad)) <= opts.tol;
        let feasible = (mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        if gap_ok && feasible {
            return Outcome::Converged(mu, iter);
        }
        if iter == opts.newton_max_iter {
            break;
        }

        let jac = DMatrix::from_fn(m, m, |r, c| {
            if r + 1 < m {
                hess[c] - hess[(r + 1) * m + c]
            } else {
                1.0
            }
        });
        let rhs = DVector::from_iterator(m, f.iter().map(|x| -x));
        let Some(step) = jac.lu().solve(&rhs) else {
            return Outcome::Failed;
        };
        if step.iter().any(|x| !x.is_finite()) {
            return Outcome::Failed;
        }
        if mu.iter().zip(step.iter()).any(|(x, d)| x + d < 0.0) {
            return Outcome::Failed;
        }

        let f_norm = norm(&f);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = mu.iter().zip(step.iter()).map(|(x, d)| x + t * d).collect();
            let (tev, thess) = ws.evaluate_with_hessian(&trial);
            let tf = residual(&tev.grad, &trial);
            if norm(&tf) <= (1.0 - 1e-4 * t) * f_norm || norm(&tf) == 0.0 {
                mu = trial;
                ev = tev;
                hess = thess;
                f = tf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Outcome::Failed;
        }
    }
    Outcome::Failed
}

/// Solves the stationarity system by damped Newton from `init`.
///
/// Falls back to the projected-gradient solver (and sets `fallback`) when
/// the Jacobian is singular, a Newton step leaves the non-negative orthant,
/// or the iteration does not close the duality gap.
pub fn solve_kkt(ws: &DualWorkspace, init: &[f64], opts: &SolverOptions) -> PhaseSolution {
    match newton(ws, init, opts) {
        Outcome::Converged(mu, iterations) => {
            // re-normalise the last rounding error onto the simplex
            let sum: f64 = mu.iter().sum();
            let mu: Vec<f64> = mu.iter().map(|x| x / sum).collect();
            PhaseSolution::from_multipliers(ws, mu, iterations, true)
        }
        Outcome::Failed => {
            let start = project_simplex(init);
            let mut sol = solve_dual_from(ws, &start, opts);
            sol.fallback = true;
            sol
        }
    }
}
