//! Max-min RIS phase design.
//!
//! The primal problem maximizes the smallest targeted component
//! (`X_k`, `Y_k`) over unit-modulus `ω`. Its Lagrange dual is a convex
//! problem over `2K` multipliers on the probability simplex; the optimal
//! phases follow in closed form from the multipliers. Two solvers are
//! provided: [`solve_dual`] (spectral projected gradient, the reference) and
//! [`solve_kkt`] (damped Newton on the stationarity system, validated
//! against the reference and falling back to it when it cannot proceed).

mod dual;
mod kkt;
mod workspace;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::index::SpatialSymbol;
use crate::model::ChannelRealization;

pub use dual::solve_dual;
pub use kkt::solve_kkt;
pub use workspace::{build_workspace, DualWorkspace};

/// Stopping rules shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative duality gap (and relative objective change) tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive iterations below `tol` relative change before stopping.
    pub stall_window: usize,
    /// A stalled run still counts as converged if its relative gap is below
    /// this.
    pub accept_gap: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 10_000,
            stall_window: 10,
            accept_gap: 1e-6,
            newton_max_iter: 50,
        }
    }
}

/// Optimized phases together with the multipliers that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSolution {
    pub omega: Vec<Complex64>,
    pub lam: Vec<f64>,
    pub del: Vec<f64>,
    pub dual_value: f64,
    /// Smallest targeted component at `omega`.
    pub primal_min: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the Newton path gave up and the projected-gradient solver
    /// produced the result.
    pub fallback: bool,
    /// Elements whose Lagrangian numerator vanished at the optimal
    /// multipliers; their phases are not determined by the dual.
    pub degenerate_elements: usize,
}

impl PhaseSolution {
    /// `[λ; δ]`.
    pub fn multipliers(&self) -> Vec<f64> {
        self.lam.iter().chain(&self.del).copied().collect()
    }

    /// `|dual − primal| / dual`.
    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.dual_value, self.primal_min)
    }

    pub(crate) fn from_multipliers(
        ws: &DualWorkspace,
        mu: Vec<f64>,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let ev = ws.evaluate(&mu);
        let omega = ws.omega(&mu);
        let primal_min = ev.grad.iter().copied().fold(f64::INFINITY, f64::min);
        let mut lam = mu;
        let del = lam.split_off(ws.k_lambda());
        PhaseSolution {
            omega,
            lam,
            del,
            dual_value: ev.value,
            primal_min,
            iterations,
            converged,
            fallback: false,
            degenerate_elements: 0,
        }
    }

    /// Dual quantities from `mu`, primal value from an explicit `omega`.
    pub(crate) fn with_omega(
        ws: &DualWorkspace,
        mu: Vec<f64>,
        omega: Vec<Complex64>,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let dual_value = ws.value(&mu);
        let primal_min = ws.row_values(&omega).iter().copied().fold(f64::INFINITY, f64::min);
        let mut lam = mu;
        let del = lam.split_off(ws.k_lambda());
        PhaseSolution {
            omega,
            lam,
            del,
            dual_value,
            primal_min,
            iterations,
            converged,
            fallback: false,
            degenerate_elements: 0,
        }
    }
}

pub(crate) fn relative_gap(dual: f64, primal: f64) -> f64 {
    let diff = (dual - primal).abs();
    if dual.abs() > 0.0 {
        diff / dual.abs()
    } else {
        diff
    }
}

/// Targeted components `X_k` and `Y_k` at a given `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalValues {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PrimalValues {
    pub fn min(&self) -> f64 {
        self.x.iter().chain(&self.y).copied().fold(f64::INFINITY, f64::min)
    }
}

fn split_mu<'a>(lam: &'a [f64], del: &'a [f64], ws: &DualWorkspace) -> Result<Vec<f64>> {
    if lam.len() != ws.k_lambda() || del.len() != ws.k_delta() {
        return Err(invalid(format!(
            "expected {} λ and {} δ multipliers, got {} and {}",
            ws.k_lambda(),
            ws.k_delta(),
            lam.len(),
            del.len()
        )));
    }
    Ok(lam.iter().chain(del).copied().collect())
}

/// Dual objective `Σ_i β_i √((Σλ A + Σδ B)² + (Σλ C + Σδ D)²)`.
pub fn dual_objective(lam: &[f64], del: &[f64], ws: &DualWorkspace) -> Result<f64> {
    let mu = split_mu(lam, del, ws)?;
    Ok(ws.value(&mu))
}

/// Closed-form phases `ω_i = (P_i + jQ_i) / |P_i + jQ_i|`, or `1` when both
/// numerators vanish.
pub fn recover_omega(lam: &[f64], del: &[f64], ws: &DualWorkspace) -> Result<Vec<Complex64>> {
    let mu = split_mu(lam, del, ws)?;
    Ok(ws.omega(&mu))
}

/// Evaluates `X_k` and `Y_k` directly from the channel.
pub fn primal_values(
    omega: &[Complex64],
    ch: &ChannelRealization,
    sym: &SpatialSymbol,
) -> Result<PrimalValues> {
    if omega.len() != ch.n_ris() {
        return Err(invalid("omega length differs from the RIS size"));
    }
    sym.validate(ch.n_rx())?;
    let beta = ch.beta();
    let x = sym
        .set_i
        .iter()
        .zip(&sym.pol_i)
        .map(|(&m, &pol)| {
            let s: f64 = ch
                .h_row(m)
                .iter()
                .zip(omega)
                .zip(beta)
                .map(|((h, w), b)| b * (h.re * w.re - h.im * w.im))
                .sum();
            pol as f64 * s
        })
        .collect();
    let y = sym
        .set_q
        .iter()
        .zip(&sym.pol_q)
        .map(|(&n, &pol)| {
            let s: f64 = ch
                .h_row(n)
                .iter()
                .zip(omega)
                .zip(beta)
                .map(|((h, w), b)| b * (h.re * w.im + h.im * w.re))
                .sum();
            pol as f64 * s
        })
        .collect();
    Ok(PrimalValues { x, y })
}

/// Fixes every multiplier at its ensemble mean `1 / (2K)`.
pub fn suboptimal_solution(ws: &DualWorkspace) -> PhaseSolution {
    let m = ws.rows();
    PhaseSolution::from_multipliers(ws, vec![1.0 / m as f64; m], 0, true)
}

/// Uniform starting point on the simplex.
pub fn uniform_start(ws: &DualWorkspace) -> Vec<f64> {
    let m = ws.rows();
    vec![1.0 / m as f64; m]
}

/// Multicast phase design: maximize `min_l Re(G_l)` over all receive
/// antennas. Solved on the Newton path with the projected-gradient solver
/// as fallback.
pub fn multicast_optimize(ch: &ChannelRealization, opts: &SolverOptions) -> PhaseSolution {
    let ws = DualWorkspace::multicast(ch);
    let init = uniform_start(&ws);
    solve_kkt(&ws, &init, opts)
}

/// `Re(G_l)` for every antenna.
pub fn multicast_values(omega: &[Complex64], ch: &ChannelRealization) -> Result<Vec<f64>> {
    let g = crate::model::effective_coefficients(ch, omega)?;
    Ok(g.g.iter().map(|z| z.re).collect())
}

/// Euclidean projection onto `{v ≥ 0, Σ v = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // huge inputs lose the simplex to cancellation in `x − θ`
    let sum: f64 = out.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        let top = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
        out.iter_mut().enumerate().for_each(|(j, x)| *x = if j == top { 1.0 } else { 0.0 });
    } else if (sum - 1.0).abs() > 1e-12 {
        out.iter_mut().for_each(|x| *x /= sum);
    }
    out
}
