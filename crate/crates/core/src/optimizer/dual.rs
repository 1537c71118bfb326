//! Reference solver: spectral projected gradient on the simplex.
//!
//! Barzilai–Borwein step lengths with a non-monotone Armijo backtracking
//! search along the projected direction. Every iterate is feasible, so the
//! duality gap `g(μ) − min_j X_j(ω(μ))` is a certificate at each step.
//!
//! When the minimizer sits where some `P_i + jQ_i` vanishes the dual is not
//! differentiable there and the unit-modulus gap cannot be closed by the
//! multipliers alone. The solver then switches to a smoothed objective
//! (`|z| → √(|z|² + ε²)`) with decreasing `ε`, whose gradient is the row
//! vector of a disk-relaxed primal point and therefore still certifies the
//! dual value. The phases of the degenerate elements are finally chosen by
//! exact one-dimensional max-min updates.

use num_complex::Complex64;

use super::workspace::{unit, DualWorkspace, Probe};
use super::{project_simplex, relative_gap, PhaseSolution, SolverOptions};

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const GRADIENT_BUDGET: usize = 500;
const SMOOTHING_STAGES: usize = 10;
const NEWTON_STEPS: usize = 40;
const POLISH_STEPS: usize = 3;
const KINK_TOL_FACTOR: f64 = 1e-3;
const KINK_NEWTON_STEPS: usize = 30;
/// Elements whose numerator is below this fraction of the mean modulus are
/// treated as degenerate at the final multipliers.
const DEGENERATE: f64 = 1e-3;
const REPAIR_SWEEPS: usize = 4;
const PHASE_SWEEPS: usize = 2;
const SCAN_POINTS: usize = 16;
const GOLDEN_STEPS: usize = 40;

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the dual objective over the simplex from the uniform point.
pub fn solve_dual(ws: &DualWorkspace, opts: &SolverOptions) -> PhaseSolution {
    let init = super::uniform_start(ws);
    solve_dual_from(ws, &init, opts)
}

/// Best points seen across all stages.
struct Tracker {
    /// Smallest certified upper bound `g(μ) − (g(μ) − min_j grad_j)`, i.e. the
    /// dual value with the lowest certificate gap.
    cert_gap: f64,
    cert_mu: Vec<f64>,
    /// Smoothing level at which `cert_mu` was found.
    cert_eps: f64,
    /// Largest unit-modulus primal value and the multipliers producing it.
    primal: f64,
    primal_mu: Vec<f64>,
}

impl Tracker {
    fn observe(&mut self, mu: &[f64], pr: &Probe, eps: f64) {
        let gap = pr.value - min_of(&pr.grad);
        if gap < self.cert_gap {
            self.cert_gap = gap;
            self.cert_mu = mu.to_vec();
            self.cert_eps = eps;
        }
        let primal = min_of(&pr.unit_rows);
        if primal > self.primal {
            self.primal = primal;
            self.primal_mu = mu.to_vec();
        }
    }
}

enum StageEnd {
    Certified,
    Stopped,
}

/// One projected-gradient run at a fixed smoothing level.
fn stage(
    ws: &DualWorkspace,
    mu: &mut Vec<f64>,
    eps: f64,
    opts: &SolverOptions,
    iterations: &mut usize,
    tracker: &mut Tracker,
) -> StageEnd {
    let m = ws.rows();
    let mut pr = ws.probe(mu, eps);
    tracker.observe(mu, &pr, eps);

    let mean = pr.grad.iter().sum::<f64>() / m as f64;
    let spread = pr.grad.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max);
    if relative_gap(pr.value, min_of(&pr.grad)) <= opts.tol {
        return StageEnd::Certified;
    }
    if spread == 0.0 || m == 1 {
        return StageEnd::Stopped;
    }
    let alpha0 = 1.0 / spread;
    let (alpha_min, alpha_max) = (alpha0 * 1e-12, alpha0 * 1e12);
    let mut alpha = alpha0;
    let mut history = [pr.smooth_value; HISTORY];
    let mut stall = 0usize;
    let mut local = 0usize;

    // slow progress here means a kink; the smoothed path takes over
    while *iterations < opts.max_iter && local < GRADIENT_BUDGET {
        *iterations += 1;
        local += 1;

        let target: Vec<f64> = mu.iter().zip(&pr.grad).map(|(x, g)| x - alpha * g).collect();
        let dir: Vec<f64> = project_simplex(&target).iter().zip(mu.iter()).map(|(p, x)| p - x).collect();
        let slope = dot(&pr.grad, &dir);
        if !(slope < 0.0) {
            return StageEnd::Stopped;
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = mu.iter().zip(&dir).map(|(x, d)| (x + t * d).max(0.0)).collect();
            let tp = ws.probe(&trial, eps);
            if tp.smooth_value <= f_ref + ARMIJO * t * slope {
                accepted = Some((trial, tp));
                break;
            }
            // safeguarded quadratic interpolation
            let denom = 2.0 * (tp.smooth_value - pr.smooth_value - t * slope);
            let t_quad = if denom > 0.0 { -slope * t * t / denom } else { 0.5 * t };
            t = t_quad.clamp(0.1 * t, 0.5 * t);
        }
        let Some((next, np)) = accepted else {
            return StageEnd::Stopped;
        };

        let s: Vec<f64> = next.iter().zip(mu.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = np.grad.iter().zip(&pr.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(alpha_min, alpha_max)
        } else {
            alpha_max
        };

        let change = (pr.smooth_value - np.smooth_value).abs();
        if change <= opts.tol * np.smooth_value.abs() {
            stall += 1;
        } else {
            stall = 0;
        }
        history[local % HISTORY] = np.smooth_value;
        *mu = next;
        pr = np;
        tracker.observe(mu, &pr, eps);
        if relative_gap(pr.value, min_of(&pr.grad)) <= opts.tol {
            return StageEnd::Certified;
        }
        if stall >= opts.stall_window {
            return StageEnd::Stopped;
        }
    }
    StageEnd::Stopped
}

/// Projected Newton on the smoothed objective at a fixed `eps`. Each step
/// minimizes the local quadratic model over the simplex exactly.
fn newton_stage(
    ws: &DualWorkspace,
    mu: &mut Vec<f64>,
    eps: f64,
    opts: &SolverOptions,
    iterations: &mut usize,
    tracker: &mut Tracker,
) -> StageEnd {
    // the minimum is sharp at a kink, so the multipliers are only as
    // accurate as the certificate; aim well below the requested tolerance
    let target = KINK_TOL_FACTOR * opts.tol;
    for _ in 0..NEWTON_STEPS {
        if *iterations >= opts.max_iter {
            break;
        }
        let (pr, hess) = ws.probe_with_hessian(mu, eps);
        tracker.observe(mu, &pr, eps);
        if relative_gap(pr.value, min_of(&pr.grad)) <= target {
            return StageEnd::Certified;
        }
        *iterations += 1;
        let target = simplex_qp(mu, &pr.grad, &hess);
        let dir: Vec<f64> = target.iter().zip(mu.iter()).map(|(t, x)| t - x).collect();
        let decrease = -dot(&pr.grad, &dir);
        if !(decrease > 0.0) {
            break;
        }
        let res = stationarity(mu, &pr.grad);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = mu.iter().zip(&dir).map(|(x, d)| (x + t * d).max(0.0)).collect();
            let tp = ws.probe(&trial, eps);
            // near the minimizer the decrease drowns in rounding; a full step
            // that shrinks the stationarity residual is accepted instead
            let sufficient = tp.smooth_value <= pr.smooth_value - ARMIJO * t * decrease;
            let closer = t == 1.0 && stationarity(&trial, &tp.grad) < 0.5 * res;
            if sufficient || closer {
                *mu = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let pr = ws.probe(mu, eps);
    tracker.observe(mu, &pr, eps);
    if relative_gap(pr.value, min_of(&pr.grad)) <= target {
        StageEnd::Certified
    } else {
        StageEnd::Stopped
    }
}

/// Newton on the optimality system of a kink minimizer: the numerators of
/// the `weak` elements vanish and their subgradient contributions
/// `β_i (p_i u_i^R + q_i u_i^I)` with `|u_i| ≤ 1` balance the smooth part.
/// Unknowns are the support multipliers, `u_i` and the common row value.
/// Returns the multipliers only if they certify a smaller gap than `gap`.
fn kink_newton(ws: &DualWorkspace, mu0: &[f64], weak: &[usize], eps: f64, gap: f64) -> Option<Vec<f64>> {
    let m = ws.rows();
    let support: Vec<usize> = (0..m).filter(|&j| mu0[j] > 1e-12).collect();
    let smooth = ws.without(weak);
    let na = support.len();
    let nk = 2 * weak.len();
    let n = na + nk + 1;

    let mut mu = mu0.to_vec();
    let mut u: Vec<f64> = Vec::with_capacity(nk);
    for &i in weak {
        let (p, q) = ws.element(i);
        let (pp, qq) = (dot(p, &mu), dot(q, &mu));
        let s = (pp * pp + qq * qq + eps * eps).sqrt().max(f64::MIN_POSITIVE);
        u.push(pp / s);
        u.push(qq / s);
    }
    let relaxed_rows = |mu: &[f64], u: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        let (ev, hess) = smooth.evaluate_with_hessian(mu);
        let mut rows = ev.grad;
        for (k, &i) in weak.iter().enumerate() {
            let (p, q) = ws.element(i);
            let b = ws.beta()[i];
            for j in 0..m {
                rows[j] += b * (p[j] * u[2 * k] + q[j] * u[2 * k + 1]);
            }
        }
        (ev.value, rows, hess)
    };
    let mut nu = {
        let (_, rows, _) = relaxed_rows(&mu, &u);
        support.iter().map(|&j| mu[j] * rows[j]).sum::<f64>()
    };

    for _ in 0..KINK_NEWTON_STEPS {
        let (_, rows, hess) = relaxed_rows(&mu, &u);
        let mut f = nalgebra::DVector::zeros(n);
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for (r, &j) in support.iter().enumerate() {
            f[r] = rows[j] - nu;
            for (c, &l) in support.iter().enumerate() {
                jac[(r, c)] = hess[j * m + l];
            }
            jac[(r, n - 1)] = -1.0;
            jac[(n - 1, r)] = 1.0;
        }
        f[n - 1] = support.iter().map(|&j| mu[j]).sum::<f64>() - 1.0;
        for (k, &i) in weak.iter().enumerate() {
            let (p, q) = ws.element(i);
            let b = ws.beta()[i];
            f[na + 2 * k] = b * dot(p, &mu);
            f[na + 2 * k + 1] = b * dot(q, &mu);
            for (r, &j) in support.iter().enumerate() {
                jac[(r, na + 2 * k)] = b * p[j];
                jac[(r, na + 2 * k + 1)] = b * q[j];
                jac[(na + 2 * k, r)] = b * p[j];
                jac[(na + 2 * k + 1, r)] = b * q[j];
            }
        }
        let size = f.amax();
        if size <= 1e-15 * nu.abs().max(1.0) {
            break;
        }
        let step = jac.lu().solve(&(-f))?;
        for (r, &j) in support.iter().enumerate() {
            mu[j] += step[r];
        }
        for k in 0..nk {
            u[k] += step[na + k];
        }
        nu += step[n - 1];
        if mu.iter().any(|x| !x.is_finite()) {
            return None;
        }
    }

    if mu.iter().any(|x| *x < 0.0) {
        return None;
    }
    for k in 0..weak.len() {
        if u[2 * k].hypot(u[2 * k + 1]) > 1.0 + 1e-9 {
            return None;
        }
    }
    let (_, rows, _) = relaxed_rows(&mu, &u);
    let cert = ws.value(&mu) - min_of(&rows);
    (cert < gap).then_some(mu)
}

/// A few exact Newton steps at a smooth certified point, kept only while
/// they shrink the duality gap.
fn polish(ws: &DualWorkspace, mu: &mut Vec<f64>) {
    let gap = |pr: &Probe| pr.value - min_of(&pr.grad);
    let (mut pr, mut hess) = ws.probe_with_hessian(mu, 0.0);
    for _ in 0..POLISH_STEPS {
        let trial = simplex_qp(mu, &pr.grad, &hess);
        let (tp, th) = ws.probe_with_hessian(&trial, 0.0);
        if !(gap(&tp) < gap(&pr)) {
            break;
        }
        *mu = trial;
        pr = tp;
        hess = th;
    }
}

/// Minimizes `gᵀ(x − μ) + ½ (x − μ)ᵀ H (x − μ)` over the simplex by a
/// primal active-set method started at the feasible point `μ`.
fn simplex_qp(mu: &[f64], g: &[f64], hess: &[f64]) -> Vec<f64> {
    let m = mu.len();
    let trace: f64 = (0..m).map(|j| hess[j * m + j]).sum();
    let ridge = 1e-13 * trace.max(f64::MIN_POSITIVE);
    // objective gradient at x: g + H (x − μ)
    let grad_at = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|j| g[j] + (0..m).map(|l| hess[j * m + l] * (x[l] - mu[l])).sum::<f64>())
            .collect()
    };
    let mut x = mu.to_vec();
    let mut fixed: Vec<bool> = x.iter().map(|v| *v <= 0.0).collect();
    for _ in 0..4 * m + 10 {
        let free: Vec<usize> = (0..m).filter(|&j| !fixed[j]).collect();
        let nf = free.len();
        let gx = grad_at(&x);
        // step p on the free set: [H_FF 1; 1ᵀ 0] [p; ν] = [−g_F; 0]
        let mut kkt = nalgebra::DMatrix::zeros(nf + 1, nf + 1);
        let mut rhs = nalgebra::DVector::zeros(nf + 1);
        for (r, &j) in free.iter().enumerate() {
            for (c, &l) in free.iter().enumerate() {
                kkt[(r, c)] = hess[j * m + l];
            }
            kkt[(r, r)] += ridge;
            kkt[(r, nf)] = 1.0;
            kkt[(nf, r)] = 1.0;
            rhs[r] = -gx[j];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { break };
        let step: Vec<f64> = (0..nf).map(|r| sol[r]).collect();
        let size = step.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if size <= 1e-15 {
            // stationary on the free set: release the bound with the most
            // negative multiplier, if any
            let nu = -sol[nf];
            let release = (0..m)
                .filter(|&j| fixed[j])
                .map(|j| (j, gx[j] - nu))
                .filter(|(_, z)| *z < -1e-14 * (1.0 + gx[j_abs_max(&gx)].abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match release {
                Some((j, _)) => fixed[j] = false,
                None => break,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (r, &j) in free.iter().enumerate() {
            if step[r] < 0.0 {
                let limit = -x[j] / step[r];
                if limit < alpha {
                    alpha = limit;
                    blocking = Some(j);
                }
            }
        }
        for (r, &j) in free.iter().enumerate() {
            x[j] = (x[j] + alpha * step[r]).max(0.0);
        }
        if let Some(j) = blocking {
            x[j] = 0.0;
            fixed[j] = true;
        }
    }
    project_simplex(&x)
}

/// `Σ μ_j g_j − min_j g_j`: zero exactly at a minimizer over the simplex.
fn stationarity(mu: &[f64], g: &[f64]) -> f64 {
    dot(mu, g) - min_of(g)
}

fn j_abs_max(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0)
}

/// Result of the dual solve before the degenerate phases are searched.
struct Core {
    mu: Vec<f64>,
    omega: Vec<Complex64>,
    primal: f64,
    iterations: usize,
    /// Elements whose numerator vanishes at `mu`.
    weak: Vec<usize>,
}

fn solve_core(ws: &DualWorkspace, init: &[f64], opts: &SolverOptions) -> Core {
    let mut mu = project_simplex(init);
    let mut iterations = 0usize;
    let mut tracker = Tracker {
        cert_gap: f64::INFINITY,
        cert_mu: mu.clone(),
        cert_eps: 0.0,
        primal: f64::NEG_INFINITY,
        primal_mu: mu.clone(),
    };

    // without smoothing the certificate is the unit-modulus gap itself
    if let StageEnd::Certified = stage(ws, &mut mu, 0.0, opts, &mut iterations, &mut tracker) {
        polish(ws, &mut mu);
        let omega = ws.omega(&mu);
        let primal = min_of(&ws.row_values(&omega));
        return Core { mu, omega, primal, iterations, weak: Vec::new() };
    }

    let beta_sum: f64 = ws.beta().iter().sum();
    let scale = if beta_sum > 0.0 { ws.value(&tracker.cert_mu).abs() / beta_sum } else { 0.0 };
    if scale > 0.0 {
        let mut eps = 1e-2 * scale;
        mu = tracker.cert_mu.clone();
        for _ in 0..SMOOTHING_STAGES {
            if iterations >= opts.max_iter {
                break;
            }
            if let StageEnd::Certified = newton_stage(ws, &mut mu, eps, opts, &mut iterations, &mut tracker) {
                break;
            }
            eps *= 0.1;
        }
    }

    let mut mu = tracker.cert_mu.clone();
    // a near-kink that is not exactly at the minimizer is resolved by Newton
    polish(ws, &mut mu);
    let pr = ws.probe(&mu, 0.0);
    if relative_gap(pr.value, min_of(&pr.unit_rows)) <= opts.tol {
        let omega = ws.omega(&mu);
        let primal = min_of(&pr.unit_rows);
        return Core { mu, omega, primal, iterations, weak: Vec::new() };
    }
    if ws.value(&mu) > ws.value(&tracker.cert_mu) {
        mu = tracker.cert_mu.clone();
    }
    let moduli = ws.moduli(&mu);
    let weak: Vec<usize> = (0..moduli.len()).filter(|&i| moduli[i] <= DEGENERATE * scale).collect();
    if !weak.is_empty() {
        if let Some(exact) = kink_newton(ws, &tracker.cert_mu, &weak, tracker.cert_eps, tracker.cert_gap) {
            mu = exact;
        }
    }
    let moduli = ws.moduli(&mu);
    let weak: Vec<usize> = (0..moduli.len()).filter(|&i| moduli[i] <= DEGENERATE * scale).collect();
    let mut omega = repair(ws, &mu, &weak);
    let mut primal = min_of(&ws.row_values(&omega));
    if tracker.primal > primal {
        omega = ws.omega(&tracker.primal_mu);
        primal = tracker.primal;
    }
    Core { mu, omega, primal, iterations, weak }
}

pub(crate) fn solve_dual_from(ws: &DualWorkspace, init: &[f64], opts: &SolverOptions) -> PhaseSolution {
    let core = solve_core(ws, init, opts);
    let dual_value = ws.value(&core.mu);
    let mut omega = core.omega;
    let mut primal = core.primal;
    let mut iterations = core.iterations;
    if relative_gap(dual_value, primal) > opts.accept_gap && !core.weak.is_empty() {
        let sweeps = if core.weak.len() == 1 { 1 } else { PHASE_SWEEPS };
        for _ in 0..sweeps {
            for &i in &core.weak {
                let (w, v, its) = phase_search(ws, &core.weak, i, &omega, opts);
                iterations += its;
                if v > primal {
                    primal = v;
                    omega = w;
                }
            }
        }
    }
    let converged = relative_gap(dual_value, primal) <= opts.accept_gap;
    let mut sol = PhaseSolution::with_omega(ws, core.mu, omega, iterations, converged);
    sol.degenerate_elements = core.weak.len();
    sol
}

/// Holds the degenerate elements at their phases in `omega` (element `i`
/// at `e^{jφ}`), solves the remaining elements exactly and returns the
/// full phase vector with its smallest row value.
fn held_solve(
    ws: &DualWorkspace,
    weak: &[usize],
    i: usize,
    phi: f64,
    omega: &[Complex64],
    opts: &SolverOptions,
) -> (Vec<Complex64>, f64, usize) {
    let fixed: Vec<(usize, Complex64)> = weak
        .iter()
        .map(|&e| (e, if e == i { Complex64::from_polar(1.0, phi) } else { omega[e] }))
        .collect();
    let sub = ws.restricted(&fixed);
    let core = solve_core(&sub, &super::uniform_start(&sub), opts);
    let mut full = Vec::with_capacity(omega.len());
    let mut rest = core.omega.into_iter();
    for e in 0..omega.len() {
        match fixed.iter().find(|(f, _)| *f == e) {
            Some((_, w)) => full.push(*w),
            None => full.push(rest.next().unwrap_or(Complex64::new(1.0, 0.0))),
        }
    }
    let value = min_of(&ws.row_values(&full));
    (full, value, core.iterations)
}

/// Maximizes the held-out optimum over the phase of element `i`: a coarse
/// scan of the circle followed by golden-section refinement.
fn phase_search(
    ws: &DualWorkspace,
    weak: &[usize],
    i: usize,
    omega: &[Complex64],
    opts: &SolverOptions,
) -> (Vec<Complex64>, f64, usize) {
    use std::f64::consts::TAU;
    let mut iterations = 0;
    let mut eval = |phi: f64| {
        let (w, v, its) = held_solve(ws, weak, i, phi, omega, opts);
        iterations += its;
        (w, v)
    };
    let start = omega[i].arg();
    let step = TAU / SCAN_POINTS as f64;
    let mut best = (start, eval(start));
    for k in 1..SCAN_POINTS {
        let phi = start + k as f64 * step;
        let r = eval(phi);
        if r.1 > best.1 .1 {
            best = (phi, r);
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..GOLDEN_STEPS {
        if f1.1 >= f2.1 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = eval(x2);
        }
    }
    for cand in [f1, f2] {
        if cand.1 > best.1 .1 {
            best.1 = cand;
        }
    }
    let (w, v) = best.1;
    (w, v, iterations)
}

/// Closed-form phases at `mu`, with the phases of the `weak` elements
/// re-chosen one at a time to maximize the smallest row.
fn repair(ws: &DualWorkspace, mu: &[f64], weak: &[usize]) -> Vec<Complex64> {
    let mut omega = ws.omega(mu);
    if weak.is_empty() {
        return omega;
    }
    let mut rows = ws.row_values(&omega);
    for _ in 0..REPAIR_SWEEPS {
        let before = min_of(&rows);
        for &i in weak {
            let (a, b) = ws.element_rows(i);
            let w = omega[i];
            let base: Vec<f64> = (0..rows.len()).map(|j| rows[j] - a[j] * w.re - b[j] * w.im).collect();
            let next = best_phase(&base, &a, &b, w);
            for j in 0..rows.len() {
                rows[j] = base[j] + a[j] * next.re + b[j] * next.im;
            }
            omega[i] = next;
        }
        if min_of(&rows) <= before * (1.0 + 1e-15) {
            break;
        }
    }
    omega
}

/// Exact maximizer of `min_j (base_j + a_j cos φ + b_j sin φ)` over `φ`.
///
/// The maximum of a lower envelope of sinusoids is attained at the peak of
/// one of them or where two of them cross, so those are the candidates.
pub(crate) fn best_phase(base: &[f64], a: &[f64], b: &[f64], current: Complex64) -> Complex64 {
    let m = base.len();
    let envelope = |w: Complex64| -> f64 {
        (0..m).map(|j| base[j] + a[j] * w.re + b[j] * w.im).fold(f64::INFINITY, f64::min)
    };
    let mut best = (envelope(current), current);
    let mut consider = |w: Complex64| {
        let v = envelope(w);
        if v > best.0 {
            best = (v, w);
        }
    };
    for j in 0..m {
        if a[j] != 0.0 || b[j] != 0.0 {
            consider(unit(a[j], b[j]));
        }
    }
    for j in 0..m {
        for l in j + 1..m {
            // (a_j − a_l) cos φ + (b_j − b_l) sin φ = base_l − base_j
            let (da, db) = (a[j] - a[l], b[j] - b[l]);
            let r = da.hypot(db);
            if r == 0.0 {
                continue;
            }
            let c = (base[l] - base[j]) / r;
            if c.abs() > 1.0 {
                continue;
            }
            let gamma = db.atan2(da);
            let delta = c.acos();
            consider(Complex64::from_polar(1.0, gamma + delta));
            consider(Complex64::from_polar(1.0, gamma - delta));
        }
    }
    best.1
}
