use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::index::SpatialSymbol;
use crate::model::ChannelRealization;

/// Coefficients of the dual problem for one (channel, symbol) pair.
///
/// Each targeted component contributes one constraint row. With the
/// multiplier vector `μ = [λ; δ]` the dual objective is
/// `Σ_i β_i |P_i + jQ_i|` where `P_i = Σ_k λ_k A_{k,i} + Σ_k δ_k B_{k,i}` and
/// `Q_i = Σ_k λ_k C_{k,i} + Σ_k δ_k D_{k,i}`.
///
/// Storage is element-major: the coefficients of element `i` for every row
/// are contiguous, which is the access pattern of every solver loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWorkspace {
    n_ris: usize,
    k_lambda: usize,
    k_delta: usize,
    /// `[A | B]` per element, `n_ris × rows`.
    p: Vec<f64>,
    /// `[C | D]` per element, `n_ris × rows`.
    q: Vec<f64>,
    beta: Vec<f64>,
    /// Fixed contribution to every row from elements held out of the
    /// optimization (zero for a full workspace).
    offset: Vec<f64>,
}

/// Dual value, (smoothed) gradient and unit-modulus row values at one
/// multiplier vector.
#[derive(Debug, Clone)]
pub(crate) struct Probe {
    pub value: f64,
    pub smooth_value: f64,
    pub grad: Vec<f64>,
    pub unit_rows: Vec<f64>,
}

/// Dual value and its (sub)gradient at one multiplier vector.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub value: f64,
    /// `∂g/∂μ_j`, which equals the primal value of row `j` at the recovered ω.
    pub grad: Vec<f64>,
}

impl DualWorkspace {
    /// Builds `A, B, C, D` for the GRQSM max-min problem:
    /// `A_{k,i} = x^R_k h^R_{m_k,i}`, `B_{k,i} = x^I_k h^I_{n_k,i}`,
    /// `C_{k,i} = −x^R_k h^I_{m_k,i}`, `D_{k,i} = x^I_k h^R_{n_k,i}`.
    pub fn build(ch: &ChannelRealization, sym: &SpatialSymbol) -> Result<Self> {
        sym.validate(ch.n_rx())?;
        let k = sym.k();
        let n = ch.n_ris();
        let rows = 2 * k;
        let mut p = vec![0.0; n * rows];
        let mut q = vec![0.0; n * rows];
        for i in 0..n {
            let base = i * rows;
            for kk in 0..k {
                let xr = sym.pol_i[kk] as f64;
                let xi = sym.pol_q[kk] as f64;
                let hm = ch.h(sym.set_i[kk], i);
                let hn = ch.h(sym.set_q[kk], i);
                p[base + kk] = xr * hm.re;
                q[base + kk] = -xr * hm.im;
                p[base + k + kk] = xi * hn.im;
                q[base + k + kk] = xi * hn.re;
            }
        }
        Ok(DualWorkspace {
            n_ris: n,
            k_lambda: k,
            k_delta: k,
            p,
            q,
            beta: ch.beta().to_vec(),
            offset: vec![0.0; rows],
        })
    }

    /// Multicast variant: one X-type row per receive antenna
    /// (`A_{l,i} = h^R_{l,i}`, `C_{l,i} = −h^I_{l,i}`) and no Y-type rows.
    pub fn multicast(ch: &ChannelRealization) -> Self {
        let n = ch.n_ris();
        let rows = ch.n_rx();
        let mut p = vec![0.0; n * rows];
        let mut q = vec![0.0; n * rows];
        for l in 0..rows {
            for (i, h) in ch.h_row(l).iter().enumerate() {
                p[i * rows + l] = h.re;
                q[i * rows + l] = -h.im;
            }
        }
        DualWorkspace {
            n_ris: n,
            k_lambda: rows,
            k_delta: 0,
            p,
            q,
            beta: ch.beta().to_vec(),
            offset: vec![0.0; rows],
        }
    }

    /// Builds a workspace directly from `A, B, C, D` given row-major
    /// (`K × N`). `b` and `d` may be empty.
    pub fn from_parts(
        a: &[f64],
        b: &[f64],
        c: &[f64],
        d: &[f64],
        beta: &[f64],
    ) -> Result<Self> {
        let n = beta.len();
        if n == 0 || a.len() % n != 0 || b.len() % n != 0 {
            return Err(invalid("coefficient matrices must have N columns"));
        }
        if a.len() != c.len() || b.len() != d.len() || a.is_empty() {
            return Err(invalid("A/C and B/D must have matching shapes"));
        }
        if beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(invalid("beta must be non-negative"));
        }
        let kl = a.len() / n;
        let kd = b.len() / n;
        let rows = kl + kd;
        let mut p = vec![0.0; n * rows];
        let mut q = vec![0.0; n * rows];
        for i in 0..n {
            for k in 0..kl {
                p[i * rows + k] = a[k * n + i];
                q[i * rows + k] = c[k * n + i];
            }
            for k in 0..kd {
                p[i * rows + kl + k] = b[k * n + i];
                q[i * rows + kl + k] = d[k * n + i];
            }
        }
        Ok(DualWorkspace {
            n_ris: n,
            k_lambda: kl,
            k_delta: kd,
            p,
            q,
            beta: beta.to_vec(),
            offset: vec![0.0; rows],
        })
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    /// Number of λ multipliers (X-type rows).
    pub fn k_lambda(&self) -> usize {
        self.k_lambda
    }

    /// Number of δ multipliers (Y-type rows).
    pub fn k_delta(&self) -> usize {
        self.k_delta
    }

    /// Total number of multipliers.
    pub fn rows(&self) -> usize {
        self.k_lambda + self.k_delta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn a(&self, k: usize, i: usize) -> f64 {
        self.p[i * self.rows() + k]
    }

    pub fn b(&self, k: usize, i: usize) -> f64 {
        self.p[i * self.rows() + self.k_lambda + k]
    }

    pub fn c(&self, k: usize, i: usize) -> f64 {
        self.q[i * self.rows() + k]
    }

    pub fn d(&self, k: usize, i: usize) -> f64 {
        self.q[i * self.rows() + self.k_lambda + k]
    }

    /// Multiplies every `β_i` by `c`.
    pub fn scale_beta(&mut self, c: f64) {
        self.beta.iter_mut().for_each(|b| *b *= c);
    }

    pub(crate) fn element(&self, i: usize) -> (&[f64], &[f64]) {
        let m = self.rows();
        (&self.p[i * m..(i + 1) * m], &self.q[i * m..(i + 1) * m])
    }

    /// `(P_i, Q_i)` for one element.
    #[inline]
    fn numerators(&self, i: usize, mu: &[f64]) -> (f64, f64) {
        let (p, q) = self.element(i);
        let mut pp = 0.0;
        let mut qq = 0.0;
        for j in 0..mu.len() {
            pp += mu[j] * p[j];
            qq += mu[j] * q[j];
        }
        (pp, qq)
    }

    pub(crate) fn value(&self, mu: &[f64]) -> f64 {
        let norms: f64 = (0..self.n_ris)
            .map(|i| {
                let (pp, qq) = self.numerators(i, mu);
                self.beta[i] * pp.hypot(qq)
            })
            .sum();
        norms + self.offset_term(mu)
    }

    fn offset_term(&self, mu: &[f64]) -> f64 {
        self.offset.iter().zip(mu).map(|(o, x)| o * x).sum()
    }

    /// Workspace with the listed elements removed (offset kept).
    pub(crate) fn without(&self, drop: &[usize]) -> DualWorkspace {
        let mut out = self.restricted(&[]);
        let m = self.rows();
        let keep: Vec<usize> = (0..self.n_ris).filter(|i| !drop.contains(i)).collect();
        out.p = keep.iter().flat_map(|&i| self.p[i * m..(i + 1) * m].iter().copied()).collect();
        out.q = keep.iter().flat_map(|&i| self.q[i * m..(i + 1) * m].iter().copied()).collect();
        out.beta = keep.iter().map(|&i| self.beta[i]).collect();
        out.n_ris = keep.len();
        out
    }

    /// Workspace over the remaining elements with the listed elements held
    /// at the given phases; their contribution becomes a constant row offset.
    pub(crate) fn restricted(&self, fixed: &[(usize, Complex64)]) -> DualWorkspace {
        let m = self.rows();
        let mut offset = self.offset.clone();
        for &(i, w) in fixed {
            let (p, q) = self.element(i);
            for j in 0..m {
                offset[j] += self.beta[i] * (p[j] * w.re + q[j] * w.im);
            }
        }
        let keep: Vec<usize> = (0..self.n_ris).filter(|i| !fixed.iter().any(|(f, _)| f == i)).collect();
        let mut p = Vec::with_capacity(keep.len() * m);
        let mut q = Vec::with_capacity(keep.len() * m);
        for &i in &keep {
            let (pi, qi) = self.element(i);
            p.extend_from_slice(pi);
            q.extend_from_slice(qi);
        }
        DualWorkspace {
            n_ris: keep.len(),
            k_lambda: self.k_lambda,
            k_delta: self.k_delta,
            p,
            q,
            beta: keep.iter().map(|&i| self.beta[i]).collect(),
            offset,
        }
    }

    /// Unit-modulus phases maximizing the Lagrangian at `mu`; elements with
    /// vanishing numerators get `ω_i = 1`.
    pub(crate) fn omega(&self, mu: &[f64]) -> Vec<Complex64> {
        (0..self.n_ris)
            .map(|i| {
                let (pp, qq) = self.numerators(i, mu);
                unit(pp, qq)
            })
            .collect()
    }

    pub(crate) fn evaluate(&self, mu: &[f64]) -> Evaluation {
        let m = self.rows();
        let mut grad = vec![0.0; m];
        let mut value = 0.0;
        for i in 0..self.n_ris {
            let (p, q) = self.element(i);
            let (pp, qq) = self.numerators(i, mu);
            let r = pp.hypot(qq);
            let beta = self.beta[i];
            value += beta * r;
            let w = unit(pp, qq);
            let (wr, wi) = (beta * w.re, beta * w.im);
            for j in 0..m {
                grad[j] += p[j] * wr + q[j] * wi;
            }
        }
        self.add_offset(mu, &mut value, &mut grad);
        Evaluation { value, grad }
    }

    fn add_offset(&self, mu: &[f64], value: &mut f64, rows: &mut [f64]) {
        *value += self.offset_term(mu);
        rows.iter_mut().zip(&self.offset).for_each(|(r, o)| *r += o);
    }

    /// Like [`evaluate`](Self::evaluate) but with `|z_i|` smoothed to
    /// `√(|z_i|² + ε²)`. The gradient is then the row values at the relaxed
    /// phases `u_i = z_i / √(|z_i|² + ε²)` (inside the unit disk), and the
    /// unit-modulus row values are returned alongside.
    pub(crate) fn probe(&self, mu: &[f64], eps: f64) -> Probe {
        let m = self.rows();
        let mut grad = vec![0.0; m];
        let mut unit_rows = vec![0.0; m];
        let mut value = 0.0;
        let mut smooth_value = 0.0;
        let eps2 = eps * eps;
        for i in 0..self.n_ris {
            let (p, q) = self.element(i);
            let (pp, qq) = self.numerators(i, mu);
            let r = pp.hypot(qq);
            let beta = self.beta[i];
            value += beta * r;
            let w = unit(pp, qq);
            let (wr, wi) = (beta * w.re, beta * w.im);
            if eps > 0.0 {
                let rs = (r * r + eps2).sqrt();
                smooth_value += beta * rs;
                let (ur, ui) = (beta * pp / rs, beta * qq / rs);
                for j in 0..m {
                    grad[j] += p[j] * ur + q[j] * ui;
                    unit_rows[j] += p[j] * wr + q[j] * wi;
                }
            } else {
                for j in 0..m {
                    unit_rows[j] += p[j] * wr + q[j] * wi;
                }
            }
        }
        let shift = self.offset_term(mu);
        value += shift;
        smooth_value += shift;
        unit_rows.iter_mut().zip(&self.offset).for_each(|(r, o)| *r += o);
        if eps == 0.0 {
            smooth_value = value;
            grad.copy_from_slice(&unit_rows);
        } else {
            grad.iter_mut().zip(&self.offset).for_each(|(r, o)| *r += o);
        }
        Probe {
            value,
            smooth_value,
            grad,
            unit_rows,
        }
    }

    /// `|P_i + jQ_i|` for every element.
    pub(crate) fn moduli(&self, mu: &[f64]) -> Vec<f64> {
        (0..self.n_ris)
            .map(|i| {
                let (pp, qq) = self.numerators(i, mu);
                pp.hypot(qq)
            })
            .collect()
    }

    /// Contribution of element `i` to row `j` is `ρ_j cos(φ − θ_j)` with
    /// `ω_i = e^{jφ}`; returns `(ρ_j cos θ_j, ρ_j sin θ_j)` per row.
    pub(crate) fn element_rows(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let (p, q) = self.element(i);
        let b = self.beta[i];
        (p.iter().map(|x| b * x).collect(), q.iter().map(|x| b * x).collect())
    }

    /// Primal value of every row (`X_k` then `Y_k`) at an arbitrary `ω`.
    pub(crate) fn row_values(&self, omega: &[Complex64]) -> Vec<f64> {
        let m = self.rows();
        let mut out = vec![0.0; m];
        for (i, w) in omega.iter().enumerate() {
            let (p, q) = self.element(i);
            let (wr, wi) = (self.beta[i] * w.re, self.beta[i] * w.im);
            for j in 0..m {
                out[j] += p[j] * wr + q[j] * wi;
            }
        }
        out.iter_mut().zip(&self.offset).for_each(|(r, o)| *r += o);
        out
    }

    /// Gradient and Hessian `Σ_i (β_i / r_i) v_i v_iᵀ`, with `v_i` the
    /// component of each row's coefficient orthogonal to the current phase.
    /// Elements with `r_i = 0` are skipped (the objective is not twice
    /// differentiable there).
    pub(crate) fn evaluate_with_hessian(&self, mu: &[f64]) -> (Evaluation, Vec<f64>) {
        let m = self.rows();
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        let mut v = vec![0.0; m];
        let mut value = 0.0;
        for i in 0..self.n_ris {
            let (p, q) = self.element(i);
            let (pp, qq) = self.numerators(i, mu);
            let r = pp.hypot(qq);
            let beta = self.beta[i];
            value += beta * r;
            let w = unit(pp, qq);
            for j in 0..m {
                grad[j] += beta * (p[j] * w.re + q[j] * w.im);
            }
            if r > 0.0 && beta > 0.0 {
                let scale = beta / r;
                for j in 0..m {
                    v[j] = q[j] * w.re - p[j] * w.im;
                }
                for j in 0..m {
                    let sj = scale * v[j];
                    for l in j..m {
                        hess[j * m + l] += sj * v[l];
                    }
                }
            }
        }
        for j in 0..m {
            for l in 0..j {
                hess[j * m + l] = hess[l * m + j];
            }
        }
        self.add_offset(mu, &mut value, &mut grad);
        (Evaluation { value, grad }, hess)
    }

    /// [`probe`](Self::probe) plus the Hessian of the smoothed objective,
    /// `Σ_i β_i (v_i v_iᵀ / s_i + ε² a_i a_iᵀ / s_i³)` with `s_i = √(r_i² + ε²)`
    /// and `a_i`, `v_i` the row coefficients parallel and orthogonal to the
    /// current phase. With `eps = 0` elements at `r_i = 0` are skipped.
    pub(crate) fn probe_with_hessian(&self, mu: &[f64], eps: f64) -> (Probe, Vec<f64>) {
        let m = self.rows();
        let pr = self.probe(mu, eps);
        let mut hess = vec![0.0; m * m];
        let mut a = vec![0.0; m];
        let mut v = vec![0.0; m];
        let eps2 = eps * eps;
        for i in 0..self.n_ris {
            let beta = self.beta[i];
            if beta == 0.0 {
                continue;
            }
            let (p, q) = self.element(i);
            let (pp, qq) = self.numerators(i, mu);
            let r2 = pp * pp + qq * qq;
            let s = (r2 + eps2).sqrt();
            if s == 0.0 {
                continue;
            }
            let w = unit(pp, qq);
            for j in 0..m {
                a[j] = p[j] * w.re + q[j] * w.im;
                v[j] = q[j] * w.re - p[j] * w.im;
            }
            let (cv, ca) = (beta / s, beta * eps2 / (s * s * s));
            for j in 0..m {
                let (vj, aj) = (cv * v[j], ca * a[j]);
                for l in j..m {
                    hess[j * m + l] += vj * v[l] + aj * a[l];
                }
            }
        }
        for j in 0..m {
            for l in 0..j {
                hess[j * m + l] = hess[l * m + j];
            }
        }
        (pr, hess)
    }
}

#[inline]
pub(crate) fn unit(re: f64, im: f64) -> Complex64 {
    let r = re.hypot(im);
    if r > 0.0 {
        Complex64::new(re / r, im / r)
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Builds the dual workspace for a channel and a transmitted symbol.
pub fn build_workspace(ch: &ChannelRealization, sym: &SpatialSymbol) -> Result<DualWorkspace> {
    DualWorkspace::build(ch, sym)
}
