//! Proximal operator of `τ TV_p(y) = τ‖Dy‖_p` with `D` the forward
//! difference operator, solved by accelerated projected gradient on the dual
//!
//! ```text
//! min_v ½‖q − Dᵀv‖²   s.t.  ‖v‖_{p'} ≤ τ,
//! ```
//!
//! with primal recovery `y = q − Dᵀv`.

use nalgebra::DVector;

use super::projections::project_lq_ball_warm;
use super::{Candidate, Certificate, ClosedFormEngine, ProxEngine};
use crate::regularizers::{difference_operator_norm, lp_norm};

/// `(Dy)_i = y_{i+1} − y_i`.
pub(crate) fn forward_diff(y: &DVector<f64>) -> DVector<f64> {
    let n = y.len();
    DVector::from_iterator(n.saturating_sub(1), (0..n.saturating_sub(1)).map(|i| y[i + 1] - y[i]))
}

/// `Dᵀv` for `v` of length `n − 1`.
pub(crate) fn forward_diff_adjoint(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (i, vi) in v.iter().enumerate() {
        out[i] -= vi;
        out[i + 1] += vi;
    }
    out
}

pub struct TvProxEngine {
    inner: Inner,
}

enum Inner {
    Closed(ClosedFormEngine),
    Dual(DualState),
}

struct DualState {
    q: DVector<f64>,
    tau: f64,
    p: f64,
    qc: f64,
    step: f64,
    v: DVector<f64>,
    v_prev: DVector<f64>,
    t: f64,
    dual_obj: f64,
    lam_hint: f64,
    iters: usize,
    gap: f64,
    failed: bool,
}

impl TvProxEngine {
    /// Engine for `argmin_y ½‖y − q‖² + τ‖Dy‖_p`.
    pub fn new(q: DVector<f64>, tau: f64, p: f64) -> Self {
        let n = q.len();
        if tau == 0.0 || n < 2 {
            return Self { inner: Inner::Closed(ClosedFormEngine::new(q, 1)) };
        }
        let qc = if p == 1.0 { f64::INFINITY } else if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
        let norm = difference_operator_norm(n);
        let dual_obj = 0.5 * q.norm_squared();
        Self {
            inner: Inner::Dual(DualState {
                q,
                tau,
                p,
                qc,
                step: 1.0 / (norm * norm),
                v: DVector::zeros(n - 1),
                v_prev: DVector::zeros(n - 1),
                t: 1.0,
                dual_obj,
                lam_hint: 0.0,
                iters: 0,
                gap: f64::INFINITY,
                failed: false,
            }),
        }
    }
}

impl DualState {
    fn advance(&mut self) -> Option<Candidate> {
        let n = self.q.len();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        let beta = (self.t - 1.0) / t_next;
        let z = &self.v + (&self.v - &self.v_prev) * beta;
        let resid = &self.q - forward_diff_adjoint(&z, n);
        let trial = z + forward_diff(&resid) * self.step;
        let tol = 1e-13 * self.tau;
        let v_new = match project_lq_ball_warm(&trial, self.qc, self.tau, tol, &mut self.lam_hint) {
            Ok(v) => v,
            Err(_) => {
                self.failed = true;
                return None;
            }
        };
        self.iters += 1;
        let y = &self.q - forward_diff_adjoint(&v_new, n);
        let obj = 0.5 * y.norm_squared();
        // restart the momentum whenever the dual objective goes up
        if obj > self.dual_obj {
            self.t = 1.0;
        } else {
            self.t = t_next;
        }
        self.dual_obj = obj;
        self.v_prev = std::mem::replace(&mut self.v, v_new);
        let dy = forward_diff(&y);
        let gap = self.tau * lp_norm(dy.as_slice(), self.p) - self.v.dot(&dy);
        self.gap = gap.max(0.0);
        if !y.iter().all(|v| v.is_finite()) {
            self.failed = true;
            return None;
        }
        Some(Candidate {
            point: y,
            work: self.iters,
            certificate: Some(Certificate { kkt_residual: self.gap / self.tau, duality_gap: self.gap }),
        })
    }
}

impl ProxEngine for TvProxEngine {
    fn next_candidate(&mut self) -> Option<Candidate> {
        match &mut self.inner {
            Inner::Closed(c) => c.next_candidate(),
            Inner::Dual(st) => st.advance(),
        }
    }

    fn converged(&self, tol: f64) -> bool {
        match &self.inner {
            Inner::Closed(c) => c.converged(tol),
            Inner::Dual(st) => st.gap <= tol,
        }
    }

    fn failed(&self) -> bool {
        matches!(&self.inner, Inner::Dual(st) if st.failed)
    }
}

/// Engine for `prox_{τ TV_p}(q)`.
pub fn prox_tvp_engine(q: DVector<f64>, tau: f64, p: f64) -> TvProxEngine {
    TvProxEngine::new(q, tau, p)
}
