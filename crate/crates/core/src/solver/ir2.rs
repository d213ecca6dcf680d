//! Inner solver: an adaptive proximal-gradient method (quadratic
//! regularization with `B = 0`) applied to the outer model
//!
//! ```text
//! m(s) = ĝᵀs + ½sᵀBs + ½σ‖s‖² + h(x + s),
//! ```
//!
//! whose smooth part is evaluated exactly. It starts from the outer Cauchy
//! step and only accepts model-decreasing steps.

use nalgebra::DVector;

use super::hessian::HessianModel;
use super::params::SolverParams;
use crate::prox::{cauchy_engine, run_prox_with_early_stop, ProxQuery, StopReason};
use crate::regularizers::{step_norm_bound, BoundInputs, Regularizer};

/// Lower limit on the inner stationarity tolerance.
pub const INNER_TOL_FLOOR: f64 = 1e-10;

/// The quadratic model of the outer iteration at `x`.
#[derive(Debug, Clone, Copy)]
pub struct QuadModel<'a> {
    pub x: &'a DVector<f64>,
    pub ghat: &'a DVector<f64>,
    pub hess: &'a HessianModel,
    pub sigma: f64,
}

impl QuadModel<'_> {
    /// `φ(s) = ĝᵀs + ½sᵀBs` (the constant `f̂(x)` omitted).
    pub fn phi(&self, s: &DVector<f64>) -> f64 {
        self.ghat.dot(s) + 0.5 * self.hess.quad_form(s)
    }

    /// `m(s) = φ(s) + ½σ‖s‖² + h(x + s)`.
    pub fn value(&self, s: &DVector<f64>, reg: &Regularizer) -> f64 {
        self.phi(s) + 0.5 * self.sigma * s.norm_squared() + reg.value(&(self.x + s))
    }

    fn smooth_grad(&self, s: &DVector<f64>) -> DVector<f64> {
        self.ghat + self.hess.apply(s) + s * self.sigma
    }
}

#[derive(Debug, Clone)]
pub struct Ir2Output {
    pub s: DVector<f64>,
    /// Inner iterations, one proximal evaluation each.
    pub iters: usize,
    pub prox_iters: usize,
    pub prox_failures: usize,
    /// The final inner stationarity measure reached the tolerance.
    pub converged: bool,
}

/// Minimizes the outer model approximately, starting from `s_init`.
///
/// The inner tolerance is `max(10⁻¹⁰, κ_in·outer_measure)`.
pub fn ir2_solve(
    model: &QuadModel<'_>,
    reg: &Regularizer,
    s_init: &DVector<f64>,
    params: &SolverParams,
    outer_measure: f64,
) -> Ir2Output {
    let tol = INNER_TOL_FLOOR.max(params.inner.kappa_in * outer_measure);
    let mut s = s_init.clone();
    let mut m_s = model.value(&s, reg);
    let mut sigma = model.hess.norm_estimate() + model.sigma;
    let mut out = Ir2Output { s: s.clone(), iters: 0, prox_iters: 0, prox_failures: 0, converged: false };
    let mut failure_streak = 0;

    while out.iters < params.inner.max_iter {
        let grad = model.smooth_grad(&s);
        let nu = params.theta1 / sigma;
        let xs = model.x + &s;
        let bound = step_norm_bound(reg, &BoundInputs { x: &xs, nu, ghat_norm: grad.norm() });
        let seed = params.seed ^ (0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(out.iters as u64 + 1));
        let mut engine = cauchy_engine(reg, &xs, &grad, nu, seed, params.lp_search);
        let query = ProxQuery {
            x: &xs,
            ghat: &grad,
            nu,
            kappa_s: params.kappa_s,
            bound,
            mode: params.mode,
            native_tol: params.prox_tol,
            max_inner: params.prox_max_iter,
        };
        let prox = run_prox_with_early_stop(engine.as_mut(), &query, |y| reg.value(y));
        out.iters += 1;
        out.prox_iters += prox.inner_iters;

        if prox.stop_reason == StopReason::Failure {
            out.prox_failures += 1;
            failure_streak += 1;
            if failure_streak >= params.max_prox_failures {
                break;
            }
            sigma *= params.gamma1;
            continue;
        }
        failure_streak = 0;

        let t = prox.shat;
        if t.norm() / nu <= tol {
            out.converged = true;
            break;
        }
        let trial = &s + &t;
        let m_trial = model.value(&trial, reg);
        let rho = if prox.xi_hat > 0.0 && prox.xi_hat.is_finite() { (m_s - m_trial) / prox.xi_hat } else { f64::NAN };
        if rho >= params.eta1 && m_trial <= m_s {
            s = trial;
            m_s = m_trial;
        }
        sigma = if rho >= params.eta2 {
            params.gamma3 * sigma
        } else if rho >= params.eta1 {
            sigma
        } else {
            params.gamma1 * sigma
        };
        sigma = sigma.max(params.sigma_min);
    }
    out.s = s;
    out
}
