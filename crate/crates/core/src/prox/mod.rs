//! Iterative proximal engines and certified early termination.
//!
//! An engine produces a sequence of candidate points `y_j` converging to the
//! proximal point. [`run_prox_with_early_stop`] turns those candidates into
//! steps `s_j = y_j − x` for the Cauchy subproblem
//!
//! ```text
//! min_s  ĝᵀs + ½ν⁻¹‖s‖² + h(x + s)
//! ```
//!
//! and stops as soon as a candidate both decreases the model and is at least
//! `κ_s·M` long, where `M` bounds the norm of every exact solution.

mod irbp;
mod lp;
pub mod projections;
mod tv;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::regularizers::Regularizer;

pub use irbp::{irbp_project_engine, IrbpEngine};
pub use lp::{prox_lp_norm_engine, LpProxEngine};
pub use projections::{project_lq_ball, project_weighted_l1_ball, SearchRule};
pub use tv::{prox_tvp_engine, TvProxEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxMode {
    /// Run the engine to its own convergence test.
    Exact,
    /// Also stop at the first descent candidate with `‖s‖ ≥ κ_s·M`.
    Inexact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    EarlyNorm,
    Native,
    Budget,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Certificate {
    /// Stationarity + complementarity + dual infeasibility of the primal-dual pair.
    pub kkt_residual: f64,
    pub duality_gap: f64,
}

/// One iterate of a proximal engine.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// Candidate proximal point `y_j` (not the step).
    pub point: DVector<f64>,
    /// Cumulative engine iterations spent to produce this candidate.
    pub work: usize,
    pub certificate: Option<Certificate>,
}

pub trait ProxEngine {
    /// Produces the next candidate, or `None` when the engine has nothing
    /// more to offer.
    fn next_candidate(&mut self) -> Option<Candidate>;

    /// The engine's own convergence test on its latest candidate.
    fn converged(&self, tol: f64) -> bool;

    fn failed(&self) -> bool {
        false
    }
}

/// A single, already exact candidate (identity prox, soft thresholding, ...).
#[derive(Debug, Clone)]
pub struct ClosedFormEngine {
    point: Option<DVector<f64>>,
    work: usize,
    emitted: bool,
}

impl ClosedFormEngine {
    pub fn new(point: DVector<f64>, work: usize) -> Self {
        Self { point: Some(point), work, emitted: false }
    }
}

impl ProxEngine for ClosedFormEngine {
    fn next_candidate(&mut self) -> Option<Candidate> {
        let point = self.point.take()?;
        self.emitted = true;
        Some(Candidate {
            point,
            work: self.work,
            certificate: Some(Certificate::default()),
        })
    }

    fn converged(&self, _tol: f64) -> bool {
        self.emitted
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProxQuery<'a> {
    pub x: &'a DVector<f64>,
    pub ghat: &'a DVector<f64>,
    pub nu: f64,
    pub kappa_s: f64,
    /// Upper bound on the norm of any exact Cauchy step.
    pub bound: f64,
    pub mode: ProxMode,
    pub native_tol: f64,
    pub max_inner: usize,
}

#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub shat: DVector<f64>,
    pub xi_hat: f64,
    pub inner_iters: usize,
    pub stop_reason: StopReason,
    pub certificate: Option<Certificate>,
}

/// Builds the engine for the Cauchy subproblem at `x` with gradient `ĝ` and
/// step `ν`: the proximal point of `νh` at `x − νĝ`.
pub fn cauchy_engine(
    reg: &Regularizer,
    x: &DVector<f64>,
    ghat: &DVector<f64>,
    nu: f64,
    seed: u64,
    lp_rule: SearchRule,
) -> Box<dyn ProxEngine> {
    let q = x - ghat * nu;
    match reg {
        Regularizer::Zero => Box::new(ClosedFormEngine::new(q, 1)),
        Regularizer::LpNorm(r) => Box::new(LpProxEngine::new(q, nu * r.mu, r.p, lp_rule)),
        Regularizer::Tvp(r) => Box::new(TvProxEngine::new(q, nu * r.mu, r.p)),
        Regularizer::LpBall(r) => Box::new(IrbpEngine::new(q, *r, seed).with_anchor(x)),
    }
}

/// `−ĝᵀŝ + h(x) − h(x + ŝ)`.
pub fn xi_hat_cp(ghat: &DVector<f64>, shat: &DVector<f64>, h_at_x: f64, h_at_x_plus_s: f64) -> f64 {
    -ghat.dot(shat) + h_at_x - h_at_x_plus_s
}

/// Drives `engine` on the Cauchy subproblem described by `query`.
///
/// `h` evaluates the regularizer at a candidate point `x + s`.
pub fn run_prox_with_early_stop<E, H>(engine: &mut E, query: &ProxQuery<'_>, h: H) -> ProxOutcome
where
    E: ProxEngine + ?Sized,
    H: Fn(&DVector<f64>) -> f64,
{
    let x = query.x;
    let hx = h(x);
    let threshold = query.kappa_s * query.bound;
    let half_inv_nu = 0.5 / query.nu;

    let mut best = DVector::zeros(x.len());
    let mut best_change = 0.0;
    let mut best_cert = None;
    let mut work = 0;

    let finish = |s: DVector<f64>, hs: f64, work: usize, reason: StopReason, cert: Option<Certificate>| {
        let xi_hat = xi_hat_cp(query.ghat, &s, hx, hs);
        ProxOutcome { shat: s, xi_hat, inner_iters: work, stop_reason: reason, certificate: cert }
    };

    loop {
        if work >= query.max_inner {
            let hs = h(&(x + &best));
            return finish(best, hs, work, StopReason::Budget, best_cert);
        }
        let Some(cand) = engine.next_candidate() else {
            if engine.failed() {
                return finish(DVector::zeros(x.len()), hx, work, StopReason::Failure, None);
            }
            let hs = h(&(x + &best));
            return finish(best, hs, work, StopReason::Native, best_cert);
        };
        work = cand.work;
        let s = &cand.point - x;
        let hs = h(&cand.point);
        let lin = query.ghat.dot(&s);
        let quad = half_inv_nu * s.norm_squared();
        let change = lin + quad + hs - hx;
        // rounding slack on the four terms of the model difference
        let slack = 64.0 * f64::EPSILON * (lin.abs() + quad + hs.abs() + hx.abs());
        let descent = change.is_finite() && change <= slack;
        if descent && change < best_change {
            best.copy_from(&s);
            best_change = change;
            best_cert = cand.certificate;
        }
        let snorm = s.norm();
        if query.mode == ProxMode::Inexact && descent && snorm > 0.0 && snorm >= threshold {
            return finish(s, hs, work, StopReason::EarlyNorm, cand.certificate);
        }
        if engine.converged(query.native_tol) {
            if descent {
                return finish(s, hs, work, StopReason::Native, cand.certificate);
            }
            if engine.failed() {
                return finish(DVector::zeros(x.len()), hx, work, StopReason::Failure, None);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::{LpNormReg, Regularizer};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn query<'a>(x: &'a DVector<f64>, g: &'a DVector<f64>, nu: f64, kappa_s: f64, bound: f64, mode: ProxMode) -> ProxQuery<'a> {
        ProxQuery { x, ghat: g, nu, kappa_s, bound, mode, native_tol: 1e-10, max_inner: 1000 }
    }

    #[test]
    fn single_candidate_engine_stops_natively() {
        let x = dvector![0.0, 0.0];
        let g = dvector![-3.0, 0.5];
        let reg = Regularizer::LpNorm(LpNormReg::new(1.0, 1.0).unwrap());
        let mut eng = cauchy_engine(&reg, &x, &g, 1.0, 0, SearchRule::Bisection);
        let out = run_prox_with_early_stop(eng.as_mut(), &query(&x, &g, 1.0, 0.5, 10.0, ProxMode::Exact), |y| reg.value(y));
        assert_eq!(out.stop_reason, StopReason::Native);
        assert_eq!(out.inner_iters, 1);
        assert_relative_eq!(out.shat, dvector![2.0, 0.0]);
        // ξ = −ĝᵀs + h(0) − h(s) = 6 − 2 = 4
        assert_relative_eq!(out.xi_hat, 4.0);
    }

    #[test]
    fn xi_hat_examples() {
        assert_eq!(xi_hat_cp(&dvector![1.0, 2.0], &dvector![0.0, 0.0], 3.0, 3.0), 0.0);
        let g = dvector![1.0, -2.0];
        let nu = 0.3;
        let s = -&g * nu;
        assert_relative_eq!(xi_hat_cp(&g, &s, 0.0, 0.0), nu * g.norm_squared(), epsilon = 1e-15);
        assert_relative_eq!(xi_hat_cp(&dvector![1.0, 0.0], &dvector![-0.5, 0.0], 1.0, 0.8), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn tiny_kappa_stops_on_first_descent_candidate() {
        let x = dvector![1.0, -2.0, 0.5];
        let g = dvector![0.3, 0.1, -0.4];
        let reg = Regularizer::LpNorm(LpNormReg::new(1.5, 0.7).unwrap());
        let nu = 0.5;
        let bound = crate::regularizers::step_norm_bound(
            &reg,
            &crate::regularizers::BoundInputs { x: &x, nu, ghat_norm: g.norm() },
        );
        let mut eng = cauchy_engine(&reg, &x, &g, nu, 0, SearchRule::Bisection);
        let inexact = run_prox_with_early_stop(eng.as_mut(), &query(&x, &g, nu, 1e-7, bound, ProxMode::Inexact), |y| reg.value(y));
        let mut eng = cauchy_engine(&reg, &x, &g, nu, 0, SearchRule::Bisection);
        let exact = run_prox_with_early_stop(eng.as_mut(), &query(&x, &g, nu, 1e-7, bound, ProxMode::Exact), |y| reg.value(y));
        assert_eq!(inexact.stop_reason, StopReason::EarlyNorm);
        assert_eq!(exact.stop_reason, StopReason::Native);
        assert!(exact.inner_iters >= inexact.inner_iters);
        assert!(inexact.shat.norm() >= 1e-7 * bound);
        for out in [&inexact, &exact] {
            assert!(out.xi_hat >= 0.5 / nu * out.shat.norm_squared() - 1e-10 * (1.0 + out.xi_hat.abs()));
        }
    }

    #[test]
    fn budget_returns_a_descent_candidate() {
        let x = dvector![1.0, -2.0, 0.5, 4.0];
        let g = dvector![0.3, 0.1, -0.4, 1.0];
        let reg = Regularizer::LpNorm(LpNormReg::new(1.3, 0.7).unwrap());
        let mut eng = cauchy_engine(&reg, &x, &g, 0.5, 0, SearchRule::Bisection);
        let mut q = query(&x, &g, 0.5, 1.0, 1.0, ProxMode::Exact);
        q.max_inner = 2;
        let out = run_prox_with_early_stop(eng.as_mut(), &q, |y| reg.value(y));
        assert_eq!(out.stop_reason, StopReason::Budget);
        assert!(out.xi_hat >= 0.5 / 0.5 * out.shat.norm_squared() - 1e-12);
    }
}
