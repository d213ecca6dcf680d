//! Outer quadratic-regularization quasi-Newton loop with inexact proximal
//! evaluations and an optional accuracy schedule for the smooth oracle.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::hessian::HessianModel;
use super::ir2::{ir2_solve, QuadModel};
use super::oracle::{SmoothOracle, PREC_EXACT};
use super::params::SolverParams;
use super::prec::PrecSchedule;
use crate::error::{Error, Result};
use crate::prox::{cauchy_engine, run_prox_with_early_stop, ProxQuery, StopReason};
use crate::regularizers::{step_norm_bound, BoundInputs, Regularizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterStatus {
    VerySuccessful,
    Successful,
    Unsuccessful,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    FirstOrder,
    MaxIter,
    ProxFailure,
}

/// One outer iteration that did not trigger the stopping test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    pub h: f64,
    pub xi_hat: f64,
    pub nu: f64,
    pub sigma: f64,
    /// `NaN` when the predicted decrease was degenerate.
    #[serde(deserialize_with = "nan_from_null")]
    pub rho: f64,
    pub status: IterStatus,
    pub step_norm: f64,
    pub cauchy_norm: f64,
    /// Iterations of the Cauchy-step proximal evaluation.
    pub prox_iters: usize,
    pub ir2_iters: usize,
    /// Iterations summed over the inner solver's proximal evaluations.
    pub ir2_prox_iters: usize,
    pub prec: f64,
    pub stop_reason: StopReason,
    /// Step-norm bound `M` used by the early-stop rule.
    pub bound: f64,
    /// `m(s_k)` and `m(ŝ_cp)`, both without the constant `f̂(x_k)`.
    pub model_step: f64,
    pub model_cauchy: f64,
    pub step_reset: bool,
    pub degenerate: bool,
}

// JSON has no NaN; serde_json writes it as null.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub prox_calls: usize,
    pub prox_iters: usize,
    pub evals: usize,
    pub grads: usize,
    pub final_measure: f64,
    pub f: f64,
    pub h: f64,
    pub time_s: f64,
}

impl SolveStats {
    pub fn objective(&self) -> f64 {
        self.f + self.h
    }

    pub fn inner_per_outer(&self) -> f64 {
        if self.outer_iters == 0 {
            0.0
        } else {
            self.inner_iters as f64 / self.outer_iters as f64
        }
    }

    pub fn prox_per_call(&self) -> f64 {
        if self.prox_calls == 0 {
            0.0
        } else {
            self.prox_iters as f64 / self.prox_calls as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: DVector<f64>,
    pub status: SolveStatus,
    pub trace: Vec<IterationRecord>,
    pub stats: SolveStats,
}

/// `θ1 / (‖B‖ + σ)`.
pub fn nu_from_sigma(theta1: f64, hess: &HessianModel, sigma: f64) -> f64 {
    theta1 / (hess.norm_estimate() + sigma)
}

/// Ratio of achieved to predicted decrease. `None` when the predicted
/// decrease `−ĝᵀs − ½sᵀBs + h(x) − h(x+s)` is not positive and finite.
pub fn rho_hat(
    fhat_x: f64,
    fhat_xs: f64,
    h_x: f64,
    h_xs: f64,
    ghat: &DVector<f64>,
    hess: &HessianModel,
    s: &DVector<f64>,
) -> Option<f64> {
    let pred = -ghat.dot(s) - 0.5 * hess.quad_form(s) + h_x - h_xs;
    if !(pred > 0.0 && pred.is_finite()) {
        return None;
    }
    let rho = (fhat_x + h_x - fhat_xs - h_xs) / pred;
    if rho.is_nan() {
        None
    } else {
        Some(rho)
    }
}

pub fn classify(rho: Option<f64>, params: &SolverParams) -> IterStatus {
    match rho {
        Some(r) if r >= params.eta2 => IterStatus::VerySuccessful,
        Some(r) if r >= params.eta1 => IterStatus::Successful,
        _ => IterStatus::Unsuccessful,
    }
}

pub fn sigma_update(sigma: f64, status: IterStatus, params: &SolverParams) -> f64 {
    let next = match status {
        IterStatus::VerySuccessful => params.gamma3 * sigma,
        IterStatus::Successful => sigma,
        IterStatus::Unsuccessful => params.gamma1 * sigma,
    };
    next.max(params.sigma_min)
}

/// Minimizes `f + h` from `x0`.
///
/// Without a schedule, or with an exact oracle, every evaluation requests
/// accuracy [`PREC_EXACT`]. With a schedule, the accuracy tightens after
/// every unsuccessful iteration and `f̂`, `∇̂f` are refreshed at the current
/// iterate whenever it changes.
pub fn ir2n_solve(
    oracle: &mut dyn SmoothOracle,
    reg: &Regularizer,
    x0: &DVector<f64>,
    params: &SolverParams,
    mut hess: HessianModel,
    mut schedule: Option<PrecSchedule>,
) -> Result<SolveResult> {
    params.validate()?;
    let n = oracle.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if hess.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: hess.dim() });
    }
    reg.check_dim(n)?;
    if oracle.is_exact() {
        schedule = None;
    }
    let start = Instant::now();
    let current_prec = |s: &Option<PrecSchedule>| s.map_or(PREC_EXACT, |s| s.value());

    let mut x = x0.clone();
    let mut hx = reg.value(&x);
    if !hx.is_finite() {
        return Err(Error::InfeasibleStart(hx));
    }
    let mut prec = current_prec(&schedule);
    let mut f = oracle.eval(&x, prec)?;
    let mut g = oracle.grad(&x, prec)?;
    if !f.is_finite() || !g.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { iter: 0, f, h: hx });
    }

    let mut sigma = params.sigma0;
    let mut trace = Vec::new();
    let mut stats = SolveStats::default();
    let mut failure_streak = 0;
    let mut status = SolveStatus::MaxIter;

    for k in 0..params.max_iter {
        let nu = nu_from_sigma(params.theta1, &hess, sigma);
        let bound = step_norm_bound(reg, &BoundInputs { x: &x, nu, ghat_norm: g.norm() });
        let seed = params.seed.wrapping_add(k as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
        let mut engine = cauchy_engine(reg, &x, &g, nu, seed, params.lp_search);
        let query = ProxQuery {
            x: &x,
            ghat: &g,
            nu,
            kappa_s: params.kappa_s,
            bound,
            mode: params.mode,
            native_tol: params.prox_tol,
            max_inner: params.prox_max_iter,
        };
        let cp = run_prox_with_early_stop(engine.as_mut(), &query, |y| reg.value(y));
        stats.prox_calls += 1;
        stats.prox_iters += cp.inner_iters;
        let shat = cp.shat;
        let cauchy_norm = shat.norm();
        let measure = cauchy_norm / nu;
        // a budget stop that found no descent candidate says nothing about stationarity
        let failed = cp.stop_reason == StopReason::Failure || (cp.stop_reason == StopReason::Budget && cauchy_norm == 0.0);

        if !failed && measure <= params.epsilon {
            stats.final_measure = measure;
            status = SolveStatus::FirstOrder;
            break;
        }

        let mut record = IterationRecord {
            k,
            f,
            h: hx,
            xi_hat: cp.xi_hat,
            nu,
            sigma,
            rho: f64::NAN,
            status: IterStatus::Unsuccessful,
            step_norm: 0.0,
            cauchy_norm,
            prox_iters: cp.inner_iters,
            ir2_iters: 0,
            ir2_prox_iters: 0,
            prec,
            stop_reason: cp.stop_reason,
            bound,
            model_step: 0.0,
            model_cauchy: 0.0,
            step_reset: false,
            degenerate: false,
        };

        let mut accepted = false;
        if failed {
            failure_streak += 1;
            record.degenerate = true;
            if failure_streak >= params.max_prox_failures {
                trace.push(record);
                stats.outer_iters += 1;
                stats.final_measure = measure;
                status = SolveStatus::ProxFailure;
                break;
            }
        } else {
            failure_streak = 0;
            let model = QuadModel { x: &x, ghat: &g, hess: &hess, sigma };
            let inner = ir2_solve(&model, reg, &shat, params, measure);
            stats.inner_iters += inner.iters;
            stats.prox_calls += inner.iters;
            stats.prox_iters += inner.prox_iters;
            record.ir2_iters = inner.iters;
            record.ir2_prox_iters = inner.prox_iters;
            let mut s = inner.s;
            if s.norm() > params.theta2 * cauchy_norm {
                s = shat.clone();
                record.step_reset = true;
            }
            record.model_cauchy = model.value(&shat, reg);
            record.model_step = model.value(&s, reg);
            record.step_norm = s.norm();

            let trial = &x + &s;
            let h_trial = reg.value(&trial);
            let f_trial = if h_trial.is_finite() { oracle.eval(&trial, prec).unwrap_or(f64::INFINITY) } else { f64::INFINITY };
            let rho = rho_hat(f, f_trial, hx, h_trial, &g, &hess, &s);
            record.degenerate = rho.is_none();
            record.rho = rho.unwrap_or(f64::NAN);
            record.status = classify(rho, params);
            if record.status != IterStatus::Unsuccessful {
                match oracle.grad(&trial, prec) {
                    Ok(g_trial) if g_trial.iter().all(|v| v.is_finite()) => {
                        hess.update(&s, &(&g_trial - &g));
                        x = trial;
                        f = f_trial;
                        hx = h_trial;
                        g = g_trial;
                        accepted = true;
                    }
                    _ => record.status = IterStatus::Unsuccessful,
                }
            }
        }

        sigma = sigma_update(sigma, record.status, params);
        trace.push(record);
        stats.outer_iters += 1;

        if !accepted {
            if let Some(sched) = schedule.as_mut() {
                sched.record_failure();
                let next = sched.value();
                if next != prec {
                    prec = next;
                    f = oracle.eval(&x, prec)?;
                    g = oracle.grad(&x, prec)?;
                    if !f.is_finite() || !g.iter().all(|v| v.is_finite()) {
                        return Err(Error::NonFinite { iter: k, f, h: hx });
                    }
                }
            }
        }
    }

    stats.f = f;
    stats.h = hx;
    stats.evals = oracle.work().evals;
    stats.grads = oracle.work().grads;
    stats.time_s = start.elapsed().as_secs_f64();
    Ok(SolveResult { x, status, trace, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::LpNormReg;
    use crate::solver::hessian::HessianKind;
    use crate::solver::oracle::QuadraticOracle;
    use approx::assert_relative_eq;
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn nu_examples() {
        let zero = HessianModel::new(HessianKind::Zero, 2);
        assert_eq!(nu_from_sigma(0.5, &zero, 2.0), 0.25);
        let fixed = HessianModel::fixed(DMatrix::from_diagonal(&dvector![3.0, 1.0]));
        assert_relative_eq!(nu_from_sigma(0.5, &fixed, 1.0), 0.125, epsilon = 1e-15);
        assert!(nu_from_sigma(0.5, &zero, 10.0) < nu_from_sigma(0.5, &zero, 1.0));
    }

    #[test]
    fn sigma_update_examples() {
        let p = SolverParams::default();
        assert_eq!(sigma_update(2.0, classify(Some(0.95), &p), &p), 1.0);
        assert_eq!(sigma_update(2.0, classify(Some(-1.0), &p), &p), 6.0);
        assert_eq!(sigma_update(2.0, classify(Some(0.5), &p), &p), 2.0);
        assert_eq!(sigma_update(1.5e-8, IterStatus::VerySuccessful, &p), 1e-8);
    }

    #[test]
    fn rho_is_one_on_exact_quadratic_model() {
        let hm = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let hess = HessianModel::fixed(hm.clone());
        let f = |x: &DVector<f64>| 0.5 * x.dot(&(&hm * x)) + x[0];
        let x = dvector![0.4, -1.0];
        let g = &hm * &x + dvector![1.0, 0.0];
        let s = dvector![-0.3, 0.2];
        let rho = rho_hat(f(&x), f(&(&x + &s)), 0.0, 0.0, &g, &hess, &s).unwrap();
        assert_relative_eq!(rho, 1.0, epsilon = 1e-12);
        // no achieved decrease
        let rho = rho_hat(1.0, 1.0, 0.0, 0.0, &g, &hess, &s).unwrap();
        assert_eq!(rho, 0.0);
        // non-descent direction is degenerate
        assert!(rho_hat(1.0, 1.0, 0.0, 0.0, &g, &hess, &(-&s * 10.0)).is_none());
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let mut o = QuadraticOracle::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let reg = Regularizer::LpNorm(LpNormReg::new(1.5, 0.1).unwrap());
        let res = ir2n_solve(&mut o, &reg, &DVector::zeros(3), &SolverParams::default(), HessianModel::new(HessianKind::Zero, 3), None).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrder);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn smooth_quadratic_with_exact_hessian() {
        let n = 10;
        let m = DMatrix::from_fn(n, n, |i, j| (((i + 1) * (j + 2)) % 7) as f64 / 7.0 - 0.4);
        let h = &m * m.transpose() + DMatrix::identity(n, n);
        let c = DVector::from_fn(n, |i, _| (i as f64 - 4.5) / 3.0);
        let xstar = h.clone().lu().solve(&(-&c)).unwrap();
        // θ1·θ2 ≤ 1 resets every Newton step longer than the Cauchy step,
        // so the default cap is lifted to let the exact Hessian act
        let params = SolverParams { epsilon: 1e-6, theta2: 100.0, ..Default::default() };
        let mut o = QuadraticOracle::new(h.clone(), c.clone()).unwrap();
        let res = ir2n_solve(&mut o, &Regularizer::Zero, &DVector::zeros(n), &params, HessianModel::fixed(h.clone()), None).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrder);
        assert!(res.stats.outer_iters <= 50, "{} iterations", res.stats.outer_iters);
        assert_relative_eq!(res.x, xstar, epsilon = 1e-6);

        let params = SolverParams { epsilon: 1e-6, ..Default::default() };
        let mut o = QuadraticOracle::new(h.clone(), c.clone()).unwrap();
        let res = ir2n_solve(&mut o, &Regularizer::Zero, &DVector::zeros(n), &params, HessianModel::fixed(h), None).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrder);
        assert!(res.trace.iter().all(|r| r.step_norm <= 2.0 * r.cauchy_norm * (1.0 + 1e-12)));
        assert_relative_eq!(res.x, xstar, epsilon = 1e-6);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let mut o = QuadraticOracle::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let reg = Regularizer::LpBall(crate::regularizers::LpBallReg::new(0.5, 1.0, 1).unwrap());
        let err = ir2n_solve(&mut o, &reg, &dvector![5.0, 5.0], &SolverParams::default(), HessianModel::new(HessianKind::Zero, 2), None);
        assert!(matches!(err, Err(Error::InfeasibleStart(_))));
    }
}
