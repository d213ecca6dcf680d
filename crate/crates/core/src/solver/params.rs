use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::{ProxMode, SearchRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerParams {
    /// Inner tolerance as a fraction of the outer stationarity measure.
    pub kappa_in: f64,
    pub max_iter: usize,
}

impl Default for InnerParams {
    fn default() -> Self {
        Self { kappa_in: 0.1, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub theta1: f64,
    pub theta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub sigma_min: f64,
    pub sigma0: f64,
    pub epsilon: f64,
    pub kappa_s: f64,
    pub max_iter: usize,
    pub inner: InnerParams,
    pub mode: ProxMode,
    /// Native stopping tolerance handed to the proximal engines.
    pub prox_tol: f64,
    /// Iteration budget of a single proximal evaluation.
    pub prox_max_iter: usize,
    /// Consecutive proximal failures tolerated before giving up.
    pub max_prox_failures: usize,
    /// Multiplier search used by the ℓp prox.
    #[serde(skip)]
    pub lp_search: SearchRule,
    /// Seed for randomized proximal starts.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            theta1: 0.5,
            theta2: 2.0,
            gamma1: 3.0,
            gamma2: 3.0,
            gamma3: 0.5,
            eta1: 1e-4,
            eta2: 0.9,
            sigma_min: 1e-8,
            sigma0: 1.0,
            epsilon: 1e-6,
            kappa_s: 1.0,
            max_iter: 10_000,
            inner: InnerParams::default(),
            mode: ProxMode::Exact,
            prox_tol: 1e-10,
            prox_max_iter: 20_000,
            max_prox_failures: 50,
            lp_search: SearchRule::Bisection,
            seed: 0,
        }
    }
}

/// σ floor used when objective and gradient are evaluated inexactly.
pub const SIGMA_MIN_INEXACT_ORACLE: f64 = 1e-3;

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.theta1 > 0.0 && self.theta1 < 1.0) {
            return bad("theta1 must lie in (0, 1)");
        }
        if !(self.theta2 > 1.0) {
            return bad("theta2 must exceed 1");
        }
        if !(self.gamma1 > 1.0 && self.gamma1 <= self.gamma2) {
            return bad("need 1 < gamma1 ≤ gamma2");
        }
        if !(self.gamma3 > 0.0 && self.gamma3 <= 1.0) {
            return bad("gamma3 must lie in (0, 1]");
        }
        if !(self.eta1 > 0.0 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 ≤ eta2 < 1");
        }
        if !(self.sigma_min > 0.0 && self.sigma0 >= self.sigma_min) {
            return bad("need sigma_min > 0 and sigma0 ≥ sigma_min");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.kappa_s > 0.0 && self.kappa_s <= 1.0) {
            return bad("kappa_s must lie in (0, 1]");
        }
        if !(self.prox_tol > 0.0) || self.prox_max_iter == 0 {
            return bad("prox tolerance and budget must be positive");
        }
        if !(self.inner.kappa_in > 0.0) {
            return bad("inner tolerance factor must be positive");
        }
        Ok(())
    }
}
