//! Nonsmooth regularizers and bounds on the norm of exact Cauchy steps.
//!
//! Each regularizer `h` knows its value and a computable upper bound `M` on
//! `‖s_cp‖` for every exact minimizer of
//! `ĝᵀs + ½ν⁻¹‖s‖² + h(x + s)`. The bound drives early termination of the
//! iterative proximal engines: a candidate with `‖ŝ‖ ≥ κ_s·M` is long enough.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack added to the pseudo-norm ball radius when testing feasibility.
pub const BALL_FEASIBILITY_TOL: f64 = 1e-8;

/// `μ‖x‖_p` with `1 ≤ p < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNormReg {
    pub p: f64,
    pub mu: f64,
}

impl LpNormReg {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("ℓp exponent must satisfy 1 ≤ p < ∞, got {p}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight must be nonnegative, got {mu}")));
        }
        Ok(Self { p, mu })
    }
}

/// `μ‖Ax‖_p` with `A` the `(n−1)×n` first-difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvpReg {
    pub p: f64,
    pub mu: f64,
    pub n: usize,
}

impl TvpReg {
    pub fn new(p: f64, mu: f64, n: usize) -> Result<Self> {
        LpNormReg::new(p, mu)?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("total variation needs n ≥ 2, got {n}")));
        }
        Ok(Self { p, mu, n })
    }

    /// `‖A‖₂ = 2 sin(π(n−1)/(2n))`.
    pub fn difference_norm(&self) -> f64 {
        difference_operator_norm(self.n)
    }
}

/// Indicator of `{x : ‖x‖_p^p ≤ r}` with `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpBallReg {
    pub p: f64,
    pub r: f64,
    /// Number of independent starts used by the projection engine.
    pub starts: usize,
}

impl LpBallReg {
    pub fn new(p: f64, r: f64, starts: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("pseudo-norm exponent must satisfy 0 < p < 1, got {p}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
        }
        if starts == 0 {
            return Err(Error::InvalidParameter("at least one start is required".into()));
        }
        Ok(Self { p, r, starts })
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        pseudo_norm_pow(x, self.p) <= self.r + BALL_FEASIBILITY_TOL
    }
}

/// Inputs of the step-norm bound at the current iterate.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub x: &'a DVector<f64>,
    pub nu: f64,
    pub ghat_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regularizer {
    /// `h ≡ 0`; the prox is the identity. Useful for smooth problems.
    Zero,
    LpNorm(LpNormReg),
    Tvp(TvpReg),
    LpBall(LpBallReg),
}

impl Regularizer {
    /// Value of `h` at `x`. For the total-variation kind the caller is
    /// responsible for `x.len() == n` (see [`Regularizer::check_dim`]).
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::LpNorm(reg) => lp_value(x, reg),
            Regularizer::Tvp(reg) => reg.mu * tv_norm(x.as_slice(), reg.p),
            Regularizer::LpBall(reg) => lpball_value(x, reg),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Regularizer::Tvp(reg) if reg.n != n => Err(Error::DimensionMismatch { expected: reg.n, got: n }),
            _ => Ok(()),
        }
    }

    pub fn step_norm_bound(&self, b: &BoundInputs<'_>) -> f64 {
        step_norm_bound(self, b)
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Regularizer::LpBall(_))
    }
}

/// `‖x‖_p` evaluated with max-abs scaling so large `p` does not overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    }
    if p.is_infinite() {
        return scale;
    }
    scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `Σ|x_i|^p`.
pub fn pseudo_norm_pow(x: &DVector<f64>, p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum()
}

/// `‖Ax‖_p` for the first-difference operator.
pub fn tv_norm(x: &[f64], p: f64) -> f64 {
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    lp_norm(&diffs, p)
}

pub fn lp_value(x: &DVector<f64>, reg: &LpNormReg) -> f64 {
    if reg.mu == 0.0 {
        return 0.0;
    }
    reg.mu * lp_norm(x.as_slice(), reg.p)
}

pub fn tvp_value(x: &DVector<f64>, reg: &TvpReg) -> Result<f64> {
    if x.len() != reg.n {
        return Err(Error::DimensionMismatch { expected: reg.n, got: x.len() });
    }
    Ok(reg.mu * tv_norm(x.as_slice(), reg.p))
}

pub fn lpball_value(x: &DVector<f64>, reg: &LpBallReg) -> f64 {
    if reg.is_feasible(x) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Bound on `‖u‖₂` for `u` in the unit ball of the dual norm of `ℓp`:
/// `n^{1/p − 1/2}` when `p < 2`, `1` otherwise.
pub fn dual_ball_factor(n: usize, p: f64) -> f64 {
    if p < 2.0 {
        (n as f64).powf(1.0 / p - 0.5)
    } else {
        1.0
    }
}

pub fn difference_operator_norm(n: usize) -> f64 {
    2.0 * (PI * (n as f64 - 1.0) / (2.0 * n as f64)).sin()
}

/// Upper bound `M` on the norm of any exact Cauchy step.
pub fn step_norm_bound(reg: &Regularizer, b: &BoundInputs<'_>) -> f64 {
    let n = b.x.len();
    match reg {
        Regularizer::Zero => b.nu * b.ghat_norm,
        Regularizer::LpNorm(r) => b.nu * (b.ghat_norm + r.mu * dual_ball_factor(n, r.p)),
        Regularizer::Tvp(r) => {
            b.nu * (b.ghat_norm + r.mu * difference_operator_norm(n) * dual_ball_factor(n, r.p))
        }
        Regularizer::LpBall(r) => r.r.powf(1.0 / r.p) + b.x.norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn lp_values() {
        let one = LpNormReg::new(2.0, 1.0).unwrap();
        assert_relative_eq!(lp_value(&dvector![3.0, 4.0], &one), 5.0, epsilon = 1e-14);
        let l1 = LpNormReg::new(1.0, 1.0).unwrap();
        assert_relative_eq!(lp_value(&dvector![1.0, -2.0, 3.0], &l1), 6.0, epsilon = 1e-14);
        let reg = LpNormReg::new(1.1, 0.1).unwrap();
        // 0.1 * 2^(1/1.1), 30-digit mpmath evaluation
        assert_relative_eq!(lp_value(&dvector![1.0, 1.0], &reg), 0.187_786_182_132_341_27, epsilon = 1e-15);
    }

    #[test]
    fn tv_values() {
        let reg = TvpReg::new(1.0, 1.0, 3).unwrap();
        assert_eq!(tvp_value(&dvector![1.0, 2.0, 4.0], &reg).unwrap(), 3.0);
        assert_eq!(tvp_value(&dvector![2.5, 2.5, 2.5], &reg).unwrap(), 0.0);
        let reg2 = TvpReg::new(2.0, 1.0, 3).unwrap();
        assert_relative_eq!(tvp_value(&dvector![0.0, 3.0, 7.0], &reg2).unwrap(), 5.0, epsilon = 1e-14);
        assert!(matches!(
            tvp_value(&dvector![1.0, 2.0], &reg),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn ball_indicator() {
        let reg = LpBallReg::new(0.5, 2.0, 1).unwrap();
        assert_eq!(lpball_value(&dvector![0.0, 0.0], &reg), 0.0);
        assert_eq!(lpball_value(&dvector![1.0, 1.0], &reg), 0.0);
        assert_eq!(lpball_value(&dvector![9.0, 0.0], &reg), f64::INFINITY);
    }

    #[test]
    fn bounds_match_closed_forms() {
        let x = DVector::zeros(4);
        let lp = Regularizer::LpNorm(LpNormReg::new(3.0, 1.0).unwrap());
        let m = step_norm_bound(&lp, &BoundInputs { x: &x, nu: 0.1, ghat_norm: 2.0 });
        assert_relative_eq!(m, 0.3, epsilon = 1e-15);

        let x2 = DVector::zeros(2);
        let tv = Regularizer::Tvp(TvpReg::new(3.0, 1.0, 2).unwrap());
        let m = step_norm_bound(&tv, &BoundInputs { x: &x2, nu: 1.0, ghat_norm: 0.0 });
        assert_relative_eq!(m, 2f64.sqrt(), epsilon = 1e-15);

        let ball = Regularizer::LpBall(LpBallReg::new(0.5, 2.0, 1).unwrap());
        let xb = dvector![1.0, 0.0];
        let m = step_norm_bound(&ball, &BoundInputs { x: &xb, nu: 0.3, ghat_norm: 7.0 });
        assert_relative_eq!(m, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn both_branches_agree_at_two() {
        assert_eq!(dual_ball_factor(17, 2.0), 1.0);
        assert_relative_eq!(dual_ball_factor(17, 2.0 - 1e-12), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LpNormReg::new(0.5, 1.0).is_err());
        assert!(LpNormReg::new(1.5, -1.0).is_err());
        assert!(TvpReg::new(1.5, 1.0, 1).is_err());
        assert!(LpBallReg::new(1.0, 1.0, 1).is_err());
        assert!(LpBallReg::new(0.5, 0.0, 1).is_err());
        assert!(LpBallReg::new(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn large_exponent_does_not_overflow() {
        let x = dvector![1e200, 1e200];
        let v = lp_norm(x.as_slice(), 11.0);
        assert!(v.is_finite());
        assert_relative_eq!(v, 1e200 * 2f64.powf(1.0 / 11.0), max_relative = 1e-12);
    }
}
