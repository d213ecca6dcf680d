//! The outer solver, its inner proximal-gradient solver, Hessian models,
//! smooth oracles and the accuracy schedule.

mod hessian;
mod ir2;
mod ir2n;
mod oracle;
mod params;
mod prec;

pub use hessian::{HessianKind, HessianModel};
pub use ir2::{ir2_solve, Ir2Output, QuadModel, INNER_TOL_FLOOR};
pub use ir2n::{
    classify, ir2n_solve, nu_from_sigma, rho_hat, sigma_update, IterStatus, IterationRecord, SolveResult,
    SolveStats, SolveStatus,
};
pub use oracle::{QuadraticOracle, SmoothOracle, WorkCounters, PREC_EXACT};
pub use params::{InnerParams, SolverParams, SIGMA_MIN_INEXACT_ORACLE};
pub use prec::{prec_value, PrecSchedule, PREC_HI, PREC_LO};
