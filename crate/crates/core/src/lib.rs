//! Inexact proximal quasi-Newton optimization for problems of the form
//! `min f(x) + h(x)` where `f` is smooth (and possibly only computable to a
//! requested accuracy) and `h` is nonsmooth, possibly nonconvex, with a
//! proximal operator that is only available through an iterative procedure.
//!
//! The crate is organised bottom-up:
//!
//! - [`regularizers`]: the three regularizers (ℓp norm, 1-D total variation,
//!   indicator of the ℓp pseudo-norm ball) with bounds on the Cauchy step norm.
//! - [`prox`]: iterative proximal engines with certificates and the
//!   early-termination wrapper.
//! - [`solver`]: the outer quasi-Newton method (`ir2n_solve`), its inner
//!   proximal-gradient solver (`ir2_solve`), Hessian models and the accuracy
//!   schedule for inexact oracles.
//! - [`problems`]: benchmark generators (basis pursuit denoising, matrix
//!   completion, FitzHugh-Nagumo parameter recovery).
//! - [`harness`]: sweeps over the inexactness parameter, trace files and
//!   summary tables.

pub mod error;
pub mod harness;
pub mod problems;
pub mod prox;
pub mod regularizers;
pub mod solver;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
