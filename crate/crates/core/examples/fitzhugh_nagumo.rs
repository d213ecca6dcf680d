//! Recovering FitzHugh-Nagumo parameters from noisy trajectories inside an
//! ℓ_{0.5} ball, with ODE solves whose accuracy tightens as the method
//! progresses.

use ir2n::problems::{fh_generate, fh_true_parameters};
use ir2n::prox::ProxMode;
use ir2n::solver::{ir2n_solve, HessianKind, HessianModel, PrecSchedule, SolverParams, SIGMA_MIN_INEXACT_ORACLE};

fn main() -> ir2n::Result<()> {
    let problem = fh_generate(0)?;
    let reg = problem.regularizer()?;
    let params = SolverParams {
        epsilon: 1e-5,
        theta2: 1.0 / f64::EPSILON,
        mode: ProxMode::Inexact,
        kappa_s: 1e-7,
        sigma_min: SIGMA_MIN_INEXACT_ORACLE,
        ..Default::default()
    };
    let hess = HessianModel::new(HessianKind::lsr1(), 5);
    let mut oracle = problem.oracle(false);
    let r = ir2n_solve(&mut oracle, &reg, &problem.x0(), &params, hess, Some(PrecSchedule::new(100)))?;
    println!("{:?} after {} iterations in {:.2} s", r.status, r.stats.outer_iters, r.stats.time_s);
    println!("recovered  {:?}", r.x.as_slice());
    println!("generating {:?}", fh_true_parameters().as_slice());
    println!("final accuracy {:.1e}", r.trace.last().map_or(f64::NAN, |t| t.prec));
    Ok(())
}
