//! Sparse recovery with an ℓ_{1.1} penalty, solved with the exact prox and
//! with early-terminated prox evaluations.

use ir2n::prox::ProxMode;
use ir2n::problems::{bpdn_generate_with, BpdnConfig};
use ir2n::solver::{ir2n_solve, HessianModel, SolverParams};

fn main() -> ir2n::Result<()> {
    let problem = bpdn_generate_with(0, &BpdnConfig { noise_scale: 0.01, ..Default::default() });
    let reg = problem.regularizer()?;
    let support: Vec<usize> = (0..problem.x_true.len()).filter(|&i| problem.x_true[i] != 0.0).collect();

    for (mode, kappa_s) in [(ProxMode::Exact, 1.0), (ProxMode::Inexact, 1e-7)] {
        let params = SolverParams { theta2: 1e3, mode, kappa_s, ..Default::default() };
        let hess = HessianModel::fixed(problem.a.tr_mul(&problem.a));
        let r = ir2n_solve(&mut problem.oracle(), &reg, &problem.x0(), &params, hess, None)?;
        let off_support = (0..r.x.len()).filter(|i| !support.contains(i) && r.x[*i].abs() > 0.1).count();
        println!(
            "{mode:?}: {:?} after {} iterations, prox iterations per call {:.1}, objective {:.4}, \
             large entries off the support: {off_support}",
            r.status,
            r.stats.outer_iters,
            r.stats.prox_per_call(),
            r.stats.objective()
        );
    }
    Ok(())
}
