//! Filling in the unobserved pixels of a small image with a TV_{1.1}
//! penalty.

use ir2n::problems::matcomp_generate;
use ir2n::prox::ProxMode;
use ir2n::solver::{ir2n_solve, HessianModel, SolverParams};
use ir2n::{DMatrix, DVector};

fn main() -> ir2n::Result<()> {
    let problem = matcomp_generate(0, 0.8)?;
    let mask = DVector::from_iterator(problem.dim(), problem.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
    let params = SolverParams { epsilon: 1e-3, theta2: 1e3, mode: ProxMode::Inexact, kappa_s: 1e-7, ..Default::default() };
    let hess = HessianModel::fixed(DMatrix::from_diagonal(&mask));
    let r = ir2n_solve(&mut problem.oracle(), &problem.regularizer()?, &problem.x0(), &params, hess, None)?;

    let image = problem.image_vec();
    let hidden: Vec<usize> = (0..problem.dim()).filter(|&i| !problem.mask[i]).collect();
    let err = hidden.iter().map(|&i| (r.x[i] - image[i]).abs()).sum::<f64>() / hidden.len() as f64;
    println!("{:?} after {} iterations, objective {:.5}", r.status, r.stats.outer_iters, r.stats.objective());
    println!("{} hidden pixels, mean absolute error {err:.3}", hidden.len());
    Ok(())
}
