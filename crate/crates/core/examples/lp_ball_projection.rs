//! Projection onto the nonconvex ball `{x : Σ|x_i|^p ≤ r}` with `p < 1`,
//! and the convex building blocks it relies on.

use ir2n::prox::{irbp_project_engine, project_lq_ball, project_weighted_l1_ball, ProxEngine};
use ir2n::regularizers::{pseudo_norm_pow, LpBallReg};
use ir2n::DVector;

fn main() -> ir2n::Result<()> {
    let z = DVector::from_vec(vec![0.9, -0.4, 1.2, 0.1, -0.05]);

    let w = DVector::from_element(5, 1.0);
    println!("l1 ball, r = 1:   {:?}", project_weighted_l1_ball(&z, &w, 1.0).as_slice());
    println!("l1.5 ball, r = 1: {:?}", project_lq_ball(&z, 1.5, 1.0, 1e-12)?.as_slice());

    let ball = LpBallReg::new(0.5, 2.0, 5)?;
    let mut engine = irbp_project_engine(z.clone(), ball, 7);
    let mut x = z.clone();
    while let Some(c) = engine.next_candidate() {
        x = c.point;
        if engine.converged(1e-10) {
            break;
        }
    }
    println!(
        "p = 0.5 ball, r = 2: {:?}\n  Σ|x|^p = {:.6}, distance = {:.4}, feasible = {}",
        x.as_slice(),
        pseudo_norm_pow(&x, 0.5),
        (&x - &z).norm(),
        ball.is_feasible(&x)
    );
    Ok(())
}
