//! Proximal operator of `τ‖·‖_p` through its iterative engine, with the
//! duality gap reported for every candidate.

use ir2n::prox::{prox_lp_norm_engine, ProxEngine};
use ir2n::DVector;

fn main() {
    let q = DVector::from_vec(vec![1.5, -0.3, 0.8, 0.05]);
    let tau = 0.4;
    for p in [1.0, 1.1, 1.5, 2.0, 3.0] {
        let mut engine = prox_lp_norm_engine(q.clone(), tau, p);
        let mut steps = 0;
        let mut y = q.clone();
        let mut gap = f64::NAN;
        while let Some(c) = engine.next_candidate() {
            steps += 1;
            y = c.point;
            gap = c.certificate.map_or(0.0, |cert| cert.duality_gap);
            if engine.converged(1e-12) {
                break;
            }
        }
        println!("p = {p:<4} iterations = {steps:<3} gap = {gap:.1e}  y = {:?}", y.as_slice());
    }
}
