//! Denoising a piecewise-constant signal with the prox of `τ·TV_p`.

use ir2n::prox::{prox_tvp_engine, ProxEngine};
use ir2n::regularizers::tv_norm;
use ir2n::DVector;

fn main() {
    let clean: Vec<f64> = (0..40).map(|i| if (10..25).contains(&i) { 2.0 } else { 0.0 }).collect();
    // deterministic ripple in place of noise
    let noisy = DVector::from_iterator(40, clean.iter().enumerate().map(|(i, v)| v + 0.3 * (1.7 * i as f64).sin()));
    for p in [1.1, 2.0] {
        let mut engine = prox_tvp_engine(noisy.clone(), 1.0, p);
        let mut y = noisy.clone();
        let mut iters = 0;
        while let Some(c) = engine.next_candidate() {
            y = c.point;
            iters = c.work;
            if engine.converged(1e-10) {
                break;
            }
        }
        let err = y.iter().zip(&clean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "p = {p}: {iters} iterations, TV_p {:.3} -> {:.3}, max deviation from clean {:.3}",
            tv_norm(noisy.as_slice(), p),
            tv_norm(y.as_slice(), p),
            err
        );
    }
}
