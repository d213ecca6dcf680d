//! Plugging in a user-defined smooth term: logistic regression with an
//! ℓ_{1.5} penalty, solved with an LSR1 Hessian model.

use ir2n::prox::ProxMode;
use ir2n::regularizers::{LpNormReg, Regularizer};
use ir2n::solver::{ir2n_solve, HessianKind, HessianModel, SmoothOracle, SolverParams, WorkCounters};
use ir2n::{DMatrix, DVector};

struct Logistic {
    a: DMatrix<f64>,
    labels: DVector<f64>,
    work: WorkCounters,
}

impl SmoothOracle for Logistic {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> ir2n::Result<f64> {
        self.work.record_eval(prec);
        let margins = (&self.a * x).component_mul(&self.labels);
        Ok(margins.iter().map(|m| (-m).exp().ln_1p()).sum())
    }

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> ir2n::Result<DVector<f64>> {
        self.work.record_grad(prec);
        let margins = (&self.a * x).component_mul(&self.labels);
        let weights = DVector::from_iterator(
            margins.len(),
            margins.iter().zip(self.labels.iter()).map(|(m, y)| -y / (1.0 + m.exp())),
        );
        Ok(self.a.tr_mul(&weights))
    }

    fn work(&self) -> &WorkCounters {
        &self.work
    }
}

fn main() -> ir2n::Result<()> {
    let (m, n) = (60, 8);
    let a = DMatrix::from_fn(m, n, |i, j| ((i * 7 + j * 13) % 17) as f64 / 8.0 - 1.0);
    let w_true = DVector::from_fn(n, |j, _| if j < 3 { 1.0 } else { 0.0 });
    let labels = (&a * &w_true).map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    let mut oracle = Logistic { a, labels, work: WorkCounters::default() };

    let reg = Regularizer::LpNorm(LpNormReg::new(1.5, 0.5)?);
    let params = SolverParams { epsilon: 1e-6, mode: ProxMode::Inexact, kappa_s: 1e-3, theta2: 1e3, ..Default::default() };
    let hess = HessianModel::new(HessianKind::lsr1(), n);
    let r = ir2n_solve(&mut oracle, &reg, &DVector::zeros(n), &params, hess, None)?;
    println!("{:?} after {} iterations, objective {:.5}", r.status, r.stats.outer_iters, r.stats.objective());
    println!("weights {:?}", r.x.as_slice());
    println!("{} evaluations, {} gradients", oracle.work.evals, oracle.work.grads);
    Ok(())
}
