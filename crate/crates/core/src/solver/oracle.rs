use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Accuracy used when an oracle is asked for its most accurate evaluation.
pub const PREC_EXACT: f64 = 1e-14;

/// Evaluation counts, split by the accuracy they were requested at.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkCounters {
    pub evals: usize,
    pub grads: usize,
    /// `(prec, evaluations + gradients)` in order of first use.
    pub by_prec: Vec<(f64, usize)>,
}

impl WorkCounters {
    pub fn record_eval(&mut self, prec: f64) {
        self.evals += 1;
        self.bump(prec);
    }

    pub fn record_grad(&mut self, prec: f64) {
        self.grads += 1;
        self.bump(prec);
    }

    fn bump(&mut self, prec: f64) {
        match self.by_prec.iter_mut().find(|(p, _)| *p == prec) {
            Some((_, c)) => *c += 1,
            None => self.by_prec.push((prec, 1)),
        }
    }
}

/// Smooth part `f` of the objective, possibly evaluated to a requested
/// accuracy `prec`.
pub trait SmoothOracle {
    fn dim(&self) -> usize;

    /// Exact oracles ignore `prec`.
    fn is_exact(&self) -> bool;

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> Result<f64>;

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>>;

    fn work(&self) -> &WorkCounters;
}

/// `f(x) = ½xᵀHx + cᵀx`.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    h: DMatrix<f64>,
    c: DVector<f64>,
    work: WorkCounters,
}

impl QuadraticOracle {
    pub fn new(h: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != c.len() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), got: c.len() });
        }
        Ok(Self { h, c, work: WorkCounters::default() })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }
}

impl SmoothOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> Result<f64> {
        self.work.record_eval(prec);
        Ok(0.5 * x.dot(&(&self.h * x)) + self.c.dot(x))
    }

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>> {
        self.work.record_grad(prec);
        Ok(&self.h * x + &self.c)
    }

    fn work(&self) -> &WorkCounters {
        &self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn quadratic_values_and_counters() {
        let mut o = QuadraticOracle::new(DMatrix::identity(2, 2) * 2.0, dvector![1.0, 0.0]).unwrap();
        assert_eq!(o.eval(&dvector![1.0, 1.0], 1e-3).unwrap(), 3.0);
        assert_eq!(o.grad(&dvector![1.0, 1.0], 1e-3).unwrap(), dvector![3.0, 2.0]);
        o.eval(&dvector![0.0, 0.0], 1e-5).unwrap();
        assert_eq!(o.work().evals, 2);
        assert_eq!(o.work().by_prec, vec![(1e-3, 2), (1e-5, 1)]);
    }
}
