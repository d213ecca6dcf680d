//! Basis pursuit denoising: `min ½‖Ax − b‖² + μ‖x‖_p` with `A` having
//! orthonormal rows and `b` a noisy measurement of a sparse signal.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::regularizers::{LpNormReg, Regularizer};
use crate::solver::{SmoothOracle, WorkCounters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpdnConfig {
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    pub noise_scale: f64,
    pub mu: f64,
    pub p: f64,
}

impl Default for BpdnConfig {
    fn default() -> Self {
        Self { rows: 200, cols: 512, nonzeros: 10, noise_scale: 1.0, mu: 0.1, p: 1.1 }
    }
}

#[derive(Debug, Clone)]
pub struct BpdnProblem {
    pub config: BpdnConfig,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub x_true: DVector<f64>,
    pub seed: u64,
}

pub fn bpdn_generate(seed: u64) -> BpdnProblem {
    bpdn_generate_with(seed, &BpdnConfig::default())
}

/// `A = Qᵀ` with `Q` the orthonormal factor of a Gaussian `cols × rows`
/// matrix; `x_true` has ±1 entries on a uniformly drawn support.
pub fn bpdn_generate_with(seed: u64, config: &BpdnConfig) -> BpdnProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (config.rows, config.cols);
    let gauss = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng));
    let a = gauss.qr().q().transpose();
    let mut x_true = DVector::zeros(n);
    for i in sample(&mut rng, n, config.nonzeros.min(n)).iter() {
        x_true[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let noise = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    let b = &a * &x_true + noise * config.noise_scale;
    BpdnProblem { config: config.clone(), a, b, x_true, seed }
}

impl BpdnProblem {
    pub fn regularizer(&self) -> Result<Regularizer> {
        Ok(Regularizer::LpNorm(LpNormReg::new(self.config.p, self.config.mu)?))
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::zeros(self.config.cols)
    }

    pub fn oracle(&self) -> LeastSquaresOracle<'_> {
        LeastSquaresOracle::new(&self.a, &self.b)
    }

    /// Writes `index x_true` rows.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# index x_true")?;
        for (i, v) in self.x_true.iter().enumerate() {
            writeln!(out, "{i} {v:.17e}")?;
        }
        Ok(())
    }
}

/// `f(x) = ½‖Ax − b‖²`. The last residual is cached so that a gradient at
/// the point just evaluated costs one product with `Aᵀ`.
pub struct LeastSquaresOracle<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    cache: Option<(DVector<f64>, DVector<f64>)>,
    work: WorkCounters,
}

impl<'a> LeastSquaresOracle<'a> {
    pub fn new(a: &'a DMatrix<f64>, b: &'a DVector<f64>) -> Self {
        Self { a, b, cache: None, work: WorkCounters::default() }
    }

    fn residual(&mut self, x: &DVector<f64>) -> DVector<f64> {
        if let Some((cx, r)) = &self.cache {
            if cx == x {
                return r.clone();
            }
        }
        let r = self.a * x - self.b;
        self.cache = Some((x.clone(), r.clone()));
        r
    }
}

impl SmoothOracle for LeastSquaresOracle<'_> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> Result<f64> {
        self.work.record_eval(prec);
        Ok(0.5 * self.residual(x).norm_squared())
    }

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>> {
        self.work.record_grad(prec);
        let r = self.residual(x);
        Ok(self.a.tr_mul(&r))
    }

    fn work(&self) -> &WorkCounters {
        &self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BpdnConfig {
        BpdnConfig { rows: 20, cols: 50, nonzeros: 4, ..Default::default() }
    }

    #[test]
    fn rows_are_orthonormal() {
        let p = bpdn_generate_with(3, &small());
        let gram = &p.a * p.a.transpose();
        assert!((gram - DMatrix::identity(20, 20)).amax() < 1e-12);
        assert_eq!(p.x_true.iter().filter(|v| **v != 0.0).count(), 4);
        assert!(p.x_true.iter().all(|v| [0.0, 1.0, -1.0].contains(v)));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = bpdn_generate_with(9, &small());
        let b = bpdn_generate_with(9, &small());
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        assert_eq!(a.x_true, b.x_true);
        let c = bpdn_generate_with(10, &small());
        assert_ne!(a.b, c.b);
    }

    #[test]
    fn noise_free_measurement() {
        let cfg = BpdnConfig { noise_scale: 0.0, ..small() };
        let p = bpdn_generate_with(1, &cfg);
        let mut o = p.oracle();
        assert!(o.eval(&p.x_true, 0.0).unwrap() < 1e-25);
    }
}
