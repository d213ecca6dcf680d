//! Matrix completion with total-variation regularization:
//! `min ½‖P(X − A)‖²_F + μ TV_p(vec X)`, where `P` keeps a random subset of
//! pixels and `vec` stacks columns.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularizers::{Regularizer, TvpReg};
use crate::solver::{SmoothOracle, WorkCounters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatCompConfig {
    pub rows: usize,
    pub cols: usize,
    pub sampling_rate: f64,
    pub mu: f64,
    pub p: f64,
}

impl Default for MatCompConfig {
    fn default() -> Self {
        Self { rows: 10, cols: 12, sampling_rate: 0.8, mu: 0.1, p: 1.1 }
    }
}

#[derive(Debug, Clone)]
pub struct MatCompProblem {
    pub config: MatCompConfig,
    pub image: DMatrix<f64>,
    /// Column-major, `true` where the pixel is observed.
    pub mask: Vec<bool>,
    pub seed: u64,
}

/// `A[i, j] = sin(πi/9)·cos(πj/11)`.
pub fn matcomp_image(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| (PI * i as f64 / 9.0).sin() * (PI * j as f64 / 11.0).cos())
}

pub fn matcomp_generate(seed: u64, sampling_rate: f64) -> Result<MatCompProblem> {
    matcomp_generate_with(seed, &MatCompConfig { sampling_rate, ..Default::default() })
}

pub fn matcomp_generate_with(seed: u64, config: &MatCompConfig) -> Result<MatCompProblem> {
    if !(config.sampling_rate > 0.0 && config.sampling_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling rate must lie in (0, 1], got {}", config.sampling_rate)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.rows * config.cols;
    let mask = (0..n).map(|_| rng.random::<f64>() < config.sampling_rate).collect();
    Ok(MatCompProblem { config: config.clone(), image: matcomp_image(config.rows, config.cols), mask, seed })
}

impl MatCompProblem {
    pub fn dim(&self) -> usize {
        self.config.rows * self.config.cols
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        Ok(Regularizer::Tvp(TvpReg::new(self.config.p, self.config.mu, self.dim())?))
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    pub fn image_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(self.image.as_slice())
    }

    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.config.rows, self.config.cols, x.as_slice())
    }

    pub fn oracle(&self) -> MaskedOracle<'_> {
        MaskedOracle { target: self.image_vec(), mask: &self.mask, work: WorkCounters::default() }
    }

    /// Writes `row col image observed` rows.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# row col image observed")?;
        for j in 0..self.config.cols {
            for i in 0..self.config.rows {
                let k = i + j * self.config.rows;
                writeln!(out, "{i} {j} {:.17e} {}", self.image[(i, j)], u8::from(self.mask[k]))?;
            }
        }
        Ok(())
    }
}

/// `f(x) = ½Σ_{observed} (x_k − a_k)²`.
pub struct MaskedOracle<'a> {
    target: DVector<f64>,
    mask: &'a [bool],
    work: WorkCounters,
}

impl SmoothOracle for MaskedOracle<'_> {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> Result<f64> {
        self.work.record_eval(prec);
        let mut s = 0.0;
        for k in 0..x.len() {
            if self.mask[k] {
                let d = x[k] - self.target[k];
                s += d * d;
            }
        }
        Ok(0.5 * s)
    }

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>> {
        self.work.record_grad(prec);
        Ok(DVector::from_fn(x.len(), |k, _| if self.mask[k] { x[k] - self.target[k] } else { 0.0 }))
    }

    fn work(&self) -> &WorkCounters {
        &self.work
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_is_a_fixed_pattern() {
        let a = matcomp_image(10, 12);
        assert_eq!(a[(0, 5)], 0.0);
        assert!((a[(3, 0)] - (PI / 3.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn objective_vanishes_at_image() {
        let p = matcomp_generate(4, 0.8).unwrap();
        let mut o = p.oracle();
        let x = p.image_vec();
        assert_eq!(o.eval(&x, 0.0).unwrap(), 0.0);
        assert_eq!(o.grad(&x, 0.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn unobserved_pixels_do_not_matter() {
        let p = matcomp_generate(5, 0.5).unwrap();
        let k = p.mask.iter().position(|m| !m).unwrap();
        let mut o = p.oracle();
        let x = p.x0();
        let mut y = x.clone();
        y[k] = 7.0;
        assert_eq!(o.eval(&x, 0.0).unwrap(), o.eval(&y, 0.0).unwrap());
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(matcomp_generate(0, 0.0).is_err());
        assert!(matcomp_generate(0, 1.5).is_err());
    }
}
