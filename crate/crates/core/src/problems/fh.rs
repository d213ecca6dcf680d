//! Parameter recovery for the FitzHugh–Nagumo model
//!
//! ```text
//! V' = (V − V³/3 − W + x₁) / x₂,     W' = x₂ (x₃V − x₄W + x₅),
//! ```
//!
//! from noisy samples of both states. The objective is `½‖F(x)‖²` with
//! `F(x)` the stacked misfits of `V` and `W` at the sample times.

use std::io::Write;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ode::{dopri5, OdeOptions, OdeStats};
use crate::error::{Error, Result};
use crate::regularizers::{LpBallReg, Regularizer};
use crate::solver::{SmoothOracle, WorkCounters, PREC_EXACT};

/// Smallest `|x₂|` accepted before the system is rejected as degenerate.
pub const MIN_TIME_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FhConfig {
    /// Number of sample intervals; the grid has `intervals + 1` points.
    pub intervals: usize,
    pub horizon: f64,
    pub noise_scale: f64,
    pub v0: f64,
    pub w0: f64,
    pub ball_p: f64,
    pub ball_r: f64,
    pub ball_starts: usize,
}

impl Default for FhConfig {
    fn default() -> Self {
        Self { intervals: 100, horizon: 20.0, noise_scale: 0.1, v0: 2.0, w0: 0.0, ball_p: 0.5, ball_r: 2.0, ball_starts: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct FhProblem {
    pub config: FhConfig,
    pub x_true: DVector<f64>,
    pub times: Vec<f64>,
    pub v_data: Vec<f64>,
    pub w_data: Vec<f64>,
    pub seed: u64,
}

pub fn fh_true_parameters() -> DVector<f64> {
    DVector::from_vec(vec![0.0, 0.2, 1.0, 0.0, 0.0])
}

fn check_params(x: &DVector<f64>) -> Result<()> {
    if x.len() != 5 {
        return Err(Error::DimensionMismatch { expected: 5, got: x.len() });
    }
    if x[1].abs() < MIN_TIME_SCALE {
        return Err(Error::DegenerateParameter(x[1]));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite model parameter".into()));
    }
    Ok(())
}

fn rhs(x: &[f64], y: &[f64], dy: &mut [f64]) {
    let (v, w) = (y[0], y[1]);
    dy[0] = (v - v * v * v / 3.0 - w + x[0]) / x[1];
    dy[1] = x[1] * (x[2] * v - x[3] * w + x[4]);
}

/// States plus forward sensitivities `S_V = ∂V/∂x`, `S_W = ∂W/∂x`.
/// Layout: `[V, W, S_V(5), S_W(5)]`.
fn rhs_with_sensitivities(x: &[f64], y: &[f64], dy: &mut [f64]) {
    let (v, w) = (y[0], y[1]);
    let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
    let drift = v - v * v * v / 3.0 - w + x1;
    dy[0] = drift / x2;
    dy[1] = x2 * (x3 * v - x4 * w + x5);
    let fv_v = (1.0 - v * v) / x2;
    let fv_w = -1.0 / x2;
    let fw_v = x2 * x3;
    let fw_w = -x2 * x4;
    let fv_x = [1.0 / x2, -drift / (x2 * x2), 0.0, 0.0, 0.0];
    let fw_x = [0.0, x3 * v - x4 * w + x5, x2 * v, -x2 * w, x2];
    for j in 0..5 {
        let sv = y[2 + j];
        let sw = y[7 + j];
        dy[2 + j] = fv_v * sv + fv_w * sw + fv_x[j];
        dy[7 + j] = fw_v * sv + fw_w * sw + fw_x[j];
    }
}

impl FhProblem {
    fn grid(config: &FhConfig) -> Vec<f64> {
        let n = config.intervals.max(1);
        (0..=n).map(|i| config.horizon * i as f64 / n as f64).collect()
    }

    /// Samples `(V, W)` at the problem's times for parameters `x`, with the
    /// integrator tolerance set to `prec`.
    pub fn simulate(&self, x: &DVector<f64>, prec: f64) -> Result<(Vec<f64>, Vec<f64>, OdeStats)> {
        simulate_on(x, prec, [self.config.v0, self.config.w0], &self.times)
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        Ok(Regularizer::LpBall(LpBallReg::new(self.config.ball_p, self.config.ball_r, self.config.ball_starts)?))
    }

    /// Feasible starting point `0.1·(1,…,1)`.
    pub fn x0(&self) -> DVector<f64> {
        DVector::from_element(5, 0.1)
    }

    pub fn residual_len(&self) -> usize {
        2 * self.times.len()
    }

    pub fn oracle(&self, exact: bool) -> FhOracle<'_> {
        FhOracle { problem: self, exact, work: WorkCounters::default(), ode: OdeStats::default() }
    }

    /// Writes `t v_data w_data` rows.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# t v_data w_data")?;
        for i in 0..self.times.len() {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", self.times[i], self.v_data[i], self.w_data[i])?;
        }
        Ok(())
    }
}

/// [`FhProblem::simulate`] for an arbitrary initial state and grid.
pub fn simulate_on(x: &DVector<f64>, prec: f64, y0: [f64; 2], times: &[f64]) -> Result<(Vec<f64>, Vec<f64>, OdeStats)> {
    check_params(x)?;
    let xs = x.as_slice().to_vec();
    let (ys, stats) = dopri5(|_, y, dy| rhs(&xs, y, dy), &y0, times, &OdeOptions::with_tolerance(prec))?;
    Ok((ys.iter().map(|y| y[0]).collect(), ys.iter().map(|y| y[1]).collect(), stats))
}

pub fn fh_generate(seed: u64) -> Result<FhProblem> {
    fh_generate_with(seed, &FhConfig::default())
}

pub fn fh_generate_with(seed: u64, config: &FhConfig) -> Result<FhProblem> {
    let times = FhProblem::grid(config);
    let x_true = fh_true_parameters();
    let (v, w, _) = simulate_on(&x_true, PREC_EXACT, [config.v0, config.w0], &times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |s: Vec<f64>| -> Vec<f64> {
        s.into_iter()
            .map(|val| {
                let e: f64 = StandardNormal.sample(&mut rng);
                val + config.noise_scale * e
            })
            .collect()
    };
    let v_data = noisy(v);
    let w_data = noisy(w);
    Ok(FhProblem { config: config.clone(), x_true, times, v_data, w_data, seed })
}

/// Smooth oracle `½‖F(x)‖²`, gradient `J(x)ᵀF(x)` from forward sensitivities.
pub struct FhOracle<'a> {
    problem: &'a FhProblem,
    exact: bool,
    work: WorkCounters,
    ode: OdeStats,
}

impl FhOracle<'_> {
    fn prec(&self, prec: f64) -> f64 {
        if self.exact {
            PREC_EXACT
        } else {
            prec
        }
    }

    /// Integrator work summed over all evaluations.
    pub fn ode_stats(&self) -> OdeStats {
        self.ode
    }

    fn absorb(&mut self, s: OdeStats) {
        self.ode.accepted += s.accepted;
        self.ode.rejected += s.rejected;
        self.ode.rhs_evals += s.rhs_evals;
    }

    /// Stacked residual `F(x)`.
    pub fn residual(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>> {
        let prec = self.prec(prec);
        let (v, w, stats) = self.problem.simulate(x, prec)?;
        self.absorb(stats);
        let p = self.problem;
        Ok(DVector::from_iterator(
            p.residual_len(),
            v.iter().zip(&p.v_data).map(|(a, b)| a - b).chain(w.iter().zip(&p.w_data).map(|(a, b)| a - b)),
        ))
    }
}

impl SmoothOracle for FhOracle<'_> {
    fn dim(&self) -> usize {
        5
    }

    fn is_exact(&self) -> bool {
        self.exact
    }

    fn eval(&mut self, x: &DVector<f64>, prec: f64) -> Result<f64> {
        let prec = self.prec(prec);
        self.work.record_eval(prec);
        Ok(0.5 * self.residual(x, prec)?.norm_squared())
    }

    fn grad(&mut self, x: &DVector<f64>, prec: f64) -> Result<DVector<f64>> {
        let prec = self.prec(prec);
        self.work.record_grad(prec);
        check_params(x)?;
        let p = self.problem;
        let xs = x.as_slice().to_vec();
        let mut y0 = [0.0; 12];
        y0[0] = p.config.v0;
        y0[1] = p.config.w0;
        let (ys, stats) = dopri5(|_, y, dy| rhs_with_sensitivities(&xs, y, dy), &y0, &p.times, &OdeOptions::with_tolerance(prec))?;
        self.absorb(stats);
        let mut g = DVector::zeros(5);
        for (i, y) in ys.iter().enumerate() {
            let rv = y[0] - p.v_data[i];
            let rw = y[1] - p.w_data[i];
            for j in 0..5 {
                g[j] += rv * y[2 + j] + rw * y[7 + j];
            }
        }
        Ok(g)
    }

    fn work(&self) -> &WorkCounters {
        &self.work
    }
}
