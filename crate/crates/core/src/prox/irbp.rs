//! Projection onto the nonconvex ball `{y : Σ|y_i|^p ≤ r}`, `0 < p < 1`, by
//! iteratively reweighted ℓ1-ball projections.
//!
//! Each sweep linearizes the concave map `t ↦ (t + ε)^p` at the current
//! magnitudes, projects onto the resulting weighted ℓ1 ball exactly, and
//! shrinks the smoothing `ε`. Iterates stay feasible, so every candidate is
//! a point of the ball. Several starts run in lockstep and the candidate is
//! the best of them.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::projections::project_weighted_l1_ball;
use super::{Candidate, ProxEngine};
use crate::regularizers::LpBallReg;

const EPS_DECAY: f64 = 0.9;
/// Fraction of a start's slack `r − Σ m_i^p` spent on the smoothing.
const SLACK_SHARE: f64 = 0.9;

struct Start {
    mag: DVector<f64>,
    eps: DVector<f64>,
    alive: bool,
    change: f64,
}

impl Start {
    fn new(mag: DVector<f64>, reg: &LpBallReg) -> Self {
        let used: f64 = mag.iter().map(|m| m.powf(reg.p)).sum();
        let slack = (reg.r - used).max(0.0);
        let n = mag.len() as f64;
        let e = (SLACK_SHARE * slack / n).powf(1.0 / reg.p);
        let eps = DVector::from_element(mag.len(), e);
        let alive = used <= reg.r * (1.0 + 1e-12) && mag.iter().all(|m| m.is_finite());
        Self { mag, eps, alive, change: f64::INFINITY }
    }

    fn sweep(&mut self, target: &DVector<f64>, reg: &LpBallReg) {
        if !self.alive {
            return;
        }
        let p = reg.p;
        let n = self.mag.len();
        let mut w = DVector::zeros(n);
        let mut radius = reg.r;
        for i in 0..n {
            let t = self.mag[i] + self.eps[i];
            radius -= t.powf(p);
            if t > 0.0 {
                w[i] = p * t.powf(p - 1.0);
                radius += w[i] * self.mag[i];
            } else {
                w[i] = f64::INFINITY;
            }
        }
        if !(radius >= 0.0) {
            self.alive = false;
            return;
        }
        let next = project_weighted_l1_ball(target, &w, radius);
        let scale = self.mag.norm().max(1.0);
        let step = (&next - &self.mag).norm();
        let eps_step = (1.0 - EPS_DECAY) * self.eps.norm();
        self.change = step.max(eps_step) / scale;
        self.mag = next;
        self.eps *= EPS_DECAY;
        if !self.mag.iter().all(|m| m.is_finite()) {
            self.alive = false;
        }
    }
}

pub struct IrbpEngine {
    target: DVector<f64>,
    sign: DVector<f64>,
    reg: LpBallReg,
    seed: u64,
    anchor: Option<DVector<f64>>,
    starts: Vec<Start>,
    sweeps: usize,
    trivial: bool,
    emitted: bool,
}

impl IrbpEngine {
    /// Engine for the projection of `z` onto the ball described by `reg`.
    pub fn new(z: DVector<f64>, reg: LpBallReg, seed: u64) -> Self {
        let sign = z.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
        let target = z.abs();
        let trivial = reg.is_feasible(&z);
        Self { target, sign, reg, seed, anchor: None, starts: Vec::new(), sweeps: 0, trivial, emitted: false }
    }

    /// Uses the feasible point `x` as the first start. The sweeps from it
    /// never move farther from `z` than `x` itself.
    pub fn with_anchor(mut self, x: &DVector<f64>) -> Self {
        if self.reg.is_feasible(x) {
            self.anchor = Some(x.clone());
        }
        self
    }

    fn init_starts(&mut self) {
        let reg = self.reg;
        let p = reg.p;
        let n = self.target.len();
        let mut mags = Vec::with_capacity(reg.starts);
        match &self.anchor {
            // coordinates whose sign disagrees with z are moved to zero, which
            // keeps feasibility and brings the point closer to z
            Some(x) => mags.push(DVector::from_iterator(
                n,
                x.iter().zip(self.sign.iter()).map(|(xi, si)| if xi * si > 0.0 { xi.abs() } else { 0.0 }),
            )),
            None => mags.push(DVector::zeros(n)),
        }
        let total: f64 = self.target.iter().map(|v| v.powf(p)).sum();
        let boundary = &self.target * (reg.r / total).powf(1.0 / p);
        if mags.len() < reg.starts {
            mags.push(boundary.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        while mags.len() < reg.starts {
            let mut m = boundary.map(|b| b * rng.random_range(0.2..1.0));
            let used: f64 = m.iter().map(|v| v.powf(p)).sum();
            let cap = SLACK_SHARE * reg.r;
            if used > cap {
                m *= (cap / used).powf(1.0 / p);
            }
            mags.push(m);
        }
        self.starts = mags.into_iter().map(|m| Start::new(m, &reg)).collect();
    }

    fn best_start(&self) -> Option<&Start> {
        self.starts.iter().filter(|s| s.alive).min_by(|a, b| {
            let da = (&a.mag - &self.target).norm_squared();
            let db = (&b.mag - &self.target).norm_squared();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

impl ProxEngine for IrbpEngine {
    fn next_candidate(&mut self) -> Option<Candidate> {
        if self.trivial {
            if self.emitted {
                return None;
            }
            self.emitted = true;
            return Some(Candidate { point: self.sign.component_mul(&self.target), work: 0, certificate: None });
        }
        if self.starts.is_empty() {
            self.init_starts();
        }
        for s in &mut self.starts {
            s.sweep(&self.target, &self.reg);
        }
        self.sweeps += 1;
        let best = self.best_start()?;
        Some(Candidate { point: self.sign.component_mul(&best.mag), work: self.sweeps, certificate: None })
    }

    fn converged(&self, tol: f64) -> bool {
        if self.trivial {
            return self.emitted;
        }
        let mut alive = self.starts.iter().filter(|s| s.alive).peekable();
        alive.peek().is_some() && alive.all(|s| s.change <= tol)
    }

    fn failed(&self) -> bool {
        !self.trivial && !self.starts.is_empty() && self.starts.iter().all(|s| !s.alive)
    }
}

/// Engine for the projection of `z` onto `{Σ|y_i|^p ≤ r}` without an anchor.
pub fn irbp_project_engine(z: DVector<f64>, reg: LpBallReg, seed: u64) -> IrbpEngine {
    IrbpEngine::new(z, reg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::pseudo_norm_pow;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn run(mut e: IrbpEngine) -> Candidate {
        let mut last = None;
        while let Some(c) = e.next_candidate() {
            last = Some(c);
            if e.converged(1e-10) || last.as_ref().unwrap().work >= 5000 {
                break;
            }
        }
        last.unwrap()
    }

    #[test]
    fn feasible_input_is_returned_with_no_work() {
        let reg = LpBallReg::new(0.5, 2.0, 3).unwrap();
        let c = run(irbp_project_engine(dvector![0.1, 0.2], reg, 0));
        assert_eq!(c.point, dvector![0.1, 0.2]);
        assert_eq!(c.work, 0);
    }

    #[test]
    fn single_coordinate_is_clipped_to_the_boundary() {
        // r = 1, p = 1/2: the projection of (4, 0) is (1, 0)
        let reg = LpBallReg::new(0.5, 1.0, 3).unwrap();
        let c = run(irbp_project_engine(dvector![4.0, 0.0], reg, 1));
        assert_relative_eq!(c.point, dvector![1.0, 0.0], epsilon = 1e-6);
    }

    #[test]
    fn candidates_are_feasible_and_keep_signs() {
        let reg = LpBallReg::new(0.5, 2.0, 4).unwrap();
        let z = dvector![3.0, -1.0, 0.5, -2.5];
        let mut e = irbp_project_engine(z.clone(), reg, 7);
        for _ in 0..50 {
            let c = e.next_candidate().unwrap();
            assert!(pseudo_norm_pow(&c.point, 0.5) <= 2.0 + 1e-8);
            for i in 0..4 {
                assert!(c.point[i] * z[i] >= 0.0);
            }
        }
    }

    #[test]
    fn anchor_start_never_moves_away() {
        let reg = LpBallReg::new(0.5, 1.0, 1).unwrap();
        let x = dvector![0.25, 0.0, -0.04];
        assert!(reg.is_feasible(&x));
        let z = dvector![2.0, -0.5, 1.0];
        let mut e = IrbpEngine::new(z.clone(), reg, 3).with_anchor(&x);
        let c = e.next_candidate().unwrap();
        assert!((&c.point - &z).norm() <= (&x - &z).norm() + 1e-12);
    }
}
