//! Proximal operator of `τ‖·‖_p` through the Moreau decomposition
//! `prox(q) = q − τ Π_{B_{p'}}(q/τ)`, with `B_{p'}` the unit dual-norm ball.

use nalgebra::DVector;

use super::projections::{DualBallSearch, SearchRule};
use super::{Candidate, Certificate, ClosedFormEngine, ProxEngine};
use crate::regularizers::lp_norm;

pub struct LpProxEngine {
    inner: Inner,
}

enum Inner {
    Closed(ClosedFormEngine),
    Search(SearchState),
}

struct SearchState {
    q: DVector<f64>,
    tau: f64,
    p: f64,
    search: DualBallSearch,
    gap: f64,
}

fn soft_threshold(q: &DVector<f64>, tau: f64) -> DVector<f64> {
    q.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

impl LpProxEngine {
    /// Engine for `argmin_y ½‖y − q‖² + τ‖y‖_p`.
    pub fn new(q: DVector<f64>, tau: f64, p: f64, rule: SearchRule) -> Self {
        let inner = if tau == 0.0 {
            Inner::Closed(ClosedFormEngine::new(q, 1))
        } else if p == 1.0 {
            Inner::Closed(ClosedFormEngine::new(soft_threshold(&q, tau), 1))
        } else if p == 2.0 {
            let norm = q.norm();
            let scale = if norm > tau { 1.0 - tau / norm } else { 0.0 };
            Inner::Closed(ClosedFormEngine::new(q * scale, 1))
        } else {
            let qc = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
            let scaled: Vec<f64> = q.iter().map(|v| v / tau).collect();
            if qc == 1.0 {
                // p = ∞: dual ball is ℓ1, projected exactly
                let ones = DVector::from_element(q.len(), 1.0);
                let u = super::project_weighted_l1_ball(&DVector::from_vec(scaled), &ones, 1.0);
                Inner::Closed(ClosedFormEngine::new(&q - u * tau, 1))
            } else {
                let search = DualBallSearch::new(&scaled, qc, rule);
                if search.is_inside() {
                    Inner::Closed(ClosedFormEngine::new(DVector::zeros(q.len()), 1))
                } else {
                    Inner::Search(SearchState { q, tau, p, search, gap: f64::INFINITY })
                }
            }
        };
        Self { inner }
    }
}

impl ProxEngine for LpProxEngine {
    fn next_candidate(&mut self) -> Option<Candidate> {
        match &mut self.inner {
            Inner::Closed(c) => c.next_candidate(),
            Inner::Search(st) => {
                if !st.search.step() {
                    return None;
                }
                let u = st.search.feasible_point();
                let y = &st.q - &u * st.tau;
                let ynorm = lp_norm(y.as_slice(), st.p);
                // Hölder: uᵀy ≤ ‖u‖_{p'}‖y‖_p ≤ ‖y‖_p, so the gap is nonnegative
                st.gap = (st.tau * (ynorm - u.dot(&y))).max(0.0);
                Some(Candidate {
                    point: y,
                    work: st.search.iterations(),
                    certificate: Some(Certificate { kkt_residual: st.gap / st.tau, duality_gap: st.gap }),
                })
            }
        }
    }

    fn converged(&self, tol: f64) -> bool {
        match &self.inner {
            Inner::Closed(c) => c.converged(tol),
            Inner::Search(st) => st.gap <= tol || st.search.is_exhausted(),
        }
    }
}

/// Engine for `prox_{τ‖·‖_p}(q)` with the default multiplier search.
pub fn prox_lp_norm_engine(q: DVector<f64>, tau: f64, p: f64) -> LpProxEngine {
    LpProxEngine::new(q, tau, p, SearchRule::Bisection)
}
