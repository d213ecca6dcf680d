//! Quasi-Newton models `B_k` of the smooth Hessian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const DIAG_MIN: f64 = 1e-8;
const DIAG_MAX: f64 = 1e8;
const SKIP_TOL: f64 = 1e-8;
const POWER_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianKind {
    Zero,
    #[serde(rename = "diag")]
    SpectralDiagonal,
    Lsr1 { memory: usize },
}

impl HessianKind {
    pub fn lsr1() -> Self {
        HessianKind::Lsr1 { memory: 5 }
    }
}

#[derive(Debug, Clone)]
enum State {
    Zero,
    Diagonal(f64),
    Lsr1 {
        memory: usize,
        pairs: Vec<(DVector<f64>, DVector<f64>)>,
        /// Rank-one terms `r rᵀ / c` of the current matrix.
        terms: Vec<(DVector<f64>, f64)>,
    },
    Fixed(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct HessianModel {
    state: State,
    n: usize,
    norm_estimate: f64,
    skipped: usize,
}

impl HessianModel {
    pub fn new(kind: HessianKind, n: usize) -> Self {
        let (state, norm) = match kind {
            HessianKind::Zero => (State::Zero, 0.0),
            HessianKind::SpectralDiagonal => (State::Diagonal(1.0), 1.0),
            HessianKind::Lsr1 { memory } => (State::Lsr1 { memory: memory.max(1), pairs: Vec::new(), terms: Vec::new() }, 1.0),
        };
        Self { state, n, norm_estimate: norm, skipped: 0 }
    }

    /// A constant, user-supplied symmetric matrix (e.g. the exact Hessian of
    /// a quadratic). Updates leave it unchanged.
    pub fn fixed(b: DMatrix<f64>) -> Self {
        let n = b.nrows();
        let sym = (&b + b.transpose()) * 0.5;
        let norm = sym.clone().symmetric_eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self { state: State::Fixed(sym), n, norm_estimate: norm, skipped: 0 }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.state, State::Zero)
    }

    /// Estimate of `‖B‖₂`.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    /// Number of updates rejected by the skip rule so far.
    pub fn skipped_updates(&self) -> usize {
        self.skipped
    }

    /// Coefficient of the spectral model, if that is the kind in use.
    pub fn diagonal_coefficient(&self) -> Option<f64> {
        match self.state {
            State::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.state {
            State::Zero => DVector::zeros(v.len()),
            State::Diagonal(d) => v * *d,
            State::Lsr1 { terms, .. } => lsr1_apply(terms, v),
            State::Fixed(b) => b * v,
        }
    }

    /// `vᵀBv`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        match &self.state {
            State::Zero => 0.0,
            State::Diagonal(d) => d * v.norm_squared(),
            _ => v.dot(&self.apply(v)),
        }
    }

    /// Incorporates the step `s` and gradient difference `y`.
    pub fn update(&mut self, s: &DVector<f64>, y: &DVector<f64>) {
        if !s.iter().chain(y.iter()).all(|v| v.is_finite()) || s.norm() == 0.0 {
            self.skipped += 1;
            return;
        }
        match &mut self.state {
            State::Zero | State::Fixed(_) => {}
            State::Diagonal(d) => {
                let c = s.dot(y) / s.norm_squared();
                *d = if c.is_nan() { DIAG_MIN } else { c.clamp(DIAG_MIN, DIAG_MAX) };
                self.norm_estimate = *d;
            }
            State::Lsr1 { memory, pairs, terms } => {
                let r = y - lsr1_apply(terms, s);
                if r.dot(s).abs() < SKIP_TOL * r.norm() * s.norm() {
                    self.skipped += 1;
                    return;
                }
                pairs.push((s.clone(), y.clone()));
                if pairs.len() > *memory {
                    pairs.remove(0);
                }
                *terms = lsr1_rebuild(pairs);
                self.norm_estimate = power_norm(terms, self.n);
            }
        }
    }
}

fn lsr1_apply(terms: &[(DVector<f64>, f64)], v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    for (r, c) in terms {
        out.axpy(r.dot(v) / c, r, 1.0);
    }
    out
}

/// Replays the stored pairs on `B₀ = I`, skipping any pair that fails the
/// denominator safeguard against the partially rebuilt matrix.
fn lsr1_rebuild(pairs: &[(DVector<f64>, DVector<f64>)]) -> Vec<(DVector<f64>, f64)> {
    let mut terms: Vec<(DVector<f64>, f64)> = Vec::with_capacity(pairs.len());
    for (s, y) in pairs {
        let r = y - lsr1_apply(&terms, s);
        let c = r.dot(s);
        if c.abs() >= SKIP_TOL * r.norm() * s.norm() && c != 0.0 {
            terms.push((r, c));
        }
    }
    terms
}

fn power_norm(terms: &[(DVector<f64>, f64)], n: usize) -> f64 {
    // fixed, non-symmetric start vector so no eigendirection is missed by construction
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 104_729) as f64 / 104_729.0);
    v /= v.norm();
    let mut est = 1.0;
    for _ in 0..POWER_STEPS {
        let w = lsr1_apply(terms, &v);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        est = norm;
        v = w / norm;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn spd(n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        &m * m.transpose() + DMatrix::identity(n, n)
    }

    #[test]
    fn zero_model_has_zero_norm() {
        let b = HessianModel::new(HessianKind::Zero, 3);
        assert_eq!(b.norm_estimate(), 0.0);
        assert_eq!(b.apply(&dvector![1.0, 2.0, 3.0]), dvector![0.0, 0.0, 0.0]);
    }

    #[test]
    fn spectral_coefficient_is_rayleigh_quotient() {
        let h = spd(4);
        let s = dvector![1.0, -0.5, 0.2, 0.3];
        let mut b = HessianModel::new(HessianKind::SpectralDiagonal, 4);
        b.update(&s, &(&h * &s));
        assert_relative_eq!(b.diagonal_coefficient().unwrap(), s.dot(&(&h * &s)) / s.norm_squared(), epsilon = 1e-14);
    }

    #[test]
    fn spectral_coefficient_clamps_negative_curvature() {
        let mut b = HessianModel::new(HessianKind::SpectralDiagonal, 2);
        b.update(&dvector![1.0, 0.0], &dvector![-1.0, 0.0]);
        assert_eq!(b.diagonal_coefficient().unwrap(), 1e-8);
    }

    #[test]
    fn lsr1_satisfies_recent_secant_equations() {
        let h = spd(6);
        let mut b = HessianModel::new(HessianKind::Lsr1 { memory: 5 }, 6);
        let steps: Vec<DVector<f64>> =
            (0..5).map(|k| DVector::from_fn(6, |i, _| (((i + 1) * (k + 2)) % 5) as f64 - 1.5 + 0.1 * k as f64)).collect();
        for s in &steps {
            b.update(s, &(&h * s));
        }
        assert_eq!(b.skipped_updates(), 0);
        for s in &steps {
            assert_relative_eq!(b.apply(s), &h * s, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn lsr1_action_is_symmetric() {
        let h = spd(4);
        let mut b = HessianModel::new(HessianKind::lsr1(), 4);
        b.update(&dvector![1.0, 0.0, 1.0, 0.0], &(&h * dvector![1.0, 0.0, 1.0, 0.0]));
        b.update(&dvector![0.0, 1.0, -1.0, 2.0], &(&h * dvector![0.0, 1.0, -1.0, 2.0]));
        let v = dvector![0.3, -1.0, 2.0, 0.5];
        let w = dvector![1.0, 1.0, -0.5, 0.25];
        assert_relative_eq!(v.dot(&b.apply(&w)), w.dot(&b.apply(&v)), epsilon = 1e-10);
    }

    #[test]
    fn fixed_model_norm_is_spectral_norm() {
        let b = HessianModel::fixed(DMatrix::from_diagonal(&dvector![1.0, -4.0, 2.0]));
        assert_relative_eq!(b.norm_estimate(), 4.0, epsilon = 1e-12);
    }
}
