//! Euclidean projections onto ℓq balls and weighted ℓ1 balls.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::regularizers::lp_norm;

/// Iteration cap for the multiplier search in [`project_lq_ball`].
const MAX_SEARCH_ITERS: usize = 200;

/// Relative slack under which a point counts as inside the ball.
const INSIDE_SLACK: f64 = 1e-12;

/// How the Lagrange multiplier of the ℓq-ball projection is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchRule {
    /// Plain bracketing bisection (geometric while the bracket spans scales).
    #[default]
    Bisection,
    /// Newton steps on the constraint residual, safeguarded by the bracket.
    SafeguardedNewton,
}

/// Solves `w + λ q w^{q−1} = a` for `w ∈ [0, a]`, i.e. the stationarity
/// equation of `½(w − a)² + λ w^q` on one coordinate.
pub(crate) fn shrink_coord(a: f64, lam: f64, q: f64) -> f64 {
    if a == 0.0 || lam == 0.0 {
        return a;
    }
    if q == 2.0 {
        return a / (1.0 + 2.0 * lam);
    }
    let c = lam * q;
    let mut hi = a.min((a / c).powf(1.0 / (q - 1.0)));
    let mut lo = 0.0_f64;
    let mut w = hi;
    for _ in 0..200 {
        let wq2 = w.powf(q - 2.0);
        let g = w + c * w * wq2 - a;
        if g > 0.0 {
            hi = w;
        } else if g < 0.0 {
            lo = w;
        } else {
            return w;
        }
        let dg = 1.0 + c * (q - 1.0) * wq2;
        let mut next = w - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * a || hi - lo <= 4.0 * f64::EPSILON * a {
            return next;
        }
        w = next;
    }
    w
}

/// Multiplier search for projecting a vector onto the unit ℓq ball, `1 < q < ∞`.
///
/// Every iterate `λ_j` produces shrunk magnitudes `w(λ_j)` and, after radial
/// rescaling, a feasible point of the ball. The sequence of feasible points
/// converges to the projection.
#[derive(Debug, Clone)]
pub struct DualBallSearch {
    mag: Vec<f64>,
    sign: Vec<f64>,
    q: f64,
    lo: f64,
    hi: f64,
    lam: f64,
    w: Vec<f64>,
    residual: f64,
    /// Residual before the latest step; Newton must at least halve it.
    prev_residual: f64,
    iters: usize,
    rule: SearchRule,
    inside: bool,
    exhausted: bool,
}

impl DualBallSearch {
    pub fn new(v: &[f64], q: f64, rule: SearchRule) -> Self {
        debug_assert!(q > 1.0 && q.is_finite());
        let mag: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let sign: Vec<f64> = v.iter().map(|x| if *x < 0.0 { -1.0 } else { 1.0 }).collect();
        let norm = lp_norm(&mag, q);
        let inside = norm <= 1.0 + INSIDE_SLACK;
        // Σ w_i^q ≤ Σ (a_i / (λq))^{q/(q−1)} ≤ 1 once λ reaches this value.
        let qc = q / (q - 1.0);
        let hi = if inside { 0.0 } else { lp_norm(&mag, qc) / q };
        let w = mag.clone();
        Self {
            mag,
            sign,
            q,
            lo: 0.0,
            hi,
            lam: 0.0,
            w,
            residual: norm.powf(q) - 1.0,
            prev_residual: f64::INFINITY,
            iters: 0,
            rule,
            inside,
            exhausted: inside,
        }
    }

    /// Evaluates a first multiplier guess, e.g. the multiplier of a nearby
    /// projection, before the search proper starts.
    pub fn with_guess(mut self, lam0: f64) -> Self {
        if !self.inside && lam0 > self.lo && lam0 < self.hi {
            self.iters += 1;
            self.evaluate(lam0);
        }
        self
    }

    pub fn is_inside(&self) -> bool {
        self.inside
    }

    pub fn iterations(&self) -> usize {
        self.iters
    }

    pub fn multiplier(&self) -> f64 {
        self.lam
    }

    /// `‖w(λ)‖_q − 1` at the current multiplier.
    pub fn constraint_residual(&self) -> f64 {
        lp_norm(&self.w, self.q) - 1.0
    }

    /// True once the bracket cannot shrink any further in floating point.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    fn evaluate(&mut self, lam: f64) {
        self.lam = lam;
        for (wi, &a) in self.w.iter_mut().zip(&self.mag) {
            *wi = shrink_coord(a, lam, self.q);
        }
        self.residual = self.w.iter().map(|x| x.powf(self.q)).sum::<f64>() - 1.0;
        if self.residual > 0.0 {
            self.lo = lam;
        } else {
            self.hi = lam;
        }
    }

    fn bisection_point(&self) -> f64 {
        if self.lo == 0.0 {
            0.5 * self.hi
        } else if self.hi > 2.0 * self.lo {
            (self.lo * self.hi).sqrt()
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    /// Newton step on `ln Σ w_i(λ)^q`, which stays well scaled when `q` is
    /// large and agrees with the step on `Σ w_i^q − 1` near the root.
    fn newton_point(&self) -> Option<f64> {
        let q = self.q;
        let lam = self.lam;
        let mut slope = 0.0;
        for &w in &self.w {
            if w == 0.0 {
                continue;
            }
            let wq1 = w.powf(q - 1.0);
            let dw = -q * wq1 / (1.0 + lam * q * (q - 1.0) * w.powf(q - 2.0));
            slope += q * wq1 * dw;
        }
        let log_slope = slope / (1.0 + self.residual);
        if log_slope < 0.0 && log_slope.is_finite() {
            Some(lam - self.residual.ln_1p() / log_slope)
        } else {
            None
        }
    }

    /// Advances the multiplier by one iteration. Returns false when the
    /// search has nothing left to do.
    pub fn step(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        let bisect = self.bisection_point();
        // fall back to bisection when Newton stops paying off
        let newton_ok = self.residual.ln_1p().abs() <= 0.5 * self.prev_residual.ln_1p().abs();
        let mut next = match self.rule {
            SearchRule::SafeguardedNewton if newton_ok => self.newton_point().unwrap_or(bisect),
            _ => bisect,
        };
        if !(next > self.lo && next < self.hi) {
            next = bisect;
        }
        if !(next > self.lo && next < self.hi) {
            self.exhausted = true;
            return false;
        }
        let prev = self.lam;
        self.prev_residual = self.residual;
        self.iters += 1;
        self.evaluate(next);
        let stalled = self.rule == SearchRule::SafeguardedNewton && (next - prev).abs() <= 4.0 * f64::EPSILON * next;
        if self.residual == 0.0 || self.hi - self.lo <= 2.0 * f64::EPSILON * self.hi || stalled {
            self.exhausted = true;
        }
        true
    }

    /// Current feasible point: `sign ⊙ w(λ) / max(1, ‖w(λ)‖_q)`.
    pub fn feasible_point(&self) -> DVector<f64> {
        let norm = lp_norm(&self.w, self.q);
        let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        DVector::from_iterator(self.w.len(), self.w.iter().zip(&self.sign).map(|(w, s)| s * w * scale))
    }
}

/// Euclidean projection onto `{u : ‖u‖_q ≤ radius}`, `1 ≤ q ≤ ∞`.
///
/// For `1 < q < ∞` (q ≠ 2) the Lagrange multiplier of the per-coordinate
/// stationarity equation is found by a safeguarded bracketing search; the
/// returned point lies in the ball with `|‖u‖_q − radius| ≤ tol` whenever `v`
/// is outside it.
pub fn project_lq_ball(v: &DVector<f64>, q_exp: f64, radius: f64, tol: f64) -> Result<DVector<f64>> {
    project_lq_ball_warm(v, q_exp, radius, tol, &mut 0.0)
}

/// [`project_lq_ball`] with a multiplier hint that is read as a starting
/// guess and overwritten with the multiplier found. Repeated projections of
/// slowly varying points converge in a handful of Newton steps this way.
pub fn project_lq_ball_warm(v: &DVector<f64>, q_exp: f64, radius: f64, tol: f64, hint: &mut f64) -> Result<DVector<f64>> {
    if !(radius > 0.0) || !(q_exp >= 1.0) {
        return Err(Error::InvalidParameter(format!("ball needs radius > 0 and q ≥ 1, got radius {radius}, q {q_exp}")));
    }
    if q_exp.is_infinite() {
        return Ok(v.map(|x| x.clamp(-radius, radius)));
    }
    let norm = lp_norm(v.as_slice(), q_exp);
    if norm <= radius * (1.0 + INSIDE_SLACK) {
        return Ok(v.clone());
    }
    if q_exp == 2.0 {
        return Ok(v * (radius / norm));
    }
    if q_exp == 1.0 {
        let w = DVector::from_element(v.len(), 1.0);
        return Ok(project_weighted_l1_ball(v, &w, radius));
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / radius).collect();
    let mut search = DualBallSearch::new(&scaled, q_exp, SearchRule::SafeguardedNewton).with_guess(*hint);
    let tol_unit = tol / radius;
    let mut done = false;
    while search.iterations() < MAX_SEARCH_ITERS {
        if search.iterations() > 0 && search.constraint_residual().abs() <= tol_unit {
            done = true;
            break;
        }
        if !search.step() {
            // bracket collapsed: the multiplier is exact to machine precision
            done = true;
            break;
        }
    }
    if done || search.constraint_residual().abs() <= tol_unit {
        *hint = search.multiplier();
        return Ok(search.feasible_point() * radius);
    }
    Err(Error::BisectionFailed(MAX_SEARCH_ITERS))
}

/// Exact Euclidean projection onto `{u : Σ w_i |u_i| ≤ radius}` by sorting
/// the breakpoints `|v_i| / w_i`.
///
/// Coordinates with an infinite weight are pinned to zero.
pub fn project_weighted_l1_ball(v: &DVector<f64>, w: &DVector<f64>, radius: f64) -> DVector<f64> {
    debug_assert_eq!(v.len(), w.len());
    let n = v.len();
    let mut out = DVector::zeros(n);
    let weighted: f64 = v.iter().zip(w.iter()).filter(|(_, wi)| wi.is_finite()).map(|(vi, wi)| wi * vi.abs()).sum();
    let pinned_nonzero = v.iter().zip(w.iter()).any(|(vi, wi)| !wi.is_finite() && *vi != 0.0);
    if weighted <= radius && !pinned_nonzero {
        return v.clone();
    }
    if weighted <= radius {
        for i in 0..n {
            if w[i].is_finite() {
                out[i] = v[i];
            }
        }
        return out;
    }
    if radius <= 0.0 {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).filter(|&i| w[i].is_finite() && v[i] != 0.0).collect();
    idx.sort_by(|&a, &b| {
        let ta = v[a].abs() / w[a];
        let tb = v[b].abs() / w[b];
        tb.partial_cmp(&ta).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sum_wv = 0.0;
    let mut sum_ww = 0.0;
    let mut lam = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        sum_wv += w[i] * v[i].abs();
        sum_ww += w[i] * w[i];
        let cand = (sum_wv - radius) / sum_ww;
        let next_break = idx.get(k + 1).map(|&j| v[j].abs() / w[j]).unwrap_or(0.0);
        if cand >= next_break {
            lam = cand;
            break;
        }
        lam = cand;
    }
    for i in 0..n {
        if w[i].is_finite() {
            let mag = (v[i].abs() - lam * w[i]).max(0.0);
            out[i] = v[i].signum() * mag;
        }
    }
    out
}
