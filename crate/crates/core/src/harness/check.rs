//! Reference oracles and invariant checks shared by `ir2n check` and the
//! test suites. Each check draws its instances from a seeded generator and
//! reports the worst observed error.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::problems::{bpdn_generate_with, fh_generate, matcomp_generate, BpdnConfig};
use crate::prox::{cauchy_engine, project_lq_ball, project_weighted_l1_ball, prox_lp_norm_engine, ProxEngine, StopReason};
use crate::regularizers::{lp_norm, step_norm_bound, BoundInputs, LpBallReg, LpNormReg, Regularizer, TvpReg};
use crate::solver::{prec_value, IterStatus, IterationRecord, SmoothOracle, SolverParams, PREC_LO};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst error or violation count, with the threshold it was held to.
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String, start: Instant) -> Self {
        Self { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
    }

    /// `PASS name: detail (t s)`.
    pub fn line(&self) -> String {
        format!("{} {}: {} ({:.2} s)", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail, self.seconds)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Runs an engine until its own test at `tol` holds and returns the last
/// candidate point.
pub fn drive_engine(engine: &mut dyn ProxEngine, tol: f64, max_iter: usize) -> Option<DVector<f64>> {
    let mut last = None;
    for _ in 0..max_iter {
        match engine.next_candidate() {
            Some(c) => last = Some(c.point),
            None => break,
        }
        if engine.converged(tol) {
            break;
        }
    }
    last
}

/// Scalar root of an increasing function on `[lo, hi]` by bisection.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reference value of `argmin_y ½‖y − q‖² + τ‖y‖_p` for `1 ≤ p < ∞`.
///
/// With `t = ‖y‖_p > 0` the optimality conditions read `y_i = t·v_i·sign(q_i)`
/// where `v_i ≥ 0` solves `t·v + τ·v^{p−1} = |q_i|`. The map `t ↦ ‖v(t)‖_p`
/// decreases strictly, so `t` is found by bisection on `‖v(t)‖_p = 1`. The
/// zero solution applies when `‖q‖_{p'} ≤ τ`.
pub fn lp_prox_reference(q: &DVector<f64>, tau: f64, p: f64) -> DVector<f64> {
    if tau == 0.0 {
        return q.clone();
    }
    if p == 1.0 {
        return q.map(|v| v.signum() * (v.abs() - tau).max(0.0));
    }
    let pc = p / (p - 1.0);
    if lp_norm(q.as_slice(), pc) <= tau {
        return DVector::zeros(q.len());
    }
    let v_of = |t: f64, a: f64| -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        bisect(0.0, a / t, |v| t * v + tau * v.powf(p - 1.0) - a)
    };
    let ratio = |t: f64| -> f64 {
        let v: Vec<f64> = q.iter().map(|a| v_of(t, a.abs())).collect();
        lp_norm(&v, p)
    };
    // ratio(t) ≤ ‖q‖_p / t, so the root lies below ‖q‖_p
    let mut hi = lp_norm(q.as_slice(), p).max(f64::MIN_POSITIVE);
    while ratio(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while ratio(lo) < 1.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    let t = bisect(lo, hi, |t| 1.0 - ratio(t));
    DVector::from_iterator(q.len(), q.iter().map(|a| a.signum() * t * v_of(t, a.abs())))
}

/// Reference weighted ℓ1-ball projection: bisection on the multiplier `λ`
/// in `Σ w_i (|v_i| − λw_i)₊ = radius`.
pub fn weighted_l1_reference(v: &DVector<f64>, w: &DVector<f64>, radius: f64) -> DVector<f64> {
    let weighted: f64 = v.iter().zip(w.iter()).map(|(a, b)| a.abs() * b).sum();
    if weighted <= radius {
        return v.clone();
    }
    let lam_hi = v.iter().zip(w.iter()).map(|(a, b)| a.abs() / b).fold(0.0, f64::max);
    let excess = |lam: f64| -> f64 {
        radius - v.iter().zip(w.iter()).map(|(a, b)| b * (a.abs() - lam * b).max(0.0)).sum::<f64>()
    };
    let lam = bisect(0.0, lam_hi, excess);
    DVector::from_iterator(v.len(), v.iter().zip(w.iter()).map(|(a, b)| a.signum() * (a.abs() - lam * b).max(0.0)))
}

/// ℓp prox engine, stopped at duality gap `native_tol`, against
/// [`lp_prox_reference`]; closed forms (p = 1, 2) against their formulas.
///
/// The prox objective is 1-strongly convex, so a gap `g` only guarantees
/// `‖y − y*‖ ≤ √(2g)`.
pub fn check_lp_prox(instances: usize, seed: u64, native_tol: f64) -> Vec<CheckResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = [1usize, 2, 3, 5];
    let ps = [1.0, 1.1, 1.5, 2.0, 3.0];
    let mut worst = 0.0_f64;
    let mut worst_closed = 0.0_f64;
    for i in 0..instances {
        let n = dims[i % dims.len()];
        let p = ps[(i / dims.len()) % ps.len()];
        let q = gaussian(&mut rng, n, 2.0);
        let tau = rng.random_range(0.05..2.0);
        let y = drive_engine(&mut prox_lp_norm_engine(q.clone(), tau, p), native_tol, 100_000).expect("candidate");
        let err = (&y - lp_prox_reference(&q, tau, p)).amax();
        worst = worst.max(err);
        if p == 1.0 || p == 2.0 {
            let closed = if p == 1.0 {
                q.map(|v| v.signum() * (v.abs() - tau).max(0.0))
            } else {
                let nq = q.norm();
                if nq > tau { &q * (1.0 - tau / nq) } else { DVector::zeros(n) }
            };
            worst_closed = worst_closed.max((&y - closed).amax());
        }
    }
    vec![
        CheckResult::new(
            "lp prox vs reference",
            worst <= 1e-6,
            format!("max error {worst:.2e} ≤ 1e-6 over {instances} instances at gap ≤ {native_tol:e}"),
            start,
        ),
        CheckResult::new(
            "lp prox closed forms",
            worst_closed <= 1e-12,
            format!("max error {worst_closed:.2e} ≤ 1e-12"),
            start,
        ),
    ]
}

/// Weighted ℓ1 projection against bisection; ℓq projection idempotence and
/// identity on feasible points.
pub fn check_projections(instances: usize, seed: u64) -> Vec<CheckResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let n = rng.random_range(1..=100);
        let v = gaussian(&mut rng, n, 1.0);
        let w = DVector::from_fn(n, |_, _| rng.random_range(0.1..3.0));
        let weighted: f64 = v.iter().zip(w.iter()).map(|(a, b)| a.abs() * b).sum();
        let radius = weighted * rng.random_range(0.05..1.2);
        let u = project_weighted_l1_ball(&v, &w, radius);
        worst = worst.max((&u - weighted_l1_reference(&v, &w, radius)).amax());
    }
    let l1 = CheckResult::new(
        "weighted l1 projection vs bisection",
        worst <= 1e-8,
        format!("max error {worst:.2e} ≤ 1e-8 over {instances} instances"),
        start,
    );

    let start = Instant::now();
    let mut worst_idem = 0.0_f64;
    let mut worst_id = 0.0_f64;
    for _ in 0..instances {
        let n = rng.random_range(1..=50);
        let q = [1.1, 1.5, 2.0, 3.0, 11.0][rng.random_range(0..5)];
        let radius = rng.random_range(0.1..3.0);
        let v = gaussian(&mut rng, n, 2.0);
        let (Ok(u), tol) = (project_lq_ball(&v, q, radius, 1e-13), 1e-13) else {
            worst_idem = f64::INFINITY;
            continue;
        };
        let uu = project_lq_ball(&u, q, radius, tol).unwrap_or_else(|_| DVector::from_element(n, f64::INFINITY));
        worst_idem = worst_idem.max((&uu - &u).amax());
        let inside = &u * rng.random_range(0.0..0.999);
        let back = project_lq_ball(&inside, q, radius, tol).unwrap_or_else(|_| DVector::from_element(n, f64::INFINITY));
        worst_id = worst_id.max((&back - &inside).amax());
    }
    let lq = CheckResult::new(
        "lq ball projection idempotent / identity on feasible",
        worst_idem <= 1e-10 && worst_id <= 1e-10,
        format!("idempotence {worst_idem:.2e}, identity {worst_id:.2e}, both ≤ 1e-10"),
        start,
    );
    vec![l1, lq]
}

/// Exact Cauchy-step norms, with engines run to `native_tol`, never exceed
/// the computable bound `M` by more than a factor `1 + 10⁻⁶`.
pub fn check_bounds(instances: usize, seed: u64, native_tol: f64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for name in ["lp norm", "tv", "lp ball"] {
        let start = Instant::now();
        let mut violations = 0;
        let mut unfinished = 0;
        let mut worst_ratio = 0.0_f64;
        for i in 0..instances {
            let n = [2usize, 5, 20][i % 3];
            let p = rng.random_range(1.0..3.0);
            let mu = rng.random_range(0.01..2.0);
            let (reg, x) = match name {
                "lp norm" => (Regularizer::LpNorm(LpNormReg::new(p, mu).unwrap()), gaussian(&mut rng, n, 1.0)),
                "tv" => (Regularizer::Tvp(TvpReg::new(p, mu, n).unwrap()), gaussian(&mut rng, n, 1.0)),
                _ => {
                    let pb = rng.random_range(0.3..1.0);
                    let r = rng.random_range(0.5..4.0);
                    let ball = LpBallReg::new(pb, r, 3).unwrap();
                    // random feasible point
                    let mut x = gaussian(&mut rng, n, 1.0);
                    let pow: f64 = x.iter().map(|v| v.abs().powf(pb)).sum();
                    let scale = rng.random_range(0.0..1.0) * (r / pow).powf(1.0 / pb);
                    x *= scale;
                    (Regularizer::LpBall(ball), x)
                }
            };
            let gs = rng.random_range(0.1..10.0);
            let g = gaussian(&mut rng, n, gs);
            let nu = rng.random_range(1e-3..1.0);
            let m = step_norm_bound(&reg, &BoundInputs { x: &x, nu, ghat_norm: g.norm() });
            let mut engine = cauchy_engine(&reg, &x, &g, nu, seed.wrapping_add(i as u64), Default::default());
            let Some(y) = drive_engine(engine.as_mut(), native_tol, 200_000) else {
                unfinished += 1;
                continue;
            };
            let s = (&y - &x).norm();
            worst_ratio = worst_ratio.max(s / m);
            if s > m * (1.0 + 1e-6) {
                violations += 1;
            }
        }
        out.push(CheckResult::new(
            &format!("step bound ({name})"),
            violations == 0 && unfinished == 0,
            format!("{violations} violations in {instances} instances ({unfinished} without a candidate), max ‖s‖/M = {worst_ratio:.3}"),
            start,
        ));
    }
    out
}

/// Counts of invariant violations in one solver trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceViolations {
    /// `ξ̂ < ½ν⁻¹‖ŝ‖² − 10⁻¹⁰(1+|ξ̂|)`.
    pub descent: usize,
    /// EarlyNorm stop with `‖ŝ‖ < κ_s·M`.
    pub early_norm: usize,
    pub sigma_floor: usize,
    /// `‖s_k‖ > θ2‖ŝ_cp‖`.
    pub step_cap: usize,
    /// `m(s_k) > m(ŝ_cp)`.
    pub model_order: usize,
    /// Increase of `f + h` between consecutive iterates (exact runs only).
    pub monotone: usize,
    pub iterations: usize,
}

impl TraceViolations {
    pub fn total(&self) -> usize {
        self.descent + self.early_norm + self.sigma_floor + self.step_cap + self.model_order + self.monotone
    }
}

/// Checks the per-iteration invariants of a run. `check_monotone` enables
/// the descent test on `f + h`, which only holds for exact evaluations.
pub fn trace_violations(trace: &[IterationRecord], params: &SolverParams, check_monotone: bool) -> TraceViolations {
    let mut v = TraceViolations { iterations: trace.len(), ..Default::default() };
    for (i, r) in trace.iter().enumerate() {
        let floor = 0.5 * r.cauchy_norm * r.cauchy_norm / r.nu - 1e-10 * (1.0 + r.xi_hat.abs());
        if r.xi_hat < floor {
            v.descent += 1;
        }
        if r.stop_reason == StopReason::EarlyNorm && r.cauchy_norm < params.kappa_s * r.bound {
            v.early_norm += 1;
        }
        if r.sigma < params.sigma_min {
            v.sigma_floor += 1;
        }
        if r.step_norm > params.theta2 * r.cauchy_norm * (1.0 + 1e-12) {
            v.step_cap += 1;
        }
        if r.model_step > r.model_cauchy + 1e-12 * (1.0 + r.model_cauchy.abs()) {
            v.model_order += 1;
        }
        if check_monotone {
            if let Some(next) = trace.get(i + 1) {
                let (a, b) = (r.f + r.h, next.f + next.h);
                let accepted = r.status != IterStatus::Unsuccessful;
                if b > a + 1e-12 * (1.0 + a.abs()) || (!accepted && b != a) {
                    v.monotone += 1;
                }
            }
        }
    }
    v
}

/// Accuracy schedule endpoints and monotonicity for `n`.
pub fn check_schedule(n: usize) -> CheckResult {
    let start = Instant::now();
    let values: Vec<f64> = (0..=2 * n).map(|k| prec_value(k, n)).collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let ends = values[0] == 1e-3 && values[n] == PREC_LO && values[2 * n] == PREC_LO;
    CheckResult::new(
        "accuracy schedule",
        monotone && ends,
        format!("prec(0) = {:e}, prec({n}) = {:e}, monotone = {monotone}", values[0], values[n]),
        start,
    )
}

/// `‖g − g_fd‖ / ‖g‖` with central differences of step `h`.
pub fn fd_relative_error(oracle: &mut dyn SmoothOracle, x: &DVector<f64>, prec: f64, h: f64) -> crate::Result<f64> {
    let g = oracle.grad(x, prec)?;
    let mut fd = DVector::zeros(x.len());
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        let mut xp = x.clone();
        xp[i] += step;
        let mut xm = x.clone();
        xm[i] -= step;
        fd[i] = (oracle.eval(&xp, prec)? - oracle.eval(&xm, prec)?) / (2.0 * step);
    }
    Ok((&g - fd).norm() / g.norm().max(f64::MIN_POSITIVE))
}

/// Analytic gradients of all three problems against central differences.
pub fn check_gradients(points: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];

    let start = Instant::now();
    let bp = bpdn_generate_with(seed, &BpdnConfig::default());
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let x = gaussian(&mut rng, bp.config.cols, 1.0);
        worst = worst.max(fd_relative_error(&mut bp.oracle(), &x, 0.0, 1e-5).unwrap_or(f64::INFINITY));
    }
    out.push(CheckResult::new("bpdn gradient vs finite differences", worst <= 1e-6, format!("max rel. error {worst:.2e} ≤ 1e-6"), start));

    let start = Instant::now();
    let mc = matcomp_generate(seed, 0.8).expect("valid rate");
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let x = gaussian(&mut rng, mc.dim(), 1.0);
        worst = worst.max(fd_relative_error(&mut mc.oracle(), &x, 0.0, 1e-5).unwrap_or(f64::INFINITY));
    }
    out.push(CheckResult::new("matcomp gradient vs finite differences", worst <= 1e-6, format!("max rel. error {worst:.2e} ≤ 1e-6"), start));

    let start = Instant::now();
    let fh = fh_generate(seed).expect("data generation");
    let ball = LpBallReg::new(fh.config.ball_p, fh.config.ball_r, 1).expect("valid ball");
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let x = DVector::from_vec(vec![
            rng.random_range(-0.01..0.01),
            rng.random_range(0.18..0.25),
            rng.random_range(0.8..1.0),
            rng.random_range(-0.01..0.01),
            rng.random_range(-0.01..0.01),
        ]);
        debug_assert!(ball.is_feasible(&x));
        worst = worst.max(fd_relative_error(&mut fh.oracle(false), &x, 1e-12, 1e-5).unwrap_or(f64::INFINITY));
    }
    out.push(CheckResult::new("fh sensitivity gradient vs finite differences", worst <= 1e-4, format!("max rel. error {worst:.2e} ≤ 1e-4"), start));
    out
}

/// The quick suite behind `ir2n check`.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = check_lp_prox(100, seed, 1e-13);
    out.extend(check_projections(100, seed));
    out.extend(check_bounds(100, seed, 1e-10));
    out.push(check_schedule(100));
    out.extend(check_gradients(2, seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn reference_prox_scalar_is_soft_threshold() {
        for p in [1.1, 1.5, 3.0] {
            let y = lp_prox_reference(&dvector![-2.5], 0.7, p);
            assert!((y[0] + 1.8).abs() < 1e-10, "{p}: {y}");
        }
    }

    #[test]
    fn reference_prox_two_norm_is_block_shrink() {
        let y = lp_prox_reference(&dvector![3.0, 4.0], 1.0, 2.0);
        assert!((y - dvector![2.4, 3.2]).amax() < 1e-10);
        assert_eq!(lp_prox_reference(&dvector![0.3, 0.4], 1.0, 2.0), dvector![0.0, 0.0]);
    }

    #[test]
    fn reference_prox_satisfies_optimality() {
        // y − q + τ ∇‖y‖_p = 0 away from zero coordinates
        let q = dvector![1.0, -2.0, 0.5];
        let (tau, p) = (0.6, 1.5);
        let y = lp_prox_reference(&q, tau, p);
        let t = lp_norm(y.as_slice(), p);
        for i in 0..3 {
            let grad = y[i].signum() * (y[i].abs() / t).powf(p - 1.0);
            assert!((y[i] - q[i] + tau * grad).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_l1_projection_examples() {
        let w = dvector![1.0, 1.0];
        assert_eq!(weighted_l1_reference(&dvector![3.0, 0.0], &w, 1.0), dvector![1.0, 0.0]);
        let u = weighted_l1_reference(&dvector![2.0, 1.0], &w, 1.0);
        assert!((u - dvector![1.0, 0.0]).amax() < 1e-12);
    }

    #[test]
    fn quick_suite_passes() {
        for r in check_lp_prox(40, 1, 1e-13).into_iter().chain(check_projections(40, 1)).chain(check_bounds(30, 1, 1e-10)) {
            assert!(r.passed, "{}", r.line());
        }
        assert!(check_schedule(100).passed);
    }
}

