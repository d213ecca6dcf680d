//! Adaptive Dormand–Prince 5(4) integrator sampling the solution at a fixed
//! time grid.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { atol: tol, rtol: tol, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Integrates `y' = f(t, y)` from `grid[0]` and returns the state at every
/// grid time. Steps are shortened to land exactly on grid points.
pub fn dopri5<F>(mut f: F, y0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(grid.len());
    let Some(&t0) = grid.first() else {
        return Ok((out, stats));
    };
    out.push(y0.to_vec());
    let t_end = *grid.last().unwrap();
    if grid.len() == 1 {
        return Ok((out, stats));
    }

    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut f, t, &y, &k[0], opts, t_end - t0);
    stats.rhs_evals += 1;
    let mut next = 1;
    let mut err_prev: f64 = 1e-4;

    while next < grid.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration { t, reason: format!("step budget of {} exhausted", opts.max_steps) });
        }
        let target = grid[next];
        let h_free = h;
        let mut hit = false;
        if t + h >= target - 1e-14 * target.abs().max(1.0) {
            h = target - t;
            hit = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) || !h.is_finite() {
            return Err(Error::Integration { t, reason: format!("step size underflow (h = {h:e})") });
        }

        let (k0, rest) = k.split_at_mut(1);
        let k0 = &k0[0];
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k0[i];
        }
        f(t + C2 * h, &ytmp, &mut rest[0]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k0[i] + A32 * rest[0][i]);
        }
        f(t + C3 * h, &ytmp, &mut rest[1]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k0[i] + A42 * rest[0][i] + A43 * rest[1][i]);
        }
        f(t + C4 * h, &ytmp, &mut rest[2]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k0[i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
        }
        f(t + C5 * h, &ytmp, &mut rest[3]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k0[i] + A62 * rest[0][i] + A63 * rest[1][i] + A64 * rest[2][i] + A65 * rest[3][i]);
        }
        f(t + h, &ytmp, &mut rest[4]);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k0[i] + A73 * rest[1][i] + A74 * rest[2][i] + A75 * rest[3][i] + A76 * rest[4][i]);
        }
        f(t + h, &ynew, &mut rest[5]);
        stats.rhs_evals += 6;

        let mut sum = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k0[i] + E3 * rest[1][i] + E4 * rest[2][i] + E5 * rest[3][i] + E6 * rest[4][i] + E7 * rest[5][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            sum += (e / sc) * (e / sc);
        }
        let err = (sum / n as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = if hit { target } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            // PI controller (Hairer & Wanner's β = 0.04)
            let fac = 0.9 * err.max(1e-10).powf(-0.2 + 0.04 * 0.75) * err_prev.powf(0.04);
            err_prev = err.max(1e-4);
            let fac = fac.clamp(0.2, 5.0);
            if hit {
                out.push(y.clone());
                next += 1;
                // a step clipped to the grid says little about the next one
                h = (h * fac).max(h_free);
            } else {
                h *= fac;
            }
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    Ok((out, stats))
}

/// Starting step from the norms of `y₀`, `f(t₀, y₀)` and a trial Euler step.
fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], opts: &OdeOptions, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let (ys, _) = dopri5(|_, y, dy| dy[0] = -y[0], &[1.0], &grid, &OdeOptions::with_tolerance(1e-12)).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert_relative_eq!(y[0], (-t).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_hits_grid_exactly() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.37).collect();
        let (ys, stats) = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            &grid,
            &OdeOptions::with_tolerance(1e-11),
        )
        .unwrap();
        assert_eq!(ys.len(), grid.len());
        for (t, y) in grid.iter().zip(&ys) {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-8);
            assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-8);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn tighter_tolerance_is_more_accurate() {
        let grid = [0.0, 3.0];
        let exact = 3.0_f64.sin();
        let mut errs = vec![];
        for tol in [1e-4, 1e-7, 1e-10] {
            let (ys, _) = dopri5(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                &[0.0, 1.0],
                &grid,
                &OdeOptions::with_tolerance(tol),
            )
            .unwrap();
            errs.push((ys[1][0] - exact).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = OdeOptions { atol: 1e-12, rtol: 1e-12, max_steps: 3 };
        let r = dopri5(|_, y, dy| dy[0] = y[0], &[1.0], &[0.0, 10.0], &opts);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
