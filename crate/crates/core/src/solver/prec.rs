//! Accuracy schedule for inexact objective and gradient evaluations: the
//! requested accuracy tightens geometrically with every unsuccessful
//! iteration.

use serde::{Deserialize, Serialize};

pub const PREC_HI: f64 = 1e-3;
pub const PREC_LO: f64 = 1e-14;

/// `max(10⁻³·exp(ln(10⁻¹⁴/10⁻³)·n_F/N), 10⁻¹⁴)`, exactly `10⁻¹⁴` once `n_F ≥ N`.
pub fn prec_value(n_failures: usize, n: usize) -> f64 {
    let n = n.max(1);
    if n_failures >= n {
        return PREC_LO;
    }
    let frac = n_failures as f64 / n as f64;
    (PREC_HI * ((PREC_LO / PREC_HI).ln() * frac).exp()).max(PREC_LO)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecSchedule {
    /// Unsuccessful iterations after which full accuracy is always used.
    pub n: usize,
    /// Unsuccessful iterations so far.
    pub n_failures: usize,
}

impl PrecSchedule {
    pub fn new(n: usize) -> Self {
        Self { n: n.max(1), n_failures: 0 }
    }

    pub fn value(&self) -> f64 {
        prec_value(self.n_failures, self.n)
    }

    pub fn record_failure(&mut self) {
        self.n_failures += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn endpoints_are_exact() {
        assert_eq!(prec_value(0, 100), 1e-3);
        assert_eq!(prec_value(100, 100), 1e-14);
        assert_eq!(prec_value(250, 100), 1e-14);
    }

    #[test]
    fn midpoint_is_geometric_mean() {
        assert_relative_eq!(prec_value(50, 100), 10f64.powf(-8.5), max_relative = 1e-12);
    }

    #[test]
    fn schedule_tightens() {
        let mut s = PrecSchedule::new(20);
        let mut last = s.value();
        for _ in 0..30 {
            s.record_failure();
            assert!(s.value() <= last);
            last = s.value();
        }
        assert_eq!(last, PREC_LO);
    }
}
