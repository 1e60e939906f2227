//! Anytime confidence widths for adaptive stopping.
//!
//! For an empirical mean of `t` sub-Gaussian samples the schedule provides a
//! width `C(t)` such that the event
//!
//! ```text
//! |mean(t) - true value| <= C(t)   simultaneously for all t >= 1
//! ```
//!
//! holds with probability at least `1 - delta`. The width used here is
//!
//! ```text
//! C(t) = sigma * sqrt(4 * ln(log2(2t) / delta) / t)
//! ```
//!
//! with a natural outer logarithm and a base-2 inner logarithm. Because the
//! bound is valid at every sample count at once, a sampling loop may stop the
//! moment an interval separates, without committing to a sample size up
//! front.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSchedule {
    delta: f64,
    sigma: f64,
}

impl ConfidenceSchedule {
    /// A schedule at failure probability `delta` for 1-sub-Gaussian samples.
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_scale(delta, 1.0)
    }

    /// A schedule for sigma-sub-Gaussian samples. All widths are multiplied
    /// by `sigma`, which transfers the coverage guarantee by rescaling.
    pub fn with_scale(delta: f64, sigma: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must be in (0, 1), got {delta}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { delta, sigma })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Anytime width after `t` samples.
    ///
    /// Panics if `t == 0`: a width is only defined once a sample exists.
    pub fn width(&self, t: u64) -> f64 {
        assert!(t >= 1, "confidence width requires at least one sample");
        let t = t as f64;
        let inner = (2.0 * t).log2() / self.delta;
        self.sigma * (4.0 * inner.ln() / t).sqrt()
    }

    /// A sample count sufficient for `width(t) <= target`:
    ///
    /// ```text
    /// t = ceil( (4 / target^2) * ln( (2/delta) * log2(12 / (delta * target^2)) ) )
    /// ```
    ///
    /// Valid for `target <= 2` and `delta < 2 e^{-e/2}`.
    pub fn samples_for_width(&self, target: f64) -> u64 {
        assert!(target > 0.0, "target width must be positive");
        let target = target / self.sigma;
        let d2 = target * target;
        let inner = (12.0 / (self.delta * d2)).log2();
        let t = (4.0 / d2) * ((2.0 / self.delta) * inner).ln();
        t.ceil().max(1.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn width_at_one_sample() {
        // sqrt(4 * ln(log2(2)/0.05)) = sqrt(4 ln 20)
        let sched = ConfidenceSchedule::new(0.05).unwrap();
        assert_abs_diff_eq!(sched.width(1), (4.0 * 20.0f64.ln()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(sched.width(1), 3.4617, epsilon = 1e-4);
    }

    #[test]
    fn width_vanishes() {
        let sched = ConfidenceSchedule::new(0.05).unwrap();
        assert!(sched.width(1_000_000) < 0.01);
    }

    #[test]
    fn width_monotone_nonincreasing() {
        for &delta in &[0.01, 0.05, 0.1, 0.5] {
            let sched = ConfidenceSchedule::new(delta).unwrap();
            let mut prev = sched.width(1);
            for t in 2..2000 {
                let w = sched.width(t);
                assert!(
                    w <= prev + 1e-15,
                    "width increased at t={t} for delta={delta}: {prev} -> {w}"
                );
                prev = w;
            }
        }
    }

    #[test]
    fn sigma_scales_width() {
        let unit = ConfidenceSchedule::new(0.1).unwrap();
        let scaled = ConfidenceSchedule::with_scale(0.1, 2.5).unwrap();
        for t in [1u64, 7, 100, 5000] {
            assert_abs_diff_eq!(scaled.width(t), 2.5 * unit.width(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn inversion_bounds_width() {
        // Over the (target, delta) grid the prescribed sample count must pull
        // the width at or under the target.
        for &target in &[0.1, 0.5, 1.0] {
            for &delta in &[0.01, 0.05] {
                let sched = ConfidenceSchedule::new(delta).unwrap();
                let t = sched.samples_for_width(target);
                assert!(
                    sched.width(t) <= target,
                    "width({t}) = {} > {target} at delta={delta}",
                    sched.width(t)
                );
            }
        }
    }

    #[test]
    fn inversion_example() {
        let sched = ConfidenceSchedule::new(0.01).unwrap();
        let t = sched.samples_for_width(0.5);
        assert_eq!(t, 125);
        assert!(sched.width(t) <= 0.5);
    }

    #[test]
    #[should_panic]
    fn zero_samples_panics() {
        ConfidenceSchedule::new(0.1).unwrap().width(0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ConfidenceSchedule::new(0.0).is_err());
        assert!(ConfidenceSchedule::new(1.0).is_err());
        assert!(ConfidenceSchedule::with_scale(0.1, 0.0).is_err());
    }
}
