//! Log-weighted running averages.
//!
//! Step `n` carries weight `ln(n + 1)^tau`. With `tau = 0` every iterate
//! (including the initial one) gets weight one and the average is the plain
//! arithmetic mean; with `tau > 0` the initial iterate has weight zero, so
//! the first update replaces the average outright.

use crate::linalg::SymMat;

/// Unnormalized weight `ln(n + 1)^tau` of step `n`. Uses `0^0 = 1`.
pub fn log_weight(n: u64, tau: f64) -> f64 {
    let l = ((n + 1) as f64).ln();
    if tau == 0.0 {
        1.0
    } else {
        l.powf(tau)
    }
}

/// Values that can be averaged in place: `self = (1 - w) self + w value`.
pub trait Blend {
    fn blend(&mut self, w: f64, value: &Self);
}

impl Blend for Vec<f64> {
    fn blend(&mut self, w: f64, value: &Self) {
        assert_eq!(self.len(), value.len());
        for (a, b) in self.iter_mut().zip(value) {
            *a = (1.0 - w) * *a + w * b;
        }
    }
}

impl Blend for SymMat {
    fn blend(&mut self, w: f64, value: &Self) {
        SymMat::blend(self, w, value);
    }
}

/// One averaging step. `weight_sum` must hold `sum_{k<n} ln(k+1)^tau`; the
/// returned value is the updated sum including step `n`.
pub fn weighted_average_step<T: Blend>(
    avg: &mut T,
    value: &T,
    n: u64,
    tau: f64,
    weight_sum: f64,
) -> f64 {
    assert!(n >= 1, "weighted averaging starts at step 1");
    let w = log_weight(n, tau);
    let total = weight_sum + w;
    assert!(total > 0.0, "weighted average has zero total mass at step {n}");
    avg.blend(w / total, value);
    total
}

/// Running weighted average together with its carried weight sum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAverage<T> {
    value: T,
    tau: f64,
    weight_sum: f64,
    steps: u64,
}

impl<T: Blend + Clone> WeightedAverage<T> {
    /// Starts from the step-0 iterate.
    pub fn new(initial: T, tau: f64) -> Self {
        Self {
            value: initial,
            tau,
            weight_sum: log_weight(0, tau),
            steps: 0,
        }
    }

    pub fn push(&mut self, value: &T) {
        self.steps += 1;
        self.weight_sum =
            weighted_average_step(&mut self.value, value, self.steps, self.tau, self.weight_sum);
    }

    pub fn value(&self) -> &T {
        &self.value
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}
