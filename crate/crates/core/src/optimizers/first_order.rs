use serde::{Deserialize, Serialize};

use super::{checked_gradient, ensure_finite, Counters, OptimError, Optimizer};
use crate::inverse_hessian::{ScheduleError, StepSize};
use crate::linalg;
use crate::problems::{Objective, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub eta: StepSize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            eta: StepSize::new(1.0, 2.0 / 3.0),
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        Ok(self.eta.validate("eta")?)
    }
}

/// `θ_n = θ_{n-1} - η_n ∇g(X_n, θ_{n-1})`.
#[derive(Debug, Clone)]
pub struct Sgd {
    theta: Vec<f64>,
    eta: StepSize,
    n: u64,
    counters: Counters,
}

impl Sgd {
    pub fn new(theta0: Vec<f64>, config: SgdConfig) -> Self {
        Self {
            theta: theta0,
            eta: config.eta,
            n: 0,
            counters: Counters::default(),
        }
    }
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.n + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        linalg::axpy(-self.eta.at(n), &grad, &mut self.theta);
        ensure_finite(&self.theta, n, "parameter")?;
        self.n = n;
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        &self.theta
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.n
    }
}

/// SGD with the Polyak-Ruppert average `θ̄_n = θ̄_{n-1} + (θ_n - θ̄_{n-1}) / n`.
/// The initial point is not part of the average.
#[derive(Debug, Clone)]
pub struct Asgd {
    sgd: Sgd,
    average: Vec<f64>,
}

impl Asgd {
    pub fn new(theta0: Vec<f64>, config: SgdConfig) -> Self {
        Self {
            average: theta0.clone(),
            sgd: Sgd::new(theta0, config),
        }
    }

    pub fn iterate(&self) -> &[f64] {
        &self.sgd.theta
    }
}

impl Optimizer for Asgd {
    fn name(&self) -> &'static str {
        "asgd"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        self.sgd.step(sample, model)?;
        let w = 1.0 / self.sgd.n as f64;
        for (a, t) in self.average.iter_mut().zip(&self.sgd.theta) {
            *a += w * (t - *a);
        }
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        &self.average
    }

    fn counters(&self) -> Counters {
        self.sgd.counters
    }

    fn steps(&self) -> u64 {
        self.sgd.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaGradConfig {
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for AdaGradConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            epsilon: 1e-8,
        }
    }
}

impl AdaGradConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        for (name, value) in [("eta", self.eta), ("epsilon", self.epsilon)] {
            if !(value > 0.0) {
                return Err(ScheduleError::NonPositive { name, value }.into());
            }
        }
        Ok(())
    }
}

/// Diagonal AdaGrad: `G += g²`, `θ_i -= η g_i / (sqrt(G_i) + ε)`.
#[derive(Debug, Clone)]
pub struct AdaGrad {
    theta: Vec<f64>,
    accum: Vec<f64>,
    config: AdaGradConfig,
    n: u64,
    counters: Counters,
}

impl AdaGrad {
    pub fn new(theta0: Vec<f64>, config: AdaGradConfig) -> Self {
        Self {
            accum: vec![0.0; theta0.len()],
            theta: theta0,
            config,
            n: 0,
            counters: Counters::default(),
        }
    }

    /// Running entrywise sum of squared gradients.
    pub fn accumulator(&self) -> &[f64] {
        &self.accum
    }
}

impl Optimizer for AdaGrad {
    fn name(&self) -> &'static str {
        "adagrad"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.n + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        for ((t, acc), g) in self.theta.iter_mut().zip(&mut self.accum).zip(&grad) {
            *acc += g * g;
            *t -= self.config.eta * g / (acc.sqrt() + self.config.epsilon);
        }
        ensure_finite(&self.theta, n, "parameter")?;
        self.n = n;
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        &self.theta
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.n
    }
}
