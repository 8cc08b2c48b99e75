//! Direct recursive estimation of the inverse Hessian.
//!
//! The iterate `A` solves `E[A ∇²g + ∇²g A - 2I] = 0` by Robbins-Monro steps.
//! Injecting a probe `Z` with `E[Z Zᵀ] = I` turns each step into a symmetric
//! rank-two correction built from `P = A Z` and `Q = ∇²g Z`:
//!
//! ```text
//! A ← Π_{β'_n}( A - γ_n (P Qᵀ + Q Pᵀ - 2I) · 1{‖Q‖‖Z‖ ≤ β_n} )
//! ```
//!
//! where `Π_r` rescales into the Frobenius ball of radius `r`. Each step costs
//! `O(d²)` plus one Hessian-vector product; no matrix-matrix product is formed.
//! The truncation and `γ_n β_n ≤ 1/2` keep the iterate positive semi-definite.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaging::WeightedAverage;
use crate::linalg::{self, SymMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },
    #[error("gamma_n * beta_n exceeds 1/2 (sup over n is {sup})")]
    TruncationTooLoose { sup: f64 },
    #[error("gamma_n * beta_n^2 * beta'_n exceeds 1 (value at n = 1 is {at_one})")]
    ProjectionTooLoose { at_one: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("non-finite Hessian-vector product at step {step}")]
    NonFiniteHessianVector { step: u64 },
    #[error("non-finite inverse-Hessian iterate at step {step}")]
    NonFiniteIterate { step: u64 },
    #[error("probe has dimension {found}, estimator has {expected}")]
    ProbeDimension { expected: usize, found: usize },
}

/// `constant · n^{-exponent}`, the usual decreasing step sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSize {
    pub constant: f64,
    pub exponent: f64,
}

impl StepSize {
    pub const fn new(constant: f64, exponent: f64) -> Self {
        Self { constant, exponent }
    }

    /// `1 / n`.
    pub const fn harmonic() -> Self {
        Self::new(1.0, 1.0)
    }

    pub fn at(&self, n: u64) -> f64 {
        self.constant * (n as f64).powf(-self.exponent)
    }

    pub fn validate(&self, name: &'static str) -> Result<(), ScheduleError> {
        if !(self.constant > 0.0) {
            return Err(ScheduleError::NonPositive {
                name,
                value: self.constant,
            });
        }
        if !self.exponent.is_finite() || self.exponent < 0.0 {
            return Err(ScheduleError::OutOfRange {
                name,
                value: self.exponent,
                range: "[0, inf)".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Independent ±1 entries.
    #[default]
    Rademacher,
    /// Uniform on the sphere of radius `sqrt(d)`.
    ScaledSphere,
}

/// Centered probe vectors with identity covariance and norm bounded by `sqrt(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeDistribution {
    pub kind: ProbeKind,
    pub dim: usize,
}

impl ProbeDistribution {
    pub fn new(kind: ProbeKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn norm_bound(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            ProbeKind::Rademacher => (0..self.dim)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
            ProbeKind::ScaledSphere => loop {
                let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let r = linalg::norm(&g);
                if r > 0.0 {
                    let s = self.norm_bound() / r;
                    break g.into_iter().map(|v| v * s).collect();
                }
            },
        }
    }
}

/// Step, truncation and projection sequences for the inverse-Hessian recursion:
/// `γ_n = c_gamma n^{-gamma}`, `β_n = c_beta n^{beta}`,
/// `β'_n = c_beta_prime n^{beta_prime}`, and averaging exponent `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseHessianSchedules {
    pub c_gamma: f64,
    pub gamma: f64,
    pub c_beta: f64,
    pub beta: f64,
    pub c_beta_prime: f64,
    pub beta_prime: f64,
    pub tau: f64,
}

impl Default for InverseHessianSchedules {
    fn default() -> Self {
        Self {
            c_gamma: 1.0,
            gamma: 0.75,
            c_beta: 0.5,
            beta: 0.75,
            c_beta_prime: 1e6,
            beta_prime: 0.26,
            tau: 2.0,
        }
    }
}

impl InverseHessianSchedules {
    /// Validates only what positivity of the iterate needs in practice:
    /// `gamma ∈ (1/2, 1)` and `γ_n β_n ≤ 1/2` for every `n`.
    pub fn practice(self) -> Result<Self, ScheduleError> {
        self.check_basic()?;
        let sup = self.sup_gamma_beta();
        if sup > 0.5 * (1.0 + 1e-12) {
            return Err(ScheduleError::TruncationTooLoose { sup });
        }
        Ok(self)
    }

    /// Validates the full set of constraints under which convergence of the
    /// recursion is proven, given the Hessian moment order `q > 2`.
    pub fn theory(self, q: f64) -> Result<Self, ScheduleError> {
        self.practice()?;
        if !(q > 2.0) {
            return Err(ScheduleError::OutOfRange {
                name: "q",
                value: q,
                range: "(2, inf)".into(),
            });
        }
        let lo = (1.0 - self.gamma) / (q - 1.0);
        let hi = self.gamma - 0.5;
        if !(self.beta > lo && self.beta < hi) {
            return Err(ScheduleError::OutOfRange {
                name: "beta",
                value: self.beta,
                range: format!("({lo}, {hi})"),
            });
        }
        let lo = 1.0 - self.gamma;
        let hi = self.gamma - 2.0 * self.beta;
        if !(self.beta_prime > lo && self.beta_prime < hi) {
            return Err(ScheduleError::OutOfRange {
                name: "beta_prime",
                value: self.beta_prime,
                range: format!("({lo}, {hi})"),
            });
        }
        // the exponent of γ_n β_n² β'_n is negative here, so n = 1 is the sup
        let at_one = self.c_gamma * self.c_beta * self.c_beta * self.c_beta_prime;
        if at_one > 1.0 {
            return Err(ScheduleError::ProjectionTooLoose { at_one });
        }
        Ok(self)
    }

    fn check_basic(&self) -> Result<(), ScheduleError> {
        for (name, value) in [
            ("c_gamma", self.c_gamma),
            ("c_beta", self.c_beta),
            ("c_beta_prime", self.c_beta_prime),
        ] {
            if !(value > 0.0) {
                return Err(ScheduleError::NonPositive { name, value });
            }
        }
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(ScheduleError::OutOfRange {
                name: "gamma",
                value: self.gamma,
                range: "(1/2, 1)".into(),
            });
        }
        if !(self.tau >= 0.0) {
            return Err(ScheduleError::OutOfRange {
                name: "tau",
                value: self.tau,
                range: "[0, inf)".into(),
            });
        }
        if !self.beta.is_finite() || !self.beta_prime.is_finite() {
            return Err(ScheduleError::OutOfRange {
                name: "beta",
                value: self.beta,
                range: "finite".into(),
            });
        }
        Ok(())
    }

    fn sup_gamma_beta(&self) -> f64 {
        if self.beta <= self.gamma {
            self.c_gamma * self.c_beta
        } else {
            f64::INFINITY
        }
    }

    pub fn gamma_at(&self, n: u64) -> f64 {
        self.c_gamma * (n as f64).powf(-self.gamma)
    }

    pub fn beta_at(&self, n: u64) -> f64 {
        self.c_beta * (n as f64).powf(self.beta)
    }

    pub fn beta_prime_at(&self, n: u64) -> f64 {
        self.c_beta_prime * (n as f64).powf(self.beta_prime)
    }
}

/// Rescales `a` into the Frobenius ball of the given radius. Returns whether
/// it had to scale.
pub fn project_frobenius_ball(a: &mut SymMat, radius: f64) -> bool {
    debug_assert!(radius > 0.0);
    let norm = a.frobenius_norm();
    if norm > radius {
        a.scale(radius / norm);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateOutcome {
    pub truncated: bool,
    pub projected: bool,
}

/// Running inverse-Hessian iterate `A_n`, optionally with its weighted average.
#[derive(Debug, Clone)]
pub struct InverseHessianState {
    a: SymMat,
    average: Option<WeightedAverage<SymMat>>,
    n: u64,
    truncation_hits: u64,
    projection_hits: u64,
}

impl InverseHessianState {
    pub fn new(initial: SymMat) -> Self {
        Self {
            a: initial,
            average: None,
            n: 0,
            truncation_hits: 0,
            projection_hits: 0,
        }
    }

    /// `A_0 = I_d`.
    pub fn identity(dim: usize) -> Self {
        Self::new(SymMat::identity(dim))
    }

    /// Also maintain the log-weighted average of the iterates with exponent `tau`.
    pub fn with_averaging(mut self, tau: f64) -> Self {
        self.average = Some(WeightedAverage::new(self.a.clone(), tau));
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn current(&self) -> &SymMat {
        &self.a
    }

    /// The weighted average if averaging is enabled, else the current iterate.
    pub fn averaged(&self) -> &SymMat {
        self.average.as_ref().map_or(&self.a, |avg| avg.value())
    }

    pub fn average(&self) -> Option<&WeightedAverage<SymMat>> {
        self.average.as_ref()
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    pub fn truncation_hits(&self) -> u64 {
        self.truncation_hits
    }

    pub fn projection_hits(&self) -> u64 {
        self.projection_hits
    }

    /// Advances the step counter without changing `A`.
    pub fn hold(&mut self) {
        self.n += 1;
        if let Some(avg) = self.average.as_mut() {
            avg.push(&self.a);
        }
    }

    /// Advances from `A_n` to `A_{n+1}`.
    ///
    /// `hess_vec` must already be bound to the current sample and evaluation
    /// point; it is called exactly once, with `z`. If averaging is enabled the
    /// average absorbs the new iterate.
    pub fn update<F>(
        &mut self,
        hess_vec: F,
        z: &[f64],
        schedules: &InverseHessianSchedules,
    ) -> Result<UpdateOutcome, EstimatorError>
    where
        F: FnOnce(&[f64]) -> Vec<f64>,
    {
        let d = self.a.dim();
        if z.len() != d {
            return Err(EstimatorError::ProbeDimension {
                expected: d,
                found: z.len(),
            });
        }
        let step = self.n + 1;
        let p = self.a.mul_vec(z);
        let q = hess_vec(z);
        if q.len() != d || !linalg::all_finite(&q) {
            return Err(EstimatorError::NonFiniteHessianVector { step });
        }

        let mut outcome = UpdateOutcome::default();
        if linalg::norm(&q) * linalg::norm(z) <= schedules.beta_at(step) {
            let g = schedules.gamma_at(step);
            self.a.add_sym_rank2(-g, &p, &q);
            self.a.add_diagonal(2.0 * g);
        } else {
            outcome.truncated = true;
            self.truncation_hits += 1;
        }
        if project_frobenius_ball(&mut self.a, schedules.beta_prime_at(step)) {
            outcome.projected = true;
            self.projection_hits += 1;
        }
        if !self.a.is_finite() {
            return Err(EstimatorError::NonFiniteIterate { step });
        }
        self.n = step;
        if let Some(avg) = self.average.as_mut() {
            avg.push(&self.a);
        }
        Ok(outcome)
    }
}
