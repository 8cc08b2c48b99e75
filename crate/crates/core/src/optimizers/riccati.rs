use serde::{Deserialize, Serialize};

use super::{checked_gradient, ensure_finite, Counters, OptimError, Optimizer};
use crate::averaging::WeightedAverage;
use crate::inverse_hessian::{ScheduleError, StepSize};
use crate::linalg::{self, SymMat};
use crate::problems::{Objective, PhiContext, Sample};
use crate::rng::StreamRng;

/// Smallest admissible `1 + φᵀ S⁻¹ φ`; below it `S⁻¹` has lost definiteness.
pub const RICCATI_MIN_DENOMINATOR: f64 = 1e-14;

/// Replaces `S⁻¹` by `(S + φ φᵀ)⁻¹` in `O(d²)`:
/// `S⁻¹ - (S⁻¹φ)(S⁻¹φ)ᵀ / (1 + φᵀ S⁻¹ φ)`.
pub fn sherman_morrison_update(s_inv: &mut SymMat, phi: &[f64], step: u64) -> Result<(), OptimError> {
    let u = s_inv.mul_vec(phi);
    let denom = 1.0 + linalg::dot(phi, &u);
    if !(denom > RICCATI_MIN_DENOMINATOR) {
        return Err(OptimError::RiccatiDenominator { step, value: denom });
    }
    s_inv.add_rank1(-1.0 / denom, &u);
    if !s_inv.is_finite() {
        return Err(OptimError::NonFinite {
            step,
            what: "Riccati inverse",
        });
    }
    Ok(())
}

fn phi_at(
    model: &dyn Objective,
    sample: &Sample,
    h: &[f64],
    step: u64,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, OptimError> {
    let phi = model
        .riccati_phi(sample, h, PhiContext { step, rng })
        .ok_or_else(|| OptimError::RiccatiUnavailable {
            model: model.name().to_string(),
        })?;
    ensure_finite(&phi, step, "Riccati vector")?;
    Ok(phi)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnaConfig {}

/// Stochastic Newton with `S_n = I + Σ_{k≤n} φ_k φ_kᵀ`:
/// `θ_n = θ_{n-1} - S_n⁻¹ ∇g(X_n, θ_{n-1})`, where `S_n⁻¹` already includes
/// the current sample.
#[derive(Debug, Clone)]
pub struct Sna {
    theta: Vec<f64>,
    s_inv: SymMat,
    rng: StreamRng,
    n: u64,
    counters: Counters,
}

impl Sna {
    pub fn new(theta0: Vec<f64>, _config: SnaConfig, rng: StreamRng) -> Self {
        let d = theta0.len();
        Self {
            theta: theta0,
            s_inv: SymMat::identity(d),
            rng,
            n: 0,
            counters: Counters::default(),
        }
    }

    pub fn s_inverse(&self) -> &SymMat {
        &self.s_inv
    }
}

impl Optimizer for Sna {
    fn name(&self) -> &'static str {
        "sna"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.n + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        let phi = phi_at(model, sample, &self.theta, n, &mut self.rng)?;
        sherman_morrison_update(&mut self.s_inv, &phi, n)?;
        let direction = self.s_inv.mul_vec(&grad);
        linalg::axpy(-1.0, &direction, &mut self.theta);
        ensure_finite(&self.theta, n, "parameter")?;
        self.n = n;
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        &self.theta
    }

    /// `n S_n⁻¹`, which estimates `H⁻¹`.
    fn inverse_hessian(&self) -> Option<SymMat> {
        let mut m = self.s_inv.clone();
        m.scale(self.n.max(1) as f64);
        Some(m)
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WasnaConfig {
    /// Step sequence of the non-averaged iterate, evaluated at `n + 1`.
    pub step: StepSize,
    pub tau_prime: f64,
}

impl Default for WasnaConfig {
    fn default() -> Self {
        Self {
            step: StepSize::new(1.0, 0.75),
            tau_prime: 2.0,
        }
    }
}

impl WasnaConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        self.step.validate("step")?;
        if !(self.tau_prime >= 0.0) {
            return Err(ScheduleError::OutOfRange {
                name: "tau_prime",
                value: self.tau_prime,
                range: "[0, inf)".into(),
            }
            .into());
        }
        Ok(())
    }
}

/// Weighted-averaged stochastic Newton with Riccati updates.
///
/// `φ̄_n` is built at the averaged parameter and the gradient at the
/// non-averaged one. The matrix is normalized as `S̄_n = S_n / (n + 1)`, so the
/// non-averaged step is `θ̄_n = θ̄_{n-1} - γ_{n+1} (n + 1) S_n⁻¹ ∇g(X_n, θ̄_{n-1})`
/// and behaves like `γ_{n+1} H⁻¹ ∇g` for large `n`.
#[derive(Debug, Clone)]
pub struct Wasna {
    theta: Vec<f64>,
    theta_avg: WeightedAverage<Vec<f64>>,
    s_inv: SymMat,
    config: WasnaConfig,
    rng: StreamRng,
    n: u64,
    counters: Counters,
}

impl Wasna {
    pub fn new(theta0: Vec<f64>, config: WasnaConfig, rng: StreamRng) -> Self {
        let d = theta0.len();
        Self {
            theta_avg: WeightedAverage::new(theta0.clone(), config.tau_prime),
            theta: theta0,
            s_inv: SymMat::identity(d),
            config,
            rng,
            n: 0,
            counters: Counters::default(),
        }
    }

    /// The non-averaged iterate `θ̄_n`.
    pub fn iterate(&self) -> &[f64] {
        &self.theta
    }

    pub fn averaged(&self) -> &[f64] {
        self.theta_avg.value()
    }

    pub fn s_inverse(&self) -> &SymMat {
        &self.s_inv
    }
}

impl Optimizer for Wasna {
    fn name(&self) -> &'static str {
        "wasna"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.n + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        let anchor = self.theta_avg.value().clone();
        model
            .check_point(&anchor)
            .map_err(|source| OptimError::Model { step: n, source })?;
        let phi = phi_at(model, sample, &anchor, n, &mut self.rng)?;
        sherman_morrison_update(&mut self.s_inv, &phi, n)?;

        let rate = self.config.step.at(n + 1) * (n + 1) as f64;
        let direction = self.s_inv.mul_vec(&grad);
        linalg::axpy(-rate, &direction, &mut self.theta);
        ensure_finite(&self.theta, n, "parameter")?;
        self.theta_avg.push(&self.theta);
        self.n = n;
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        self.theta_avg.value()
    }

    fn inverse_hessian(&self) -> Option<SymMat> {
        let mut m = self.s_inv.clone();
        m.scale((self.n + 1) as f64);
        Some(m)
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.n
    }
}
