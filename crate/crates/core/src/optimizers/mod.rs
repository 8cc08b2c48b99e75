//! Online parameter estimators.
//!
//! Every algorithm consumes one sample per [`Optimizer::step`]:
//!
//! * `usna` / `uwasna`: stochastic Newton steps preconditioned by the directly
//!   tracked inverse Hessian (plain, and with weighted averaging of both the
//!   parameter and the matrix).
//! * `sna` / `wasna`: stochastic Newton steps whose inverse Hessian comes from
//!   Sherman-Morrison updates of `S_n = I + Σ φ_k φ_kᵀ`.
//! * `sgd`, `asgd` (Polyak-Ruppert averaged) and diagonal `adagrad`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inverse_hessian::{EstimatorError, ScheduleError};
use crate::linalg::SymMat;
use crate::problems::{ModelError, Objective, Sample};
use crate::rng::StreamRng;

mod first_order;
mod newton;
mod riccati;

pub use first_order::{AdaGrad, AdaGradConfig, Asgd, Sgd, SgdConfig};
pub use newton::{Usna, UsnaConfig, Uwasna, UwasnaConfig};
pub use riccati::{sherman_morrison_update, Sna, SnaConfig, Wasna, WasnaConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("step {step}: {source}")]
    Model { step: u64, source: ModelError },
    #[error("non-finite {what} at step {step}")]
    NonFinite { step: u64, what: &'static str },
    #[error("Riccati updates are not available for model `{model}`")]
    RiccatiUnavailable { model: String },
    #[error("Sherman-Morrison denominator {value:e} at step {step}: inverse is no longer positive definite")]
    RiccatiDenominator { step: u64, value: f64 },
    #[error("invalid schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("initial point has dimension {found}, model has {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Event counters accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub truncation_hits: u64,
    pub projection_hits: u64,
    pub singular_samples: u64,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, rhs: Self) {
        self.truncation_hits += rhs.truncation_hits;
        self.projection_hits += rhs.projection_hits;
        self.singular_samples += rhs.singular_samples;
    }
}

pub trait Optimizer: Send {
    fn name(&self) -> &'static str;

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError>;

    /// The reported parameter estimate (the averaged one for averaged methods).
    fn estimate(&self) -> &[f64];

    /// Current estimate of `H⁻¹`, for methods that track one.
    fn inverse_hessian(&self) -> Option<SymMat> {
        None
    }

    fn counters(&self) -> Counters {
        Counters::default()
    }

    fn steps(&self) -> u64;
}

/// Algorithm selection with per-algorithm settings, as written in plan files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmSpec {
    Usna(UsnaConfig),
    Uwasna(UwasnaConfig),
    Sna(SnaConfig),
    Wasna(WasnaConfig),
    Sgd(SgdConfig),
    Asgd(SgdConfig),
    Adagrad(AdaGradConfig),
}

pub const ALGORITHMS: [&str; 7] = ["usna", "uwasna", "sna", "wasna", "sgd", "asgd", "adagrad"];

impl AlgorithmSpec {
    /// Default settings for a registered algorithm name.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "usna" => Self::Usna(UsnaConfig::default()),
            "uwasna" => Self::Uwasna(UwasnaConfig::default()),
            "sna" => Self::Sna(SnaConfig::default()),
            "wasna" => Self::Wasna(WasnaConfig::default()),
            "sgd" => Self::Sgd(SgdConfig::default()),
            "asgd" => Self::Asgd(SgdConfig::default()),
            "adagrad" => Self::Adagrad(AdaGradConfig::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Usna(_) => "usna",
            Self::Uwasna(_) => "uwasna",
            Self::Sna(_) => "sna",
            Self::Wasna(_) => "wasna",
            Self::Sgd(_) => "sgd",
            Self::Asgd(_) => "asgd",
            Self::Adagrad(_) => "adagrad",
        }
    }

    pub fn needs_riccati(&self) -> bool {
        matches!(self, Self::Sna(_) | Self::Wasna(_))
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        match self {
            Self::Usna(c) => c.validate(),
            Self::Uwasna(c) => c.validate(),
            Self::Sna(_) => Ok(()),
            Self::Wasna(c) => c.validate(),
            Self::Sgd(c) | Self::Asgd(c) => c.validate(),
            Self::Adagrad(c) => c.validate(),
        }
    }

    /// Builds the optimizer started at `theta0`. `rng` feeds probe vectors or
    /// model-internal draws; methods that need neither ignore it.
    pub fn build(
        &self,
        model: &dyn Objective,
        theta0: Vec<f64>,
        rng: StreamRng,
    ) -> Result<Box<dyn Optimizer>, OptimError> {
        if theta0.len() != model.dim() {
            return Err(OptimError::Dimension {
                expected: model.dim(),
                found: theta0.len(),
            });
        }
        if self.needs_riccati() && !model.capabilities().riccati_phi {
            return Err(OptimError::RiccatiUnavailable {
                model: model.name().to_string(),
            });
        }
        self.validate()?;
        Ok(match self {
            Self::Usna(c) => Box::new(Usna::new(theta0, c.clone(), rng)?),
            Self::Uwasna(c) => Box::new(Uwasna::new(theta0, c.clone(), rng)?),
            Self::Sna(c) => Box::new(Sna::new(theta0, c.clone(), rng)),
            Self::Wasna(c) => Box::new(Wasna::new(theta0, c.clone(), rng)),
            Self::Sgd(c) => Box::new(Sgd::new(theta0, c.clone())),
            Self::Asgd(c) => Box::new(Asgd::new(theta0, c.clone())),
            Self::Adagrad(c) => Box::new(AdaGrad::new(theta0, c.clone())),
        })
    }
}

/// Gradient at `h`, with the domain check and singular-sample bookkeeping
/// shared by every method.
pub(crate) fn checked_gradient(
    model: &dyn Objective,
    sample: &Sample,
    h: &[f64],
    step: u64,
    counters: &mut Counters,
) -> Result<Vec<f64>, OptimError> {
    model
        .check_point(h)
        .map_err(|source| OptimError::Model { step, source })?;
    if model.is_singular(sample, h) {
        counters.singular_samples += 1;
    }
    let g = model.gradient(sample, h);
    if !crate::linalg::all_finite(&g) {
        return Err(OptimError::NonFinite { step, what: "gradient" });
    }
    Ok(g)
}

pub(crate) fn ensure_finite(v: &[f64], step: u64, what: &'static str) -> Result<(), OptimError> {
    if crate::linalg::all_finite(v) {
        Ok(())
    } else {
        Err(OptimError::NonFinite { step, what })
    }
}
