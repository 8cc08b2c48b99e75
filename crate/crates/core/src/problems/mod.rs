//! Per-sample objective oracles.
//!
//! Each model describes a loss `g(x, h)` whose expectation `G(h) = E[g(X, h)]`
//! is minimized. Optimizers only see the [`Objective`] trait: a gradient, a
//! Hessian-vector product and, where the structure allows it, a full per-sample
//! Hessian or a vector `φ` with `E[φ φᵀ] ≈ ∇²G` for Riccati (Sherman-Morrison)
//! updates.

use rand::RngCore;
use thiserror::Error;

use crate::linalg::SymMat;

mod linear;
mod logistic;
mod median;
mod pmeans;
mod quadratic;
mod sphere;

pub use linear::LinearModel;
pub use logistic::{sigmoid, LogisticModel};
pub use median::{median_phi, median_phi_step, GeometricMedian};
pub use pmeans::PMeans;
pub use quadratic::FrozenQuadratic;
pub use sphere::{sphere_true_inverse_hessian, SphereModel};

/// Distances below this are treated as the singular point `x = h`.
pub const SINGULARITY_EPS: f64 = 1e-12;

/// Full per-sample Hessians are only assembled up to this dimension.
pub const FULL_HESSIAN_MAX_DIM: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter outside the model domain: {0}")]
    Domain(String),
    #[error("{0}")]
    Invalid(String),
}

/// One observation: features `x` and, for supervised models, a label `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }

    pub fn unlabeled(x: Vec<f64>) -> Self {
        Self { x, y: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub full_hessian: bool,
    pub riccati_phi: bool,
}

/// Extra inputs for building the Riccati vector at step `step` (1-based).
pub struct PhiContext<'a> {
    pub step: u64,
    pub rng: &'a mut dyn RngCore,
}

pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    /// Dimension `d` of the parameter.
    fn dim(&self) -> usize;

    fn capabilities(&self) -> Capabilities;

    fn loss(&self, sample: &Sample, h: &[f64]) -> f64;

    fn gradient(&self, sample: &Sample, h: &[f64]) -> Vec<f64>;

    /// `∇²_h g(x, h) z`.
    fn hessian_vec(&self, sample: &Sample, h: &[f64], z: &[f64]) -> Vec<f64>;

    fn full_hessian(&self, _sample: &Sample, _h: &[f64]) -> Option<SymMat> {
        None
    }

    fn riccati_phi(&self, _sample: &Sample, _h: &[f64], _ctx: PhiContext<'_>) -> Option<Vec<f64>> {
        None
    }

    /// Whether `(sample, h)` hits the model's singular set, where the oracles
    /// return zero by convention.
    fn is_singular(&self, _sample: &Sample, _h: &[f64]) -> bool {
        false
    }

    /// Rejects parameters outside the model's domain.
    fn check_point(&self, _h: &[f64]) -> Result<(), ModelError> {
        Ok(())
    }
}

/// `x - h` together with its norm.
pub(crate) fn offset(x: &[f64], h: &[f64]) -> (Vec<f64>, f64) {
    let diff = crate::linalg::sub(x, h);
    let r = crate::linalg::norm(&diff);
    (diff, r)
}
