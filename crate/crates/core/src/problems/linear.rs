//! Least-squares linear regression, `g(x, y, h) = (y - xᵀh)² / 2`.
//!
//! Gradient `-(y - xᵀh) x`, per-sample Hessian `x xᵀ`. With `E[X Xᵀ]` positive
//! definite and a finite fourth moment of `X` all curvature and moment
//! conditions hold, and `H = E[X Xᵀ]` does not depend on `h`. The Riccati
//! vector is `x` itself, which makes SNA recursive least squares.

use super::{Capabilities, Objective, PhiContext, Sample, FULL_HESSIAN_MAX_DIM};
use crate::linalg::{self, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearModel {
    dim: usize,
}

impl LinearModel {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    fn residual(&self, s: &Sample, h: &[f64]) -> f64 {
        s.y - linalg::dot(&s.x, h)
    }
}

impl Objective for LinearModel {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            full_hessian: self.dim <= FULL_HESSIAN_MAX_DIM,
            riccati_phi: true,
        }
    }

    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        0.5 * self.residual(s, h).powi(2)
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        linalg::scaled(-self.residual(s, h), &s.x)
    }

    fn hessian_vec(&self, s: &Sample, _h: &[f64], z: &[f64]) -> Vec<f64> {
        linalg::scaled(linalg::dot(&s.x, z), &s.x)
    }

    fn full_hessian(&self, s: &Sample, _h: &[f64]) -> Option<SymMat> {
        (self.dim <= FULL_HESSIAN_MAX_DIM).then(|| SymMat::outer(&s.x))
    }

    fn riccati_phi(&self, s: &Sample, _h: &[f64], _ctx: PhiContext<'_>) -> Option<Vec<f64>> {
        Some(s.x.clone())
    }
}
