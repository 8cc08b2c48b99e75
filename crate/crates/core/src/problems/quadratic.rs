//! Quadratic loss with a fixed Hessian, `g(x, h) = (h - x)ᵀ H (h - x) / 2`.
//!
//! Every per-sample Hessian equals `H`, so this is the noiseless reference case
//! for the inverse-Hessian recursion: the only randomness in `Q = H Z` comes
//! from the probe. The minimizer of `G` is `E[X]`.

use super::{Capabilities, Objective, Sample};
use crate::linalg::{self, SymMat};

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenQuadratic {
    hessian: SymMat,
}

impl FrozenQuadratic {
    pub fn new(hessian: SymMat) -> Self {
        Self { hessian }
    }

    pub fn hessian(&self) -> &SymMat {
        &self.hessian
    }
}

impl Objective for FrozenQuadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.hessian.dim()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            full_hessian: true,
            riccati_phi: false,
        }
    }

    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        0.5 * self.hessian.quadratic_form(&linalg::sub(h, &s.x))
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        self.hessian.mul_vec(&linalg::sub(h, &s.x))
    }

    fn hessian_vec(&self, _s: &Sample, _h: &[f64], z: &[f64]) -> Vec<f64> {
        self.hessian.mul_vec(z)
    }

    fn full_hessian(&self, _s: &Sample, _h: &[f64]) -> Option<SymMat> {
        Some(self.hessian.clone())
    }
}
