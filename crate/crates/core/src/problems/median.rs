//! Geometric median, `g(x, h) = ‖x - h‖ - ‖x‖`.
//!
//! Gradient `-(x - h)/‖x - h‖`, per-sample Hessian `(I - u uᵀ)/r` with
//! `r = ‖x - h‖` and `u = (x - h)/r`. Gradients are bounded by one, and the
//! Hessian at the median is positive definite whenever `X` is not concentrated
//! on a line; moment bounds on the Hessian need `E[‖X - h‖^{-q}]` finite, which
//! holds when the distribution of `X` has no atoms and a bounded density near
//! every point. The event `x = h` has probability zero for such `X`; there the
//! oracles return zero.
//!
//! A Riccati vector is not available in closed form. The finite-difference
//! vector [`median_phi`] satisfies `E_Z[φ φᵀ] → ∇²g` as the difference step
//! goes to zero.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{offset, Capabilities, Objective, PhiContext, Sample, FULL_HESSIAN_MAX_DIM, SINGULARITY_EPS};
use crate::linalg::{self, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometricMedian {
    dim: usize,
}

impl GeometricMedian {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

fn unit_gradient(x: &[f64], h: &[f64]) -> Vec<f64> {
    let (diff, r) = offset(x, h);
    if r <= SINGULARITY_EPS {
        vec![0.0; x.len()]
    } else {
        linalg::scaled(-1.0 / r, &diff)
    }
}

/// Difference step `1 / (n ln(n + 1))` for step `n ≥ 1`.
pub fn median_phi_step(n: u64) -> f64 {
    assert!(n >= 1);
    let n = n as f64;
    1.0 / (n * (n + 1.0).ln())
}

/// `sqrt(‖x - h‖)/α · (∇g(x, h + α z) - ∇g(x, h))`, or zero at the singular point.
pub fn median_phi(x: &[f64], h: &[f64], alpha: f64, z: &[f64]) -> Vec<f64> {
    let r = linalg::norm(&linalg::sub(x, h));
    if r <= SINGULARITY_EPS {
        return vec![0.0; x.len()];
    }
    let mut shifted = h.to_vec();
    linalg::axpy(alpha, z, &mut shifted);
    let g_shift = unit_gradient(x, &shifted);
    let g_here = unit_gradient(x, h);
    let c = r.sqrt() / alpha;
    g_shift.iter().zip(&g_here).map(|(a, b)| c * (a - b)).collect()
}

impl Objective for GeometricMedian {
    fn name(&self) -> &str {
        "median"
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
        linalg::norm(&linalg::sub(&s.x, h)) - linalg::norm(&s.x)
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        unit_gradient(&s.x, h)
    }

    fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
        let (diff, r) = offset(&s.x, h);
        if r <= SINGULARITY_EPS {
            return vec![0.0; self.dim];
        }
        // (z - u uᵀz)/r with u = diff/r
        let c = linalg::dot(&diff, z) / (r * r);
        z.iter().zip(&diff).map(|(zi, di)| (zi - c * di) / r).collect()
    }

    fn full_hessian(&self, s: &Sample, h: &[f64]) -> Option<SymMat> {
        if self.dim > FULL_HESSIAN_MAX_DIM {
            return None;
        }
        let (diff, r) = offset(&s.x, h);
        if r <= SINGULARITY_EPS {
            return Some(SymMat::zeros(self.dim));
        }
        let mut m = SymMat::scaled_identity(self.dim, 1.0 / r);
        m.add_rank1(-1.0 / (r * r * r), &diff);
        Some(m)
    }

    fn riccati_phi(&self, s: &Sample, h: &[f64], ctx: PhiContext<'_>) -> Option<Vec<f64>> {
        let z: Vec<f64> = (0..self.dim).map(|_| ctx.rng.sample(StandardNormal)).collect();
        Some(median_phi(&s.x, h, median_phi_step(ctx.step), &z))
    }

    fn is_singular(&self, s: &Sample, h: &[f64]) -> bool {
        linalg::norm(&linalg::sub(&s.x, h)) <= SINGULARITY_EPS
    }
}
