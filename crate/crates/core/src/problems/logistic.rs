//! Binary logistic regression with an intercept.
//!
//! For features `x ∈ ℝ^p` the model works on `φ = (1, xᵀ)ᵀ ∈ ℝ^{p+1}` and
//! `g(x, y, h) = log(1 + exp(hᵀφ)) - y hᵀφ` with `y ∈ {0, 1}`. Gradient
//! `-(y - π(hᵀφ)) φ`, per-sample Hessian `a(hᵀφ) φ φᵀ` where
//! `a = π (1 - π)`. The Hessian is bounded by `‖φ‖²/4`; `∇²G(θ)` is positive
//! definite as soon as the design has a full-rank second moment (for instance
//! Gaussian or elliptical `X`). The Riccati vector is `sqrt(a) φ`.

use super::{Capabilities, Objective, PhiContext, Sample, FULL_HESSIAN_MAX_DIM};
use crate::linalg::{self, SymMat};

/// Overflow-safe logistic function `exp(z) / (1 + exp(z))`.
pub fn sigmoid(z: f64) -> f64 {
    if z < 0.0 {
        let e = z.exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + (-z).exp())
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogisticModel {
    features: usize,
}

impl LogisticModel {
    /// Model over `features` raw features; the parameter has `features + 1` entries.
    pub fn new(features: usize) -> Self {
        Self { features }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    /// `φ = (1, xᵀ)ᵀ`.
    pub fn design(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.features);
        let mut phi = Vec::with_capacity(x.len() + 1);
        phi.push(1.0);
        phi.extend_from_slice(x);
        phi
    }

    /// `hᵀφ` without materializing `φ`.
    pub fn linear_predictor(&self, x: &[f64], h: &[f64]) -> f64 {
        h[0] + linalg::dot(&h[1..], x)
    }

    pub fn probability(&self, x: &[f64], h: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x, h))
    }

    /// Class prediction `1{π(hᵀφ) > 1/2}`.
    pub fn predict(&self, x: &[f64], h: &[f64]) -> f64 {
        if self.probability(x, h) > 0.5 {
            1.0
        } else {
            0.0
        }
    }

    /// `a(z) = π(z)(1 - π(z))`.
    pub fn curvature(z: f64) -> f64 {
        let p = sigmoid(z);
        p * (1.0 - p)
    }
}

impl Objective for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.features + 1
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            full_hessian: self.dim() <= FULL_HESSIAN_MAX_DIM,
            riccati_phi: true,
        }
    }

    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        let z = self.linear_predictor(&s.x, h);
        softplus(z) - z * s.y
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        let z = self.linear_predictor(&s.x, h);
        let c = -(s.y - sigmoid(z));
        let mut g = Vec::with_capacity(self.dim());
        g.push(c);
        g.extend(s.x.iter().map(|v| c * v));
        g
    }

    fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
        let a = Self::curvature(self.linear_predictor(&s.x, h));
        let proj = z[0] + linalg::dot(&z[1..], &s.x);
        let c = a * proj;
        let mut out = Vec::with_capacity(self.dim());
        out.push(c);
        out.extend(s.x.iter().map(|v| c * v));
        out
    }

    fn full_hessian(&self, s: &Sample, h: &[f64]) -> Option<SymMat> {
        if self.dim() > FULL_HESSIAN_MAX_DIM {
            return None;
        }
        let a = Self::curvature(self.linear_predictor(&s.x, h));
        let mut m = SymMat::zeros(self.dim());
        m.add_rank1(a, &self.design(&s.x));
        Some(m)
    }

    fn riccati_phi(&self, s: &Sample, h: &[f64], _ctx: PhiContext<'_>) -> Option<Vec<f64>> {
        let a = Self::curvature(self.linear_predictor(&s.x, h));
        Some(linalg::scaled(a.sqrt(), &self.design(&s.x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn phi_ctx(r: &mut rand_chacha::ChaCha8Rng) -> PhiContext<'_> {
        PhiContext { step: 1, rng: r }
    }

    #[test]
    fn sigmoid_is_safe_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        for z in [-3.0, -0.1, 0.7, 12.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_at_zero_predictor() {
        let m = LogisticModel::new(2);
        let s = Sample::new(vec![2.0, -1.0], 1.0);
        let h = [0.0, 0.0, 0.0];
        assert_eq!(m.gradient(&s, &h), vec![-0.5, -1.0, 0.5]);
        assert_eq!(LogisticModel::curvature(0.0), 0.25);
    }

    #[test]
    fn gradient_saturates() {
        let m = LogisticModel::new(1);
        let s = Sample::new(vec![1.0], 1.0);
        let g = m.gradient(&s, &[0.0, 800.0]);
        assert!(linalg::norm(&g) < 1e-300);
    }

    #[test]
    fn hessian_vec_kernel_and_full_agreement() {
        let m = LogisticModel::new(2);
        let s = Sample::new(vec![1.0, 2.0], 0.0);
        // φ = (1, 1, 2); z ⟂ φ
        let z = [1.0, 1.0, -1.0];
        assert_eq!(m.hessian_vec(&s, &[0.3, -0.2, 0.1], &z), vec![0.0; 3]);

        let mut r = rng::seeded(5);
        for _ in 0..20 {
            let s = Sample::new((0..2).map(|_| r.sample(StandardNormal)).collect(), 1.0);
            let h: Vec<f64> = (0..3).map(|_| r.sample(StandardNormal)).collect();
            let z: Vec<f64> = (0..3).map(|_| r.sample(StandardNormal)).collect();
            let full = m.full_hessian(&s, &h).unwrap().mul_vec(&z);
            assert!(rel_err(&m.hessian_vec(&s, &h, &z), &full) < 1e-12);
        }
    }

    #[test]
    fn riccati_phi_reproduces_hessian() {
        let m = LogisticModel::new(3);
        let mut r = rng::seeded(6);
        let s = Sample::new(vec![0.0, 0.0, 0.0], 0.0);
        let phi = m.riccati_phi(&s, &[0.0; 4], phi_ctx(&mut r)).unwrap();
        assert_eq!(phi, vec![0.5, 0.0, 0.0, 0.0]);
        for _ in 0..20 {
            let s = Sample::new((0..3).map(|_| r.sample(StandardNormal)).collect(), 0.0);
            let h: Vec<f64> = (0..4).map(|_| r.sample(StandardNormal)).collect();
            let phi = m.riccati_phi(&s, &h, phi_ctx(&mut r)).unwrap();
            let outer = SymMat::outer(&phi);
            let full = m.full_hessian(&s, &h).unwrap();
            assert!(outer.sub(&full).frobenius_norm() <= 1e-12 * full.frobenius_norm().max(1e-300));
        }
        let s = Sample::new(vec![1.0, 1.0, 1.0], 0.0);
        let phi = m.riccati_phi(&s, &[0.0, 400.0, 400.0, 400.0], phi_ctx(&mut r)).unwrap();
        assert!(linalg::norm(&phi) < 1e-200);
    }

    #[test]
    fn finite_difference_consistency() {
        let m = LogisticModel::new(4);
        let mut r = rng::seeded(7);
        for _ in 0..20 {
            let s = Sample::new(
                (0..4).map(|_| r.sample(StandardNormal)).collect(),
                if r.random::<bool>() { 1.0 } else { 0.0 },
            );
            let h: Vec<f64> = (0..5).map(|_| r.sample::<f64, _>(StandardNormal) * 0.5).collect();
            let z: Vec<f64> = (0..5).map(|_| r.sample(StandardNormal)).collect();
            assert!(rel_err(&fd_gradient(&m, &s, &h, 1e-6), &m.gradient(&s, &h)) < 1e-6);
            assert!(rel_err(&fd_hessian_vec(&m, &s, &h, &z, 1e-5), &m.hessian_vec(&s, &h, &z)) < 1e-5);
        }
    }
}
