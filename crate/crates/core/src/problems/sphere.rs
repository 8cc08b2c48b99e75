//! Sphere fitting in ℝ³, `g(x, h) = (‖x - a‖ - b)² / 2` with `h = (a, b)`.
//!
//! With `r = ‖x - a‖` and `u = (x - a)/r`:
//!
//! ```text
//! ∇g  = ( a - x + b u ;  b - r )
//! ∇²g = [ (1 - b/r) I₃ + (b/r) u uᵀ   u ]
//!       [ uᵀ                          1 ]
//! ```
//!
//! For `X = μ + ρ W U` with `U` uniform on the unit sphere and `W` uniform on
//! `[1 - δ, 1 + δ]`, the Hessian at `(μ, ρ)` is `diag(c, c, c, 1)` with
//! `c = 1 - (2/3) E[W] E[1/W]`. The true parameter is only a local minimizer,
//! and the per-sample Hessian is indefinite near the center; this model is a
//! benchmark, not a case covered by the convexity assumptions.

use super::{offset, Capabilities, ModelError, Objective, Sample, SINGULARITY_EPS};
use crate::linalg::{self, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SphereModel;

impl SphereModel {
    pub fn new() -> Self {
        Self
    }

    fn hessian(&self, s: &Sample, h: &[f64]) -> SymMat {
        let (diff, r) = offset(&s.x, &h[..3]);
        let b = h[3];
        let mut m = SymMat::zeros(4);
        m.set(3, 3, 1.0);
        if r <= SINGULARITY_EPS {
            return m;
        }
        let u = linalg::scaled(1.0 / r, &diff);
        for i in 0..3 {
            for j in i..3 {
                let id = if i == j { 1.0 - b / r } else { 0.0 };
                m.set(i, j, id + b / r * u[i] * u[j]);
            }
            m.set(i, 3, u[i]);
        }
        m
    }
}

/// `H⁻¹ = diag(1/c, 1/c, 1/c, 1)` with `c = 1 - (2/3) E[1/W]`,
/// `E[1/W] = ln((1 + δ)/(1 - δ)) / (2δ)` for `W ~ U[1 - δ, 1 + δ]`.
pub fn sphere_true_inverse_hessian(delta: f64) -> Result<SymMat, ModelError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ModelError::Domain(format!("delta = {delta} is outside (0, 1)")));
    }
    let mean_inv = ((1.0 + delta) / (1.0 - delta)).ln() / (2.0 * delta);
    let c = 1.0 - 2.0 / 3.0 * mean_inv;
    Ok(SymMat::from_diagonal(&[1.0 / c, 1.0 / c, 1.0 / c, 1.0]))
}

impl Objective for SphereModel {
    fn name(&self) -> &str {
        "sphere"
    }

    fn dim(&self) -> usize {
        4
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            full_hessian: true,
            riccati_phi: false,
        }
    }

    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        let r = linalg::norm(&linalg::sub(&s.x, &h[..3]));
        0.5 * (r - h[3]).powi(2)
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        let (diff, r) = offset(&s.x, &h[..3]);
        let b = h[3];
        let k = if r <= SINGULARITY_EPS { 0.0 } else { b / r };
        let mut g: Vec<f64> = diff.iter().map(|d| -d + k * d).collect();
        g.push(b - r);
        g
    }

    fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
        self.hessian(s, h).mul_vec(z)
    }

    fn full_hessian(&self, s: &Sample, h: &[f64]) -> Option<SymMat> {
        Some(self.hessian(s, h))
    }

    fn is_singular(&self, s: &Sample, h: &[f64]) -> bool {
        linalg::norm(&linalg::sub(&s.x, &h[..3])) <= SINGULARITY_EPS
    }

    fn check_point(&self, h: &[f64]) -> Result<(), ModelError> {
        if h.len() != 4 {
            return Err(ModelError::Invalid(format!("sphere parameter has length {}", h.len())));
        }
        if !(h[3] > 0.0) {
            return Err(ModelError::Domain(format!("sphere radius b = {} must be positive", h[3])));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn point_on_sphere_has_zero_radius_residual() {
        let m = SphereModel::new();
        let s = Sample::unlabeled(vec![0.0, 2.0, 0.0]);
        let g = m.gradient(&s, &[0.0, 0.0, 0.0, 2.0]);
        assert_eq!(g[3], 0.0);
        assert_eq!(&g[..3], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn corner_entry_is_one() {
        let m = SphereModel::new();
        let mut r = rng::seeded(14);
        for _ in 0..10 {
            let s = Sample::unlabeled((0..3).map(|_| r.sample(StandardNormal)).collect());
            let h = [0.1, -0.2, 0.3, 1.7];
            assert_eq!(m.full_hessian(&s, &h).unwrap().get(3, 3), 1.0);
        }
    }

    #[test]
    fn domain_check() {
        let m = SphereModel::new();
        assert!(m.check_point(&[0.0, 0.0, 0.0, 1.0]).is_ok());
        assert!(matches!(m.check_point(&[0.0, 0.0, 0.0, 0.0]), Err(ModelError::Domain(_))));
        assert!(matches!(m.check_point(&[0.0, 0.0, 0.0, -1.0]), Err(ModelError::Domain(_))));
    }

    #[test]
    fn true_inverse_hessian() {
        // quadrature of 1/w over [0.8, 1.2] divided by 0.4, frozen beforehand
        const MEAN_INV_W: f64 = 1.0136627702704106;
        const INV_C: f64 = 3.084279607452676;
        let c = 1.0 - 2.0 / 3.0 * MEAN_INV_W;
        assert!((1.0 / c - INV_C).abs() < 1e-12);
        let h = sphere_true_inverse_hessian(0.2).unwrap();
        for i in 0..3 {
            assert!((h.get(i, i) - INV_C).abs() < 1e-12);
        }
        assert_eq!(h.get(3, 3), 1.0);
        assert_eq!(h.get(0, 1), 0.0);
        let tiny = sphere_true_inverse_hessian(1e-6).unwrap();
        assert!((tiny.get(0, 0) - 3.0).abs() < 1e-6);
        assert!(sphere_true_inverse_hessian(1.0).is_err());
        assert!(sphere_true_inverse_hessian(0.0).is_err());
    }

    #[test]
    fn finite_difference_consistency() {
        let m = SphereModel::new();
        let mut r = rng::seeded(15);
        for _ in 0..20 {
            let s = Sample::unlabeled((0..3).map(|_| 2.0 * r.sample::<f64, _>(StandardNormal)).collect());
            let mut h: Vec<f64> = (0..3).map(|_| 0.3 * r.sample::<f64, _>(StandardNormal)).collect();
            h.push(1.0 + r.random::<f64>());
            let z: Vec<f64> = (0..4).map(|_| r.sample(StandardNormal)).collect();
            assert!(rel_err(&fd_gradient(&m, &s, &h, 1e-6), &m.gradient(&s, &h)) < 1e-6);
            assert!(rel_err(&fd_hessian_vec(&m, &s, &h, &z, 1e-5), &m.hessian_vec(&s, &h, &z)) < 1e-5);
        }
    }
}
