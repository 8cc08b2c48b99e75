//! p-means, `g(x, h) = ‖x - h‖^p / p` for `p ∈ (1, 2]`.
//!
//! Gradient `-(x - h) r^{p-2}`, per-sample Hessian
//! `r^{p-2} (I - (2 - p) u uᵀ)` with `r = ‖x - h‖`, `u = (x - h)/r`. Its
//! eigenvalues are `r^{p-2}` and `(p - 1) r^{p-2}`, both positive, so every
//! per-sample Hessian is positive definite. `p = 2` gives the mean and
//! `p → 1` the geometric median. Moment conditions on the Hessian need
//! `E[‖X - h‖^{(p-2)q}]` finite, true for distributions with a bounded density.

use super::{offset, Capabilities, Objective, Sample, FULL_HESSIAN_MAX_DIM, SINGULARITY_EPS};
use crate::linalg::{self, SymMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PMeans {
    dim: usize,
    p: f64,
}

impl PMeans {
    pub fn new(dim: usize, p: f64) -> Result<Self, super::ModelError> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(super::ModelError::Invalid(format!("p = {p} is outside (1, 2]")));
        }
        Ok(Self { dim, p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Objective for PMeans {
    fn name(&self) -> &str {
        "pmeans"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            full_hessian: self.dim <= FULL_HESSIAN_MAX_DIM,
            riccati_phi: false,
        }
    }

    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        linalg::norm(&linalg::sub(&s.x, h)).powf(self.p) / self.p
    }

    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        let (diff, r) = offset(&s.x, h);
        if r <= SINGULARITY_EPS {
            return vec![0.0; self.dim];
        }
        linalg::scaled(-r.powf(self.p - 2.0), &diff)
    }

    fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
        let (diff, r) = offset(&s.x, h);
        if r <= SINGULARITY_EPS {
            return vec![0.0; self.dim];
        }
        let scale = r.powf(self.p - 2.0);
        let c = (2.0 - self.p) * linalg::dot(&diff, z) / (r * r);
        z.iter().zip(&diff).map(|(zi, di)| scale * (zi - c * di)).collect()
    }

    fn full_hessian(&self, s: &Sample, h: &[f64]) -> Option<SymMat> {
        if self.dim > FULL_HESSIAN_MAX_DIM {
            return None;
        }
        let (diff, r) = offset(&s.x, h);
        if r <= SINGULARITY_EPS {
            return Some(SymMat::zeros(self.dim));
        }
        let scale = r.powf(self.p - 2.0);
        let mut m = SymMat::scaled_identity(self.dim, scale);
        m.add_rank1(-scale * (2.0 - self.p) / (r * r), &diff);
        Some(m)
    }

    fn is_singular(&self, s: &Sample, h: &[f64]) -> bool {
        linalg::norm(&linalg::sub(&s.x, h)) <= SINGULARITY_EPS
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
    fn p_two_is_the_mean() {
        let m = PMeans::new(3, 2.0).unwrap();
        let s = Sample::unlabeled(vec![1.0, -2.0, 0.5]);
        let h = [0.25, 0.5, -1.0];
        assert_eq!(m.gradient(&s, &h), linalg::sub(&h, &s.x));
        assert_eq!(m.hessian_vec(&s, &h, &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hessian_along_offset() {
        let m = PMeans::new(2, 1.5).unwrap();
        let s = Sample::unlabeled(vec![3.0, 4.0]);
        let u = [0.6, 0.8];
        let hv = m.hessian_vec(&s, &[0.0, 0.0], &u);
        let expected = 0.5 * 5f64.powf(-0.5);
        assert!((hv[0] - expected * 0.6).abs() < 1e-15);
        assert!((hv[1] - expected * 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(PMeans::new(2, 1.0).is_err());
        assert!(PMeans::new(2, 2.5).is_err());
    }

    #[test]
    fn hessians_are_positive_definite() {
        let m = PMeans::new(4, 1.5).unwrap();
        let mut r = rng::seeded(12);
        for _ in 0..20 {
            let s = Sample::unlabeled((0..4).map(|_| r.sample(StandardNormal)).collect());
            let h: Vec<f64> = (0..4).map(|_| r.sample(StandardNormal)).collect();
            assert!(m.full_hessian(&s, &h).unwrap().min_eigenvalue() > 0.0);
        }
    }

    #[test]
    fn finite_difference_consistency() {
        let m = PMeans::new(5, 1.5).unwrap();
        let mut r = rng::seeded(13);
        for _ in 0..20 {
            let s = Sample::unlabeled((0..5).map(|_| r.sample(StandardNormal)).collect());
            let h: Vec<f64> = (0..5).map(|_| r.sample(StandardNormal)).collect();
            let z: Vec<f64> = (0..5).map(|_| r.sample(StandardNormal)).collect();
            assert!(rel_err(&fd_gradient(&m, &s, &h, 1e-6), &m.gradient(&s, &h)) < 1e-6);
            assert!(rel_err(&fd_hessian_vec(&m, &s, &h, &z, 1e-5), &m.hessian_vec(&s, &h, &z)) < 1e-5);
        }
    }
}
