//! Online stochastic optimization with a directly estimated inverse Hessian.
//!
//! The core pieces are [`inverse_hessian::InverseHessianState`], a Robbins-Monro
//! recursion for `H⁻¹` that only needs Hessian-vector products, and the
//! universal stochastic Newton methods in [`optimizers`] that precondition
//! their steps with it. Riccati-based Newton methods and first-order baselines
//! share the same [`optimizers::Optimizer`] interface, and [`problems`] holds the
//! per-sample objectives they are run on.

pub mod averaging;
pub mod data;
pub mod inverse_hessian;
pub mod linalg;
pub mod optimizers;
pub mod problems;
pub mod rng;
