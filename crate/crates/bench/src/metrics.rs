use stochastic_newton::linalg::{self, SymMat};
use stochastic_newton::problems::{LogisticModel, Sample};

/// `‖θ - θ*‖²`.
pub fn metric_mse(theta: &[f64], theta_star: &[f64]) -> f64 {
    linalg::squared_distance(theta, theta_star)
}

/// `‖A - H⁻¹‖_F`.
pub fn metric_frob(a: &SymMat, h_inv: &SymMat) -> f64 {
    a.sub(h_inv).frobenius_norm()
}

/// Share of samples with `1{π(θᵀ(1, x)) > 1/2} = y`; `NaN` on an empty set.
pub fn metric_accuracy(theta: &[f64], samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let model = LogisticModel::new(theta.len() - 1);
    let hits = samples
        .iter()
        .filter(|s| model.predict(&s.x, theta) == s.y)
        .count();
    hits as f64 / samples.len() as f64
}
