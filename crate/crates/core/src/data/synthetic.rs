//! Seeded synthetic data. Every generator is a pure function of its settings
//! and seed (ChaCha8 under the hood).

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::linalg::{Cholesky, SymMat};
use crate::problems::{sigmoid, Sample};
use crate::rng::seeded;

/// The covariance used for Gaussian data, and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceChoice {
    pub matrix: SymMat,
    /// Smallest eigenvalue of the first candidate, `|i - j|^{1/2}` off the
    /// diagonal with `d` on it.
    pub attempted_min_eigenvalue: f64,
    /// Whether that candidate was rejected in favour of `0.5^{|i - j|}`.
    pub fallback: bool,
}

/// `Σ_ij = |i - j|^{1/2}` for `i ≠ j` and `Σ_ii = d`, or `0.5^{|i - j|}` when
/// that matrix is not positive definite.
///
/// The square-root kernel vanishes on the diagonal, so some diagonal has to be
/// chosen. With `d` on the diagonal the candidate is definite up to `d = 29`;
/// from `d = 30` on the fallback is used.
pub fn power_covariance(dim: usize) -> CovarianceChoice {
    let dist = |i: usize, j: usize| i.abs_diff(j) as f64;
    let candidate = SymMat::from_fn(dim, |i, j| if i == j { dim as f64 } else { dist(i, j).sqrt() });
    let attempted_min_eigenvalue = candidate.min_eigenvalue();
    if attempted_min_eigenvalue > 1e-10 && Cholesky::factor(&candidate).is_ok() {
        CovarianceChoice {
            matrix: candidate,
            attempted_min_eigenvalue,
            fallback: false,
        }
    } else {
        CovarianceChoice {
            matrix: SymMat::from_fn(dim, |i, j| 0.5f64.powf(dist(i, j))),
            attempted_min_eigenvalue,
            fallback: true,
        }
    }
}

fn normal_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `n` draws of `N(0, cov)` as `L z` with `cov = L Lᵀ`.
pub fn gen_gaussian(cov: &SymMat, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, DataError> {
    let l = Cholesky::factor(cov)?;
    let mut rng = seeded(seed);
    Ok((0..n).map(|_| l.mul_vec(&normal_vec(&mut rng, cov.dim()))).collect())
}

/// Centered Gaussian data with the [`power_covariance`] of dimension `dim`.
pub fn gen_gaussian_cov(dim: usize, n: usize, seed: u64) -> Result<(Dataset, CovarianceChoice), DataError> {
    if dim == 0 {
        return Err(DataError::Invalid("dimension must be at least 1".into()));
    }
    let cov = power_covariance(dim);
    let xs = gen_gaussian(&cov.matrix, n, seed)?;
    let samples = xs.into_iter().map(Sample::unlabeled).collect();
    Ok((Dataset::new(samples, dim, format!("gaussian(d={dim})")), cov))
}

/// Logistic data: `X ~ N(0, I_p)`, `Y | X ~ Bernoulli(π(θ*ᵀ(1, X)))` with
/// `theta_star` of length `p + 1`, intercept first.
pub fn gen_logistic(theta_star: &[f64], n: usize, seed: u64) -> Dataset {
    assert!(!theta_star.is_empty(), "theta_star needs an intercept");
    let p = theta_star.len() - 1;
    let mut rng = seeded(seed);
    let samples = (0..n)
        .map(|_| {
            let x = normal_vec(&mut rng, p);
            let eta = theta_star[0] + crate::linalg::dot(&theta_star[1..], &x);
            let y = if rng.random::<f64>() < sigmoid(eta) { 1.0 } else { 0.0 };
            Sample::new(x, y)
        })
        .collect();
    Dataset::new(samples, p, format!("logistic(p={p})"))
}

/// Points `μ + r W U` in ℝ³ with `U` uniform on the unit sphere and
/// `W ~ U[1 - δ, 1 + δ]`.
pub fn gen_sphere(mu: [f64; 3], r: f64, delta: f64, n: usize, seed: u64) -> Result<Dataset, DataError> {
    if !(r > 0.0) {
        return Err(DataError::Invalid(format!("radius {r} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DataError::Invalid(format!("delta {delta} is outside (0, 1)")));
    }
    let width = Uniform::new_inclusive(1.0 - delta, 1.0 + delta).expect("valid interval");
    let mut rng = seeded(seed);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let g = normal_vec(&mut rng, 3);
        let norm = crate::linalg::norm(&g);
        if norm == 0.0 {
            continue;
        }
        let w: f64 = rng.sample(width);
        let x = (0..3).map(|i| mu[i] + r * w * g[i] / norm).collect();
        samples.push(Sample::unlabeled(x));
    }
    Ok(Dataset::new(samples, 3, format!("sphere(r={r}, delta={delta})")))
}

/// `Y = θ*ᵀX + σ ε` with `X ~ N(0, cov)` and standard normal `ε`.
pub fn gen_linear(
    theta_star: &[f64],
    cov: &SymMat,
    noise_sd: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    let d = theta_star.len();
    if cov.dim() != d {
        return Err(DataError::Invalid(format!(
            "covariance has dimension {}, theta_star has {d}",
            cov.dim()
        )));
    }
    let l = Cholesky::factor(cov)?;
    let mut rng = seeded(seed);
    let samples = (0..n)
        .map(|_| {
            let x = l.mul_vec(&normal_vec(&mut rng, d));
            let y = crate::linalg::dot(theta_star, &x) + noise_sd * rng.sample::<f64, _>(StandardNormal);
            Sample::new(x, y)
        })
        .collect();
    Ok(Dataset::new(samples, d, format!("linear(d={d})")))
}

/// `X = center + σ ε` with standard normal `ε`.
pub fn gen_location(center: &[f64], noise_sd: f64, n: usize, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let samples = (0..n)
        .map(|_| {
            let e = normal_vec(&mut rng, center.len());
            Sample::unlabeled(center.iter().zip(&e).map(|(c, e)| c + noise_sd * e).collect())
        })
        .collect();
    Dataset::new(samples, center.len(), format!("location(d={})", center.len()))
}

fn default_radius() -> f64 {
    2.0
}

fn default_delta() -> f64 {
    0.2
}

fn unit() -> f64 {
    1.0
}

/// Data source of an experiment, as written in plan files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticSpec {
    /// Centered Gaussian with the power covariance; median and p-means data.
    Gaussian { dim: usize },
    Logistic { theta_star: Vec<f64> },
    Sphere {
        #[serde(default)]
        mu: [f64; 3],
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Linear {
        theta_star: Vec<f64>,
        /// Row-major design covariance; identity when omitted.
        #[serde(default)]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default = "unit")]
        noise_sd: f64,
    },
    Location {
        center: Vec<f64>,
        #[serde(default = "unit")]
        noise_sd: f64,
    },
}

/// A generated dataset plus the covariance actually used, when one was built.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    pub covariance: Option<CovarianceChoice>,
}

impl SyntheticSpec {
    /// Dimension of the generated feature vectors.
    pub fn feature_dim(&self) -> usize {
        match self {
            Self::Gaussian { dim } => *dim,
            Self::Logistic { theta_star } => theta_star.len().saturating_sub(1),
            Self::Sphere { .. } => 3,
            Self::Linear { theta_star, .. } => theta_star.len(),
            Self::Location { center, .. } => center.len(),
        }
    }

    /// Minimizer of the matching objective: zero for centered Gaussian data,
    /// `(μ, r)` for the sphere.
    pub fn truth(&self) -> Vec<f64> {
        match self {
            Self::Gaussian { dim } => vec![0.0; *dim],
            Self::Logistic { theta_star } | Self::Linear { theta_star, .. } => theta_star.clone(),
            Self::Sphere { mu, radius, .. } => vec![mu[0], mu[1], mu[2], *radius],
            Self::Location { center, .. } => center.clone(),
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Generated, DataError> {
        let plain = |dataset| Generated {
            dataset,
            covariance: None,
        };
        Ok(match self {
            Self::Gaussian { dim } => {
                let (dataset, cov) = gen_gaussian_cov(*dim, n, seed)?;
                Generated {
                    dataset,
                    covariance: Some(cov),
                }
            }
            Self::Logistic { theta_star } => {
                if theta_star.is_empty() {
                    return Err(DataError::Invalid("theta_star needs an intercept".into()));
                }
                plain(gen_logistic(theta_star, n, seed))
            }
            Self::Sphere { mu, radius, delta } => plain(gen_sphere(*mu, *radius, *delta, n, seed)?),
            Self::Linear {
                theta_star,
                covariance,
                noise_sd,
            } => {
                let cov = match covariance {
                    Some(rows) => SymMat::from_rows(rows)?,
                    None => SymMat::identity(theta_star.len()),
                };
                plain(gen_linear(theta_star, &cov, *noise_sd, n, seed)?)
            }
            Self::Location { center, noise_sd } => plain(gen_location(center, *noise_sd, n, seed)),
        })
    }
}
