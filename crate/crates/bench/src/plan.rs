//! Experiment plans: what to run, on which data, and what to measure.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochastic_newton::data::SyntheticSpec;
use stochastic_newton::linalg::SymMat;
use stochastic_newton::optimizers::{AlgorithmSpec, ALGORITHMS};
use stochastic_newton::problems::{
    sphere_true_inverse_hessian, FrozenQuadratic, GeometricMedian, LinearModel, LogisticModel,
    Objective, PMeans, SphereModel,
};

use crate::BenchError;

/// Logistic coefficients of the reference simulation, intercept first.
pub const LOGISTIC_THETA_STAR: [f64; 10] = [0.0, 3.0, -9.0, 4.0, -9.0, 15.0, 0.0, -7.0, 1.0, 0.0];

pub const DEFAULT_CHECKPOINTS: usize = 50;

/// Share of failed replications per algorithm tolerated before a run fails.
pub const FAILURE_BUDGET: f64 = 0.2;

fn reference_theta() -> Vec<f64> {
    LOGISTIC_THETA_STAR.to_vec()
}
fn ten() -> usize {
    10
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn p_default() -> f64 {
    1.5
}
fn delta_default() -> f64 {
    0.2
}
fn test_size_default() -> usize {
    10_000
}
fn one_pass() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Logistic regression on `X ~ N(0, I)`; accuracy is measured on a fresh
    /// sample of `test_size` points.
    Logistic {
        #[serde(default = "reference_theta")]
        theta_star: Vec<f64>,
        #[serde(default = "test_size_default")]
        test_size: usize,
    },
    /// Geometric median of centered Gaussian data.
    Median {
        #[serde(default = "ten")]
        dim: usize,
    },
    /// p-mean of centered Gaussian data.
    Pmeans {
        #[serde(default = "ten")]
        dim: usize,
        #[serde(default = "p_default")]
        p: f64,
    },
    Sphere {
        #[serde(default)]
        mu: [f64; 3],
        #[serde(default = "two")]
        radius: f64,
        #[serde(default = "delta_default")]
        delta: f64,
    },
    /// Least squares with Gaussian design.
    Linear {
        theta_star: Vec<f64>,
        #[serde(default)]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default = "one")]
        noise_sd: f64,
    },
    /// Fixed-Hessian quadratic around a noisy center.
    Quadratic {
        hessian: Vec<Vec<f64>>,
        center: Vec<f64>,
        #[serde(default = "one")]
        noise_sd: f64,
    },
    /// Logistic regression on a LIBSVM file, split once into train and test.
    Libsvm {
        path: PathBuf,
        #[serde(default = "half")]
        train_fraction: f64,
        #[serde(default = "one_pass")]
        passes: usize,
    },
}

pub const MODELS: [(&str, &str); 7] = [
    ("logistic", "logistic regression, Gaussian design, known coefficients"),
    ("median", "geometric median of Gaussian data"),
    ("pmeans", "p-mean (1 < p <= 2) of Gaussian data"),
    ("sphere", "sphere fitting in R^3, closed-form inverse Hessian"),
    ("linear", "least-squares regression, closed-form inverse Hessian"),
    ("quadratic", "fixed-Hessian quadratic, closed-form inverse Hessian"),
    ("libsvm", "logistic regression on a LIBSVM file with a train/test split"),
];

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Logistic { .. } => "logistic",
            Self::Median { .. } => "median",
            Self::Pmeans { .. } => "pmeans",
            Self::Sphere { .. } => "sphere",
            Self::Linear { .. } => "linear",
            Self::Quadratic { .. } => "quadratic",
            Self::Libsvm { .. } => "libsvm",
        }
    }

    /// The per-sample objective. `feature_dim` is only used for file data.
    pub fn objective(&self, feature_dim: usize) -> Result<Box<dyn Objective>, BenchError> {
        Ok(match self {
            Self::Logistic { theta_star, .. } => {
                if theta_star.is_empty() {
                    return Err(BenchError::Plan("theta_star needs an intercept".into()));
                }
                Box::new(LogisticModel::new(theta_star.len() - 1))
            }
            Self::Median { dim } => Box::new(GeometricMedian::new(*dim)),
            Self::Pmeans { dim, p } => {
                Box::new(PMeans::new(*dim, *p).map_err(|e| BenchError::Plan(e.to_string()))?)
            }
            Self::Sphere { .. } => Box::new(SphereModel::new()),
            Self::Linear { theta_star, .. } => Box::new(LinearModel::new(theta_star.len())),
            Self::Quadratic { hessian, .. } => Box::new(FrozenQuadratic::new(sym_from_rows(hessian)?)),
            Self::Libsvm { .. } => Box::new(LogisticModel::new(feature_dim)),
        })
    }

    /// Generator for synthetic models.
    pub fn synthetic(&self) -> Option<SyntheticSpec> {
        Some(match self {
            Self::Logistic { theta_star, .. } => SyntheticSpec::Logistic {
                theta_star: theta_star.clone(),
            },
            Self::Median { dim } | Self::Pmeans { dim, .. } => SyntheticSpec::Gaussian { dim: *dim },
            Self::Sphere { mu, radius, delta } => SyntheticSpec::Sphere {
                mu: *mu,
                radius: *radius,
                delta: *delta,
            },
            Self::Linear {
                theta_star,
                covariance,
                noise_sd,
            } => SyntheticSpec::Linear {
                theta_star: theta_star.clone(),
                covariance: covariance.clone(),
                noise_sd: *noise_sd,
            },
            Self::Quadratic { center, noise_sd, .. } => SyntheticSpec::Location {
                center: center.clone(),
                noise_sd: *noise_sd,
            },
            Self::Libsvm { .. } => return None,
        })
    }

    /// Minimizer of the population objective, when known.
    pub fn truth(&self) -> Option<Vec<f64>> {
        self.synthetic().map(|s| s.truth())
    }

    /// Exact `H⁻¹` at the minimizer, when available in closed form.
    pub fn true_inverse_hessian(&self) -> Result<Option<SymMat>, BenchError> {
        let plan_err = |e: String| BenchError::Plan(e);
        Ok(match self {
            Self::Sphere { delta, .. } => {
                Some(sphere_true_inverse_hessian(*delta).map_err(|e| plan_err(e.to_string()))?)
            }
            Self::Linear {
                theta_star,
                covariance,
                ..
            } => Some(match covariance {
                Some(rows) => sym_from_rows(rows)?
                    .inverse()
                    .map_err(|e| plan_err(format!("design covariance: {e}")))?,
                None => SymMat::identity(theta_star.len()),
            }),
            Self::Quadratic { hessian, .. } => Some(
                sym_from_rows(hessian)?
                    .inverse()
                    .map_err(|e| plan_err(format!("hessian: {e}")))?,
            ),
            _ => None,
        })
    }

    /// Scale `e` of the initial perturbation when the plan gives none.
    pub fn default_init_scale(&self) -> f64 {
        match self {
            Self::Libsvm { .. } => 0.0,
            _ => 1.0,
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, Self::Logistic { .. } | Self::Libsvm { .. })
    }
}

fn sym_from_rows(rows: &[Vec<f64>]) -> Result<SymMat, BenchError> {
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(BenchError::Plan("matrix must be square".into()));
    }
    SymMat::from_rows(rows).map_err(|e| BenchError::Plan(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖θ - θ*‖²`.
    Mse,
    /// `‖A - H⁻¹‖_F` for methods that track an inverse Hessian.
    FrobInvHess,
    /// Smallest eigenvalue of the tracked inverse Hessian.
    MinEigenvalue,
    /// Test-set accuracy of the logistic classifier.
    Accuracy,
    /// Training-set accuracy of the logistic classifier.
    TrainAccuracy,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mse => "mse",
            Self::FrobInvHess => "frob_inv_hess",
            Self::MinEigenvalue => "min_eigenvalue",
            Self::Accuracy => "accuracy",
            Self::TrainAccuracy => "train_accuracy",
        }
    }
}

/// An algorithm in a plan: a bare name, a full spec, or a labelled spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Name(String),
    Labeled { label: String, spec: AlgorithmSpec },
    Spec(AlgorithmSpec),
}

impl AlgorithmEntry {
    pub fn resolve(&self) -> Result<ResolvedAlgorithm, BenchError> {
        Ok(match self {
            Self::Name(name) => ResolvedAlgorithm {
                label: name.clone(),
                spec: AlgorithmSpec::by_name(name).ok_or_else(|| {
                    BenchError::Plan(format!(
                        "unknown algorithm `{name}` (known: {})",
                        ALGORITHMS.join(", ")
                    ))
                })?,
            },
            Self::Labeled { label, spec } => ResolvedAlgorithm {
                label: label.clone(),
                spec: spec.clone(),
            },
            Self::Spec(spec) => ResolvedAlgorithm {
                label: spec.name().to_string(),
                spec: spec.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAlgorithm {
    pub label: String,
    pub spec: AlgorithmSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    pub algorithms: Vec<AlgorithmEntry>,
    /// Samples per replication. Optional for file data, where it defaults to
    /// the training size times the number of passes.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "one_rep")]
    pub replications: u64,
    /// Scale `e` in `θ_init = θ* + e ε`, `ε ~ N(0, I)` (`θ*` is zero for
    /// median, p-means and file data).
    #[serde(default)]
    pub init_scale: Option<f64>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Steps added to the log-spaced grid.
    #[serde(default)]
    pub extra_checkpoints: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Keep each replication's final estimate in the record.
    #[serde(default)]
    pub record_estimates: bool,
}

fn one_rep() -> u64 {
    1
}
fn default_metrics() -> Vec<Metric> {
    vec![Metric::Mse]
}
fn default_checkpoints() -> usize {
    DEFAULT_CHECKPOINTS
}

/// Command-line values that take precedence over the plan file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub checkpoints: Option<usize>,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Plan(format!("plan: {e}")))
    }

    /// Reads a plan; a relative LIBSVM path is taken relative to the plan file.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut plan = Self::from_json(&text)?;
        if let ModelSpec::Libsvm { path: data, .. } = &mut plan.model {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(plan)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.replications {
            self.replications = r;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = Some(d.clone());
        }
        if let Some(j) = o.jobs {
            self.jobs = Some(j);
        }
        if let Some(c) = o.checkpoints {
            self.checkpoints = c;
        }
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale.unwrap_or_else(|| self.model.default_init_scale())
    }

    /// Checks everything that can be checked without loading data. Returns the
    /// resolved algorithms and warnings about metrics that will be skipped.
    pub fn validate(&self) -> Result<(Vec<ResolvedAlgorithm>, Vec<String>), BenchError> {
        let plan = |m: String| Err(BenchError::Plan(m));
        if self.algorithms.is_empty() {
            return plan("no algorithms listed".into());
        }
        if self.replications == 0 {
            return plan("replications must be at least 1".into());
        }
        if self.checkpoints == 0 {
            return plan("checkpoints must be at least 1".into());
        }
        match (&self.model, self.n) {
            (ModelSpec::Libsvm { train_fraction, passes, .. }, _) => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return plan(format!("train_fraction {train_fraction} is outside (0, 1)"));
                }
                if *passes == 0 {
                    return plan("passes must be at least 1".into());
                }
            }
            (_, None) => return plan("`n` is required for synthetic models".into()),
            (_, Some(0)) => return plan("`n` must be at least 1".into()),
            _ => {}
        }
        if !(self.init_scale() >= 0.0) {
            return plan("init_scale must be nonnegative".into());
        }
        if let Some(spec) = self.model.synthetic() {
            let dim_ok = match &spec {
                SyntheticSpec::Gaussian { dim } => *dim > 0,
                SyntheticSpec::Linear { theta_star, .. } => !theta_star.is_empty(),
                SyntheticSpec::Location { center, .. } => !center.is_empty(),
                _ => true,
            };
            if !dim_ok {
                return plan("model dimension must be at least 1".into());
            }
        }
        if let ModelSpec::Quadratic { hessian, center, .. } = &self.model {
            if hessian.len() != center.len() {
                return plan("hessian and center dimensions differ".into());
            }
        }
        if let ModelSpec::Linear {
            theta_star,
            covariance: Some(rows),
            ..
        } = &self.model
        {
            if rows.len() != theta_star.len() {
                return plan("covariance and theta_star dimensions differ".into());
            }
        }

        // dimension-free capability checks
        let objective = self.model.objective(1)?;
        let h_inv = self.model.true_inverse_hessian()?;
        let mut resolved = Vec::new();
        for entry in &self.algorithms {
            let alg = entry.resolve()?;
            alg.spec
                .validate()
                .map_err(|e| BenchError::Plan(format!("{}: {e}", alg.label)))?;
            if alg.spec.needs_riccati() && !objective.capabilities().riccati_phi {
                return plan(format!(
                    "{}: Riccati updates are not available for model `{}`",
                    alg.label,
                    self.model.name()
                ));
            }
            if resolved.iter().any(|r: &ResolvedAlgorithm| r.label == alg.label) {
                return plan(format!("duplicate algorithm label `{}`", alg.label));
            }
            resolved.push(alg);
        }

        let mut warnings = Vec::new();
        for m in &self.metrics {
            let missing = match m {
                Metric::Mse => self.model.truth().is_none().then_some("no known minimizer"),
                Metric::FrobInvHess => h_inv.is_none().then_some("no closed-form inverse Hessian"),
                Metric::Accuracy | Metric::TrainAccuracy => {
                    (!self.model.is_classification()).then_some("not a classification model")
                }
                Metric::MinEigenvalue => None,
            };
            if let Some(why) = missing {
                warnings.push(format!(
                    "metric `{}` skipped for model `{}`: {why}",
                    m.as_str(),
                    self.model.name()
                ));
            }
        }
        Ok((resolved, warnings))
    }

    /// Metrics that can actually be computed for this model.
    pub fn active_metrics(&self) -> Result<Vec<Metric>, BenchError> {
        let h_inv = self.model.true_inverse_hessian()?.is_some();
        let mut out: Vec<Metric> = Vec::new();
        for &m in &self.metrics {
            let ok = match m {
                Metric::Mse => self.model.truth().is_some(),
                Metric::FrobInvHess => h_inv,
                Metric::Accuracy | Metric::TrainAccuracy => self.model.is_classification(),
                Metric::MinEigenvalue => true,
            };
            if ok && !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_plan_takes_defaults() {
        let plan = ExperimentPlan::from_json(
            r#"{"model": {"model": "logistic"}, "algorithms": ["usna", "uwasna"], "n": 1000}"#,
        )
        .unwrap();
        assert_eq!(plan.replications, 1);
        assert_eq!(plan.checkpoints, DEFAULT_CHECKPOINTS);
        assert_eq!(plan.metrics, vec![Metric::Mse]);
        assert_eq!(plan.model.truth().unwrap(), LOGISTIC_THETA_STAR.to_vec());
        let (algs, warnings) = plan.validate().unwrap();
        assert_eq!(algs[1].label, "uwasna");
        assert!(warnings.is_empty());
    }

    #[test]
    fn labeled_and_inline_specs() {
        let plan = ExperimentPlan::from_json(
            r#"{"model": {"model": "median", "dim": 3}, "n": 10,
                "algorithms": [{"label": "frozen", "spec": {"algorithm": "usna", "freeze_matrix": true}},
                               {"algorithm": "sgd", "eta": {"constant": 1.0, "exponent": 0.5}}]}"#,
        )
        .unwrap();
        let (algs, _) = plan.validate().unwrap();
        assert_eq!(algs[0].label, "frozen");
        assert_eq!(algs[1].label, "sgd");
    }

    #[test]
    fn validation_failures() {
        let bad = [
            r#"{"model": {"model": "median"}, "algorithms": ["lbfgs"], "n": 10}"#,
            r#"{"model": {"model": "median"}, "algorithms": ["usna"]}"#,
            r#"{"model": {"model": "pmeans"}, "algorithms": ["sna"], "n": 10}"#,
            r#"{"model": {"model": "median"}, "algorithms": ["usna", "usna"], "n": 10}"#,
            r#"{"model": {"model": "median"}, "algorithms": [], "n": 10}"#,
            r#"{"model": {"model": "pmeans", "p": 3}, "algorithms": ["usna"], "n": 10}"#,
        ];
        for text in bad {
            let result = ExperimentPlan::from_json(text).and_then(|p| p.validate());
            assert!(matches!(result, Err(BenchError::Plan(_))), "{text}");
        }
        assert!(ExperimentPlan::from_json(r#"{"model": {"model": "median"}, "algorithms": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn missing_ground_truth_is_a_warning() {
        let plan = ExperimentPlan::from_json(
            r#"{"model": {"model": "median"}, "algorithms": ["usna"], "n": 10,
                "metrics": ["mse", "frob_inv_hess", "accuracy"]}"#,
        )
        .unwrap();
        let (_, warnings) = plan.validate().unwrap();
        assert_eq!(warnings.len(), 2);
        assert_eq!(plan.active_metrics().unwrap(), vec![Metric::Mse]);
    }

    #[test]
    fn overrides_win() {
        let mut plan =
            ExperimentPlan::from_json(r#"{"model": {"model": "sphere"}, "algorithms": ["usna"], "n": 10, "seed": 4}"#)
                .unwrap();
        plan.apply(&Overrides {
            seed: Some(9),
            replications: Some(3),
            checkpoints: Some(5),
            ..Overrides::default()
        });
        assert_eq!((plan.seed, plan.replications, plan.checkpoints), (9, 3, 5));
    }
}
