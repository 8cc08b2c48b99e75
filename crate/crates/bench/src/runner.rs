//! Replications and their aggregation.
//!
//! A replication draws its data once and feeds the identical sample sequence
//! to every algorithm. Replications are independent and run in parallel; the
//! pointwise mean curves are reduced afterwards in replication order, so the
//! output does not depend on scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stochastic_newton::data::{
    gen_logistic, power_covariance, read_libsvm, CovarianceChoice, Dataset, SyntheticSpec,
};
use stochastic_newton::linalg::SymMat;
use stochastic_newton::optimizers::Counters;
use stochastic_newton::problems::{Objective, Sample};
use stochastic_newton::rng::{derive_seed, stream, Stream};

use crate::metrics::{metric_accuracy, metric_frob, metric_mse};
use crate::plan::{ExperimentPlan, Metric, ModelSpec, ResolvedAlgorithm, FAILURE_BUDGET};
use crate::BenchError;

/// `count` steps spaced evenly in log scale between `min(10, n)` and `n`,
/// rounded, merged with `extra` (entries above `n` are dropped) and deduplicated.
pub fn log_checkpoints(n: u64, count: usize, extra: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count + extra.len());
    if n == 0 {
        return out;
    }
    let lo = 10.min(n) as f64;
    let hi = n as f64;
    if count == 1 {
        out.push(n);
    } else {
        for k in 0..count {
            let t = k as f64 / (count - 1) as f64;
            let v = (lo * (hi / lo).powf(t)).round() as u64;
            out.push(v.clamp(1, n));
        }
        // rounding must not lose the endpoint
        *out.last_mut().unwrap() = n;
    }
    out.extend(extra.iter().copied().filter(|&e| e >= 1 && e <= n));
    out.sort_unstable();
    out.dedup();
    out
}

/// Samples of one replication, plus held-out data when there is any.
#[derive(Debug, Clone)]
pub struct ReplicationData {
    pub train: Vec<Sample>,
    pub test: Option<Vec<Sample>>,
    pub covariance: Option<CovarianceChoice>,
}

/// Metric values of one algorithm in one replication, aligned with the
/// experiment's checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmTrace {
    pub label: String,
    pub values: BTreeMap<Metric, Vec<f64>>,
    pub counters: Counters,
    /// Why the run stopped early; failed traces are left out of the means.
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_estimate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: u64,
    pub traces: Vec<AlgorithmTrace>,
}

/// Everything fixed before the first replication starts.
pub struct Experiment {
    pub plan: ExperimentPlan,
    pub algorithms: Vec<ResolvedAlgorithm>,
    pub metrics: Vec<Metric>,
    pub warnings: Vec<String>,
    pub n: usize,
    pub checkpoints: Vec<u64>,
    pub truth: Option<Vec<f64>>,
    pub inverse_hessian: Option<SymMat>,
    pub objective: Box<dyn Objective>,
    file_split: Option<(Dataset, Dataset)>,
}

impl Experiment {
    /// Validates the plan and loads file data.
    pub fn prepare(plan: ExperimentPlan) -> Result<Self, BenchError> {
        let (algorithms, warnings) = plan.validate()?;
        let metrics = plan.active_metrics()?;
        let mut file_split = None;
        let (n, feature_dim) = match &plan.model {
            ModelSpec::Libsvm {
                path,
                train_fraction,
                passes,
            } => {
                let data = read_libsvm(path).map_err(|e| match e {
                    stochastic_newton::data::DataError::Io { source, .. } => BenchError::io(path, source),
                    other => BenchError::Plan(format!("{}: {other}", path.display())),
                })?;
                if data.is_empty() {
                    return Err(BenchError::Plan(format!("{}: empty dataset", path.display())));
                }
                let dim = data.feature_dim;
                let (train, test) = data
                    .split(*train_fraction, plan.seed)
                    .map_err(|e| BenchError::Plan(e.to_string()))?;
                let available = train.len() * passes;
                let n = match plan.n {
                    Some(n) if n > available => {
                        return Err(BenchError::Plan(format!(
                            "n = {n} exceeds {available} training samples over {passes} pass(es)"
                        )))
                    }
                    Some(n) => n,
                    None => available,
                };
                file_split = Some((train, test));
                (n, dim)
            }
            _ => (plan.n.expect("checked by validate"), 0),
        };
        let objective = plan.model.objective(feature_dim)?;
        let checkpoints = log_checkpoints(n as u64, plan.checkpoints, &plan.extra_checkpoints);
        Ok(Self {
            truth: plan.model.truth(),
            inverse_hessian: plan.model.true_inverse_hessian()?,
            algorithms,
            metrics,
            warnings,
            n,
            checkpoints,
            objective,
            file_split,
            plan,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// The data of replication `rep`, a pure function of `(plan, rep)`.
    pub fn replication_data(&self, rep: u64) -> Result<ReplicationData, String> {
        let seed = self.plan.seed;
        if let Some((train, test)) = &self.file_split {
            let mut rng = stream(seed, rep, Stream::Shuffle);
            let passes = self.n.div_ceil(train.len());
            let mut samples = Vec::with_capacity(passes * train.len());
            for _ in 0..passes {
                let mut order: Vec<usize> = (0..train.len()).collect();
                order.shuffle(&mut rng);
                samples.extend(order.into_iter().map(|i| train.samples[i].clone()));
            }
            samples.truncate(self.n);
            return Ok(ReplicationData {
                train: samples,
                test: Some(test.samples.clone()),
                covariance: None,
            });
        }
        let spec = self.plan.model.synthetic().expect("synthetic model");
        let generated = spec
            .generate(self.n, derive_seed(seed, rep, Stream::Data))
            .map_err(|e| e.to_string())?;
        let test = match &self.plan.model {
            ModelSpec::Logistic { theta_star, test_size } if self.metrics.contains(&Metric::Accuracy) => {
                Some(gen_logistic(theta_star, *test_size, derive_seed(seed, rep, Stream::Test)).samples)
            }
            _ => None,
        };
        Ok(ReplicationData {
            train: generated.dataset.samples,
            test,
            covariance: generated.covariance,
        })
    }

    /// `θ_init = center + e ε` with `ε ~ N(0, I)` from the replication's init stream.
    pub fn initial_point(&self, rep: u64) -> Vec<f64> {
        let d = self.dim();
        let center = self.truth.clone().unwrap_or_else(|| vec![0.0; d]);
        let e = self.plan.init_scale();
        let mut rng = stream(self.plan.seed, rep, Stream::Init);
        center
            .iter()
            .map(|c| c + e * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn run_replication(&self, rep: u64) -> ReplicationResult {
        let traces = match self.replication_data(rep) {
            Ok(data) => {
                let theta0 = self.initial_point(rep);
                let ctx = TraceContext {
                    metrics: &self.metrics,
                    checkpoints: &self.checkpoints,
                    truth: self.truth.as_deref(),
                    inverse_hessian: self.inverse_hessian.as_ref(),
                    test: data.test.as_deref(),
                    keep_estimate: self.plan.record_estimates,
                };
                self.algorithms
                    .iter()
                    .map(|alg| {
                        let rng = stream(
                            self.plan.seed,
                            rep,
                            if alg.spec.needs_riccati() { Stream::Internal } else { Stream::Probe },
                        );
                        run_algorithm(alg, self.objective.as_ref(), &data.train, theta0.clone(), rng, &ctx)
                    })
                    .collect()
            }
            Err(e) => self
                .algorithms
                .iter()
                .map(|alg| AlgorithmTrace {
                    label: alg.label.clone(),
                    values: BTreeMap::new(),
                    counters: Counters::default(),
                    error: Some(format!("data generation: {e}")),
                    final_estimate: None,
                })
                .collect(),
        };
        ReplicationResult {
            replication: rep,
            traces,
        }
    }

    /// Runs every replication (on `jobs` threads when set) and aggregates.
    pub fn run(&self) -> Result<RunRecord, BenchError> {
        let start = Instant::now();
        let reps = self.plan.replications;
        let work = || -> Vec<ReplicationResult> {
            (0..reps).into_par_iter().map(|r| self.run_replication(r)).collect()
        };
        let results = match self.plan.jobs {
            Some(j) if j > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| BenchError::Plan(format!("thread pool: {e}")))?
                .install(work),
            _ => work(),
        };
        let covariance = match self.plan.model.synthetic() {
            Some(SyntheticSpec::Gaussian { dim }) => Some(power_covariance(dim)),
            _ => None,
        };
        Ok(RunRecord::aggregate(self, results, covariance, start.elapsed().as_secs_f64()))
    }
}

/// What `run_algorithm` measures and against which references.
pub struct TraceContext<'a> {
    pub metrics: &'a [Metric],
    pub checkpoints: &'a [u64],
    pub truth: Option<&'a [f64]>,
    pub inverse_hessian: Option<&'a SymMat>,
    pub test: Option<&'a [Sample]>,
    pub keep_estimate: bool,
}

/// Feeds `samples` in order to one freshly built optimizer, recording metrics
/// after each checkpoint step.
pub fn run_algorithm(
    alg: &ResolvedAlgorithm,
    objective: &dyn Objective,
    samples: &[Sample],
    theta0: Vec<f64>,
    rng: stochastic_newton::rng::StreamRng,
    ctx: &TraceContext<'_>,
) -> AlgorithmTrace {
    let mut trace = AlgorithmTrace {
        label: alg.label.clone(),
        values: BTreeMap::new(),
        counters: Counters::default(),
        error: None,
        final_estimate: None,
    };
    let mut opt = match alg.spec.build(objective, theta0, rng) {
        Ok(o) => o,
        Err(e) => {
            trace.error = Some(e.to_string());
            return trace;
        }
    };
    let tracks_matrix = opt.inverse_hessian().is_some();
    let metrics: Vec<Metric> = ctx
        .metrics
        .iter()
        .copied()
        .filter(|m| match m {
            Metric::Mse => ctx.truth.is_some(),
            Metric::FrobInvHess => tracks_matrix && ctx.inverse_hessian.is_some(),
            Metric::MinEigenvalue => tracks_matrix,
            Metric::Accuracy => ctx.test.is_some(),
            Metric::TrainAccuracy => true,
        })
        .collect();
    for m in &metrics {
        trace.values.insert(*m, Vec::with_capacity(ctx.checkpoints.len()));
    }

    let mut next = ctx.checkpoints.iter().peekable();
    for (k, sample) in samples.iter().enumerate() {
        if let Err(e) = opt.step(sample, objective) {
            trace.error = Some(e.to_string());
            break;
        }
        let step = (k + 1) as u64;
        if next.peek() == Some(&&step) {
            next.next();
            for m in &metrics {
                let v = match m {
                    Metric::Mse => metric_mse(opt.estimate(), ctx.truth.unwrap()),
                    Metric::FrobInvHess => {
                        metric_frob(&opt.inverse_hessian().unwrap(), ctx.inverse_hessian.unwrap())
                    }
                    Metric::MinEigenvalue => opt.inverse_hessian().unwrap().min_eigenvalue(),
                    Metric::Accuracy => metric_accuracy(opt.estimate(), ctx.test.unwrap()),
                    Metric::TrainAccuracy => metric_accuracy(opt.estimate(), samples),
                };
                trace.values.get_mut(m).unwrap().push(v);
            }
        }
    }
    trace.counters = opt.counters();
    if ctx.keep_estimate && trace.error.is_none() {
        trace.final_estimate = Some(opt.estimate().to_vec());
    }
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub label: String,
    pub successes: u64,
    pub failures: Vec<Failure>,
    /// Summed over successful replications.
    pub counters: Counters,
    pub curves: BTreeMap<Metric, Curve>,
}

impl AlgorithmSummary {
    pub fn failure_rate(&self) -> f64 {
        let total = self.successes + self.failures.len() as u64;
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }

    /// Mean of `metric` at the last checkpoint.
    pub fn terminal(&self, metric: Metric) -> Option<f64> {
        self.curves.get(&metric).and_then(|c| c.mean.last().copied())
    }
}

/// Full account of a run: resolved settings, aggregated curves and every
/// replication's trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan: ExperimentPlan,
    pub algorithms: Vec<ResolvedAlgorithm>,
    pub metrics: Vec<Metric>,
    pub n: usize,
    pub init_scale: f64,
    pub checkpoints: Vec<u64>,
    pub covariance: Option<CovarianceChoice>,
    pub warnings: Vec<String>,
    pub summaries: Vec<AlgorithmSummary>,
    pub replications: Vec<ReplicationResult>,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    fn aggregate(
        exp: &Experiment,
        results: Vec<ReplicationResult>,
        covariance: Option<CovarianceChoice>,
        wall_clock_seconds: f64,
    ) -> Self {
        let summaries = exp
            .algorithms
            .iter()
            .enumerate()
            .map(|(i, alg)| summarize(&alg.label, &exp.metrics, results.iter().map(|r| (r.replication, &r.traces[i]))))
            .collect();
        Self {
            plan: exp.plan.clone(),
            algorithms: exp.algorithms.clone(),
            metrics: exp.metrics.clone(),
            n: exp.n,
            init_scale: exp.plan.init_scale(),
            checkpoints: exp.checkpoints.clone(),
            covariance,
            warnings: exp.warnings.clone(),
            summaries,
            replications: results,
            wall_clock_seconds,
        }
    }

    pub fn summary(&self, label: &str) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    /// Algorithms whose failure rate exceeds the budget.
    pub fn over_budget(&self) -> Vec<&AlgorithmSummary> {
        self.summaries
            .iter()
            .filter(|s| s.failure_rate() > FAILURE_BUDGET)
            .collect()
    }
}

fn summarize<'a>(
    label: &str,
    metrics: &[Metric],
    traces: impl Iterator<Item = (u64, &'a AlgorithmTrace)>,
) -> AlgorithmSummary {
    let mut ok: Vec<&AlgorithmTrace> = Vec::new();
    let mut failures = Vec::new();
    let mut counters = Counters::default();
    for (rep, t) in traces {
        match &t.error {
            Some(e) => failures.push(Failure {
                replication: rep,
                error: e.clone(),
            }),
            None => {
                counters += t.counters;
                ok.push(t);
            }
        }
    }
    let mut curves = BTreeMap::new();
    for m in metrics {
        let series: Vec<&Vec<f64>> = ok.iter().filter_map(|t| t.values.get(m)).collect();
        if series.is_empty() {
            continue;
        }
        let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
        let count = series.len() as f64;
        let mut mean = Vec::with_capacity(len);
        let mut stderr = Vec::with_capacity(len);
        for k in 0..len {
            let mu = series.iter().map(|s| s[k]).sum::<f64>() / count;
            let se = if series.len() > 1 {
                let var = series.iter().map(|s| (s[k] - mu).powi(2)).sum::<f64>() / (count - 1.0);
                (var / count).sqrt()
            } else {
                0.0
            };
            mean.push(mu);
            stderr.push(se);
        }
        curves.insert(*m, Curve { mean, stderr });
    }
    AlgorithmSummary {
        label: label.to_string(),
        successes: ok.len() as u64,
        failures,
        counters,
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_grid() {
        let grid = log_checkpoints(10_000, 50, &[100]);
        assert_eq!(grid[0], 10);
        assert_eq!(*grid.last().unwrap(), 10_000);
        assert!(grid.contains(&100));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(grid.len() >= 45);
        assert_eq!(log_checkpoints(5, 50, &[]), vec![5]);
        assert_eq!(log_checkpoints(1000, 1, &[]), vec![1000]);
        assert!(log_checkpoints(0, 50, &[]).is_empty());
    }
}
