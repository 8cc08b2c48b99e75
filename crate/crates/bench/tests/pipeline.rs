use std::process::Command;
use std::sync::Mutex;

use serde_json::json;
use sn_bench::output::{render_csv, render_svg, CSV_HEADER};
use sn_bench::plan::{Metric, ResolvedAlgorithm};
use sn_bench::runner::{run_algorithm, TraceContext};
use sn_bench::{Experiment, ExperimentPlan, RunRecord};
use stochastic_newton::optimizers::AlgorithmSpec;
use stochastic_newton::problems::{Capabilities, LinearModel, Objective, Sample};
use stochastic_newton::rng::seeded;

fn experiment(plan: serde_json::Value) -> Experiment {
    Experiment::prepare(ExperimentPlan::from_json(&plan.to_string()).unwrap()).unwrap()
}

fn median_plan(reps: u64) -> serde_json::Value {
    json!({
        "name": "median",
        "model": {"model": "median", "dim": 4},
        "algorithms": ["usna", "uwasna", "sna", "asgd"],
        "n": 2000,
        "replications": reps,
        "metrics": ["mse"],
        "seed": 9
    })
}

#[test]
fn frozen_usna_traces_match_sgd() {
    let exp = experiment(json!({
        "name": "frozen",
        "model": {"model": "linear", "theta_star": [1.0, -2.0, 0.5]},
        "algorithms": [
            {"algorithm": "usna", "freeze_matrix": true, "nu": {"constant": 1.0, "exponent": 0.6666666666666666}},
            {"algorithm": "sgd", "eta": {"constant": 1.0, "exponent": 0.6666666666666666}}
        ],
        "n": 3000,
        "replications": 3,
        "metrics": ["mse"],
        "seed": 5
    }));
    let record = exp.run().unwrap();
    for rep in &record.replications {
        assert_eq!(rep.traces[0].values, rep.traces[1].values);
    }
}

#[test]
fn replications_are_reproducible_and_independent_of_count() {
    let small = experiment(median_plan(3));
    let large = experiment(median_plan(7));
    let a = small.run_replication(2);
    let b = small.run_replication(2);
    let c = large.run_replication(2);
    for ((x, y), z) in a.traces.iter().zip(&b.traces).zip(&c.traces) {
        assert_eq!(x.values, y.values);
        assert_eq!(x.values, z.values);
    }
    // different replications see different data
    assert_ne!(a.traces[0].values, small.run_replication(1).traces[0].values);

    let full = large.run().unwrap();
    let prefix = small.run().unwrap();
    for (p, f) in prefix.replications.iter().zip(&full.replications) {
        assert_eq!(p.replication, f.replication);
        for (tp, tf) in p.traces.iter().zip(&f.traces) {
            assert_eq!(tp.values, tf.values);
        }
    }
}

#[test]
fn single_replication_curve_is_the_trace() {
    let record = experiment(median_plan(1)).run().unwrap();
    for (summary, trace) in record.summaries.iter().zip(&record.replications[0].traces) {
        let curve = &summary.curves[&Metric::Mse];
        assert_eq!(&curve.mean, &trace.values[&Metric::Mse]);
        assert!(curve.stderr.iter().all(|&s| s == 0.0));
    }
}

/// Linear model that logs the features of every sample it is asked about.
struct Spy {
    inner: LinearModel,
    seen: Mutex<Vec<f64>>,
}

impl Objective for Spy {
    fn name(&self) -> &str {
        "spy"
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
    fn loss(&self, s: &Sample, h: &[f64]) -> f64 {
        self.inner.loss(s, h)
    }
    fn gradient(&self, s: &Sample, h: &[f64]) -> Vec<f64> {
        self.seen.lock().unwrap().push(s.x[0]);
        self.inner.gradient(s, h)
    }
    fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
        self.inner.hessian_vec(s, h, z)
    }
}

#[test]
fn every_algorithm_sees_the_same_samples_in_order() {
    let samples: Vec<Sample> = (0..50)
        .map(|i| Sample::new(vec![i as f64 * 0.01, 1.0], 0.5))
        .collect();
    let checkpoints = [10, 50];
    let ctx = TraceContext {
        metrics: &[Metric::Mse],
        checkpoints: &checkpoints,
        truth: Some(&[0.0, 0.0]),
        inverse_hessian: None,
        test: None,
        keep_estimate: false,
    };
    let mut logs = Vec::new();
    for name in ["usna", "uwasna", "sgd", "asgd", "adagrad"] {
        let spy = Spy {
            inner: LinearModel::new(2),
            seen: Mutex::new(Vec::new()),
        };
        let alg = ResolvedAlgorithm {
            label: name.into(),
            spec: AlgorithmSpec::by_name(name).unwrap(),
        };
        let trace = run_algorithm(&alg, &spy, &samples, vec![0.0, 0.0], seeded(1), &ctx);
        assert!(trace.error.is_none(), "{name}: {:?}", trace.error);
        assert_eq!(trace.values[&Metric::Mse].len(), 2);
        logs.push(spy.seen.into_inner().unwrap());
    }
    let expected: Vec<f64> = samples.iter().map(|s| s.x[0]).collect();
    for log in logs {
        assert_eq!(log, expected);
    }
}

#[test]
fn one_dimensional_quadratic_error_decreases() {
    let record = experiment(json!({
        "name": "quadratic",
        "model": {"model": "quadratic", "hessian": [[1.0]], "center": [3.0]},
        "algorithms": ["usna", "uwasna", "asgd"],
        "n": 10000,
        "replications": 20,
        "checkpoints": 5,
        "metrics": ["mse"],
        "seed": 17
    }))
    .run()
    .unwrap();
    assert_eq!(record.checkpoints, vec![10, 56, 316, 1778, 10000]);
    for s in &record.summaries {
        let mean = &s.curves[&Metric::Mse].mean;
        for w in mean.windows(2) {
            assert!(w[1] < w[0], "{}: {mean:?}", s.label);
        }
        // unit noise and unit Hessian: n · MSE → 1
        let scaled = mean.last().unwrap() * 10_000.0;
        assert!(scaled > 0.4 && scaled < 2.5, "{}: {scaled}", s.label);
    }
}

fn small_record() -> RunRecord {
    experiment(json!({
        "name": "a <small> & quoted \"plan\"",
        "model": {"model": "sphere"},
        "algorithms": ["usna", {"label": "uwasna <avg>", "spec": {"algorithm": "uwasna"}}, "asgd"],
        "n": 500,
        "replications": 2,
        "checkpoints": 6,
        "init_scale": 0.5,
        "metrics": ["mse", "frob_inv_hess", "min_eigenvalue"],
        "seed": 3
    }))
    .run()
    .unwrap()
}

#[test]
fn csv_rows_cover_every_curve() {
    let mut record = small_record();
    let csv = render_csv(&record);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // mse for all three, the matrix metrics only for the two Newton methods
    assert_eq!(lines.len() - 1, 6 * (3 + 2 + 2));
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));

    record.summaries.clear();
    assert_eq!(render_csv(&record), format!("{CSV_HEADER}\n"));
}

#[test]
fn svg_is_well_formed() {
    let mut record = small_record();
    let svg = render_svg(&record);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(polylines, 7);
    assert!(doc.descendants().any(|n| n.text() == Some("uwasna <avg>")));

    record.summaries.clear();
    roxmltree::Document::parse(&render_svg(&record)).unwrap();
}

#[test]
fn record_round_trips_through_json() {
    let record = small_record();
    let text = serde_json::to_string(&record).unwrap();
    let back: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(back.checkpoints, record.checkpoints);
    assert_eq!(back.summaries[1].curves, record.summaries[1].curves);
    let h = back.summaries[0].curves[&Metric::FrobInvHess].mean.clone();
    assert!(h.iter().all(|v| v.is_finite()));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sn-bench")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, plan: serde_json::Value| {
        let p = dir.path().join(name);
        std::fs::write(&p, plan.to_string()).unwrap();
        p.to_string_lossy().into_owned()
    };
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let ok = write("ok.json", json!({
        "name": "ok", "model": {"model": "median", "dim": 3},
        "algorithms": ["usna"], "n": 200, "metrics": ["mse"]
    }));
    let run = cli(&["run", &ok, "--out-dir", out]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["curves.csv", "curves.svg", "record.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    assert_eq!(cli(&["validate", &ok]).status.code(), Some(0));

    let bad = write("bad.json", json!({
        "name": "bad", "model": {"model": "pmeans"}, "algorithms": ["sna"], "n": 100
    }));
    assert_eq!(cli(&["validate", &bad]).status.code(), Some(2));
    assert_eq!(cli(&["run", &bad, "--out-dir", out]).status.code(), Some(2));
    let typo = write("typo.json", json!({"name": "t", "model": {"model": "median"}, "algorithms": ["usna"], "nn": 5}));
    assert_eq!(cli(&["validate", &typo]).status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    assert_eq!(cli(&["run", missing.to_str().unwrap()]).status.code(), Some(4));

    let diverging = write("diverge.json", json!({
        "name": "diverge", "model": {"model": "linear", "theta_star": [1.0, 1.0]},
        "algorithms": [{"algorithm": "usna", "nu": {"constant": 1e300, "exponent": 1.0}}],
        "n": 200, "replications": 4, "metrics": ["mse"]
    }));
    let run = cli(&["run", &diverging, "--out-dir", out]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stdout));

    assert_eq!(cli(&["fetch-data", "no-such-set"]).status.code(), Some(2));
    let models = cli(&["list-models"]);
    assert!(String::from_utf8_lossy(&models.stdout).contains("sphere"));
}
