use serde::{Deserialize, Serialize};

use super::{checked_gradient, ensure_finite, Counters, OptimError, Optimizer};
use crate::averaging::WeightedAverage;
use crate::inverse_hessian::{
    InverseHessianSchedules, InverseHessianState, ProbeDistribution, ProbeKind, StepSize,
};
use crate::linalg::{self, SymMat};
use crate::problems::{Objective, Sample};
use crate::rng::StreamRng;

fn validate_schedules(s: &InverseHessianSchedules, theory_q: Option<f64>) -> Result<(), OptimError> {
    match theory_q {
        Some(q) => s.theory(q)?,
        None => s.practice()?,
    };
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsnaConfig {
    pub schedules: InverseHessianSchedules,
    pub nu: StepSize,
    pub probe: ProbeKind,
    /// Validate schedules against the convergence theory with this moment order.
    pub theory_q: Option<f64>,
    /// Keep `A = A_0` forever (turns USNA into plain SGD when `A_0 = I`).
    pub freeze_matrix: bool,
}

impl Default for UsnaConfig {
    fn default() -> Self {
        Self {
            schedules: InverseHessianSchedules::default(),
            nu: StepSize::harmonic(),
            probe: ProbeKind::Rademacher,
            theory_q: None,
            freeze_matrix: false,
        }
    }
}

impl UsnaConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        self.nu.validate("nu")?;
        validate_schedules(&self.schedules, self.theory_q)
    }
}

/// Universal stochastic Newton:
/// `θ_n = θ_{n-1} - ν_n A_{n-1} ∇g(X_n, θ_{n-1})`, then `A` is updated with the
/// Hessian of the same sample at `θ_{n-1}`.
#[derive(Debug, Clone)]
pub struct Usna {
    theta: Vec<f64>,
    inv_hess: InverseHessianState,
    config: UsnaConfig,
    probe: ProbeDistribution,
    rng: StreamRng,
    counters: Counters,
}

impl Usna {
    pub fn new(theta0: Vec<f64>, config: UsnaConfig, rng: StreamRng) -> Result<Self, OptimError> {
        config.validate()?;
        let d = theta0.len();
        Ok(Self {
            theta: theta0,
            inv_hess: InverseHessianState::identity(d),
            probe: ProbeDistribution::new(config.probe, d),
            config,
            rng,
            counters: Counters::default(),
        })
    }

    pub fn inverse_hessian_state(&self) -> &InverseHessianState {
        &self.inv_hess
    }
}

impl Optimizer for Usna {
    fn name(&self) -> &'static str {
        "usna"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.inv_hess.steps() + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        let direction = self.inv_hess.current().mul_vec(&grad);
        let previous = self.theta.clone();
        linalg::axpy(-self.config.nu.at(n), &direction, &mut self.theta);
        ensure_finite(&self.theta, n, "parameter")?;

        if self.config.freeze_matrix {
            self.inv_hess.hold();
        } else {
            let z = self.probe.draw(&mut self.rng);
            let out = self.inv_hess.update(
                |z| model.hessian_vec(sample, &previous, z),
                &z,
                &self.config.schedules,
            )?;
            self.counters.truncation_hits += out.truncated as u64;
            self.counters.projection_hits += out.projected as u64;
        }
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        &self.theta
    }

    fn inverse_hessian(&self) -> Option<SymMat> {
        Some(self.inv_hess.current().clone())
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.inv_hess.steps()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UwasnaConfig {
    /// Also carries `tau`, the averaging exponent for the matrix.
    pub schedules: InverseHessianSchedules,
    pub nu: StepSize,
    /// Averaging exponent for the parameter.
    pub tau_prime: f64,
    pub probe: ProbeKind,
    pub theory_q: Option<f64>,
}

impl Default for UwasnaConfig {
    fn default() -> Self {
        Self {
            schedules: InverseHessianSchedules::default(),
            nu: StepSize::new(1.0, 0.75),
            tau_prime: 2.0,
            probe: ProbeKind::Rademacher,
            theory_q: None,
        }
    }
}

impl UwasnaConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        self.nu.validate("nu")?;
        if !(self.tau_prime >= 0.0) {
            return Err(crate::inverse_hessian::ScheduleError::OutOfRange {
                name: "tau_prime",
                value: self.tau_prime,
                range: "[0, inf)".into(),
            }
            .into());
        }
        if let Some(q) = self.theory_q {
            let nu = self.nu.exponent;
            let s = &self.schedules;
            if !(nu > 0.5 && nu < 1.0 - s.beta && s.gamma + nu > 1.5) {
                return Err(crate::inverse_hessian::ScheduleError::OutOfRange {
                    name: "nu",
                    value: nu,
                    range: format!("(max(1/2, 3/2 - gamma), 1 - beta) with q = {q}"),
                }
                .into());
            }
        }
        validate_schedules(&self.schedules, self.theory_q)
    }
}

/// Universal weighted-averaged stochastic Newton.
///
/// Per step, in order:
/// 1. gradient at `θ_{n-1}`;
/// 2. `θ_n = θ_{n-1} - ν_n Ā_{n-1} ∇g` with the averaged matrix from before the step;
/// 3. `θ̄_n` absorbs `θ_n` (weights `ln(k+1)^{τ'}`);
/// 4. `A_n` from the Hessian-vector product at the averaged parameter `θ̄_{n-1}`;
/// 5. `Ā_n` absorbs `A_n` (weights `ln(k+1)^τ`).
#[derive(Debug, Clone)]
pub struct Uwasna {
    theta: Vec<f64>,
    theta_avg: WeightedAverage<Vec<f64>>,
    inv_hess: InverseHessianState,
    config: UwasnaConfig,
    probe: ProbeDistribution,
    rng: StreamRng,
    counters: Counters,
}

impl Uwasna {
    pub fn new(theta0: Vec<f64>, config: UwasnaConfig, rng: StreamRng) -> Result<Self, OptimError> {
        config.validate()?;
        let d = theta0.len();
        Ok(Self {
            theta_avg: WeightedAverage::new(theta0.clone(), config.tau_prime),
            theta: theta0,
            inv_hess: InverseHessianState::identity(d).with_averaging(config.schedules.tau),
            probe: ProbeDistribution::new(config.probe, d),
            config,
            rng,
            counters: Counters::default(),
        })
    }

    /// The non-averaged iterate `θ_n`.
    pub fn iterate(&self) -> &[f64] {
        &self.theta
    }

    pub fn averaged(&self) -> &[f64] {
        self.theta_avg.value()
    }

    pub fn inverse_hessian_state(&self) -> &InverseHessianState {
        &self.inv_hess
    }
}

impl Optimizer for Uwasna {
    fn name(&self) -> &'static str {
        "uwasna"
    }

    fn step(&mut self, sample: &Sample, model: &dyn Objective) -> Result<(), OptimError> {
        let n = self.inv_hess.steps() + 1;
        let grad = checked_gradient(model, sample, &self.theta, n, &mut self.counters)?;
        let direction = self.inv_hess.averaged().mul_vec(&grad);
        linalg::axpy(-self.config.nu.at(n), &direction, &mut self.theta);
        ensure_finite(&self.theta, n, "parameter")?;

        let hessian_point = self.theta_avg.value().clone();
        self.theta_avg.push(&self.theta);

        model
            .check_point(&hessian_point)
            .map_err(|source| OptimError::Model { step: n, source })?;
        let z = self.probe.draw(&mut self.rng);
        let out = self.inv_hess.update(
            |z| model.hessian_vec(sample, &hessian_point, z),
            &z,
            &self.config.schedules,
        )?;
        self.counters.truncation_hits += out.truncated as u64;
        self.counters.projection_hits += out.projected as u64;
        Ok(())
    }

    fn estimate(&self) -> &[f64] {
        self.theta_avg.value()
    }

    fn inverse_hessian(&self) -> Option<SymMat> {
        Some(self.inv_hess.averaged().clone())
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn steps(&self) -> u64 {
        self.inv_hess.steps()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::optimizers::{Sgd, SgdConfig};
    use crate::problems::{Capabilities, FrozenQuadratic, GeometricMedian, LinearModel};
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut impl Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn linear_sample(rng: &mut impl Rng) -> Sample {
        let x = gaussian(rng, 3);
        let y = x[0] - 2.0 * x[1] + 0.5 * x[2] + 0.3 * rng.sample::<f64, _>(StandardNormal);
        Sample::new(x, y)
    }

    #[test]
    fn scalar_newton_step_lands_on_minimizer() {
        let model = FrozenQuadratic::new(SymMat::identity(1));
        let mut usna = Usna::new(vec![-7.0], UsnaConfig::default(), seeded(0)).unwrap();
        usna.step(&Sample::unlabeled(vec![5.0]), &model).unwrap();
        assert_eq!(usna.estimate(), &[5.0]);
    }

    #[test]
    fn stationary_point_keeps_parameter_but_updates_matrix() {
        let model = FrozenQuadratic::new(SymMat::from_diagonal(&[2.0, 0.5]));
        let mut usna = Usna::new(vec![1.0, 2.0], UsnaConfig::default(), seeded(1)).unwrap();
        // early steps are truncated while β_n is small, so take several
        for _ in 0..20 {
            usna.step(&Sample::unlabeled(vec![1.0, 2.0]), &model).unwrap();
            assert_eq!(usna.estimate(), &[1.0, 2.0]);
        }
        assert_ne!(usna.inverse_hessian().unwrap(), SymMat::identity(2));
    }

    #[test]
    fn frozen_identity_reproduces_sgd_bitwise() {
        let model = LinearModel::new(3);
        let eta = StepSize::new(0.5, 2.0 / 3.0);
        let config = UsnaConfig {
            nu: eta,
            freeze_matrix: true,
            ..UsnaConfig::default()
        };
        let mut usna = Usna::new(vec![0.0; 3], config, seeded(2)).unwrap();
        let mut sgd = Sgd::new(vec![0.0; 3], SgdConfig { eta });
        let mut data = seeded(3);
        for _ in 0..2000 {
            let s = linear_sample(&mut data);
            usna.step(&s, &model).unwrap();
            sgd.step(&s, &model).unwrap();
            assert_eq!(usna.estimate(), sgd.estimate());
        }
    }

    /// Linear model that records where each oracle is queried.
    struct Spy {
        inner: LinearModel,
        gradients: Mutex<Vec<Vec<f64>>>,
        hessians: Mutex<Vec<Vec<f64>>>,
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
            self.gradients.lock().unwrap().push(h.to_vec());
            self.inner.gradient(s, h)
        }
        fn hessian_vec(&self, s: &Sample, h: &[f64], z: &[f64]) -> Vec<f64> {
            self.hessians.lock().unwrap().push(h.to_vec());
            self.inner.hessian_vec(s, h, z)
        }
    }

    #[test]
    fn uwasna_evaluation_points() {
        let spy = Spy {
            inner: LinearModel::new(3),
            gradients: Mutex::new(Vec::new()),
            hessians: Mutex::new(Vec::new()),
        };
        let mut opt = Uwasna::new(vec![3.0, 3.0, -3.0], UwasnaConfig::default(), seeded(4)).unwrap();
        let mut data = seeded(5);
        for n in 1..=300u64 {
            let s = linear_sample(&mut data);
            let theta_prev = opt.iterate().to_vec();
            let avg_prev = opt.averaged().to_vec();
            let a_prev = opt.inverse_hessian_state().averaged().clone();
            opt.step(&s, &spy).unwrap();

            assert_eq!(spy.gradients.lock().unwrap().pop().unwrap(), theta_prev, "gradient point, step {n}");
            assert_eq!(spy.hessians.lock().unwrap().pop().unwrap(), avg_prev, "Hessian point, step {n}");
            let mut expected = theta_prev.clone();
            let g = spy.inner.gradient(&s, &theta_prev);
            linalg::axpy(-opt.config.nu.at(n), &a_prev.mul_vec(&g), &mut expected);
            assert_eq!(opt.iterate(), expected.as_slice(), "matrix used, step {n}");
        }
    }

    #[test]
    fn uwasna_first_average_is_first_iterate() {
        let model = LinearModel::new(3);
        let mut opt = Uwasna::new(vec![10.0; 3], UwasnaConfig::default(), seeded(6)).unwrap();
        opt.step(&linear_sample(&mut seeded(7)), &model).unwrap();
        assert_eq!(opt.averaged(), opt.iterate());
        assert_eq!(opt.inverse_hessian().unwrap(), *opt.inverse_hessian_state().current());
    }

    #[test]
    fn uwasna_uniform_weights_are_arithmetic_means() {
        let model = LinearModel::new(3);
        let mut config = UwasnaConfig::default();
        config.tau_prime = 0.0;
        config.schedules.tau = 0.0;
        let theta0 = vec![1.0, 0.0, -1.0];
        let mut opt = Uwasna::new(theta0.clone(), config, seeded(8)).unwrap();
        let mut data = seeded(9);
        let mut theta_sum = theta0;
        let mut a_sum = SymMat::identity(3);
        let steps = 200;
        for _ in 0..steps {
            opt.step(&linear_sample(&mut data), &model).unwrap();
            linalg::axpy(1.0, opt.iterate(), &mut theta_sum);
            a_sum.axpy(1.0, opt.inverse_hessian_state().current());
        }
        let count = (steps + 1) as f64;
        for (a, s) in opt.averaged().iter().zip(&theta_sum) {
            assert!((a - s / count).abs() < 1e-12);
        }
        a_sum.scale(1.0 / count);
        assert!(opt.inverse_hessian().unwrap().sub(&a_sum).frobenius_norm() < 1e-12);
    }

    #[test]
    fn uwasna_average_beats_iterate_in_one_dimension() {
        // With ν_n = n^{-3/4} the iterate has variance ≈ ν_n/2 against ≈ 1/n for
        // the average, so the average is closer with probability about
        // (2/π) atan(sqrt(n^{1/4}/2)) ≈ 0.66 at n = 1000, not in almost every run.
        let model = FrozenQuadratic::new(SymMat::identity(1));
        let seeds = 200;
        let (mut wins, mut se_avg, mut se_raw) = (0, 0.0, 0.0);
        for seed in 0..seeds {
            let mut data = seeded(1000 + seed);
            let mut opt = Uwasna::new(vec![4.0], UwasnaConfig::default(), seeded(2000 + seed)).unwrap();
            for _ in 0..1000 {
                let target = 1.0 + data.sample::<f64, _>(StandardNormal);
                opt.step(&Sample::unlabeled(vec![target]), &model).unwrap();
            }
            let (a, r) = (opt.averaged()[0] - 1.0, opt.iterate()[0] - 1.0);
            wins += (a.abs() < r.abs()) as u32;
            se_avg += a * a;
            se_raw += r * r;
        }
        assert!(wins >= 110, "averaged iterate closer in {wins}/{seeds} runs");
        assert!(se_avg < 0.6 * se_raw, "{se_avg} vs {se_raw}");
    }

    #[test]
    fn median_runs_are_translation_equivariant() {
        let model = GeometricMedian::new(4);
        let shift = [3.0, -1.5, 0.25, 10.0];
        let theta0 = vec![0.5; 4];
        let shifted0: Vec<f64> = theta0.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let mut plain = Usna::new(theta0, UsnaConfig::default(), seeded(10)).unwrap();
        let mut moved = Usna::new(shifted0, UsnaConfig::default(), seeded(10)).unwrap();
        let mut data = seeded(11);
        for _ in 0..2000 {
            let x = gaussian(&mut data, 4);
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
            plain.step(&Sample::unlabeled(x), &model).unwrap();
            moved.step(&Sample::unlabeled(xs), &model).unwrap();
        }
        for ((p, m), c) in plain.estimate().iter().zip(moved.estimate()).zip(&shift) {
            assert!((p + c - m).abs() < 1e-9, "{p} + {c} vs {m}");
        }
        let gap = plain
            .inverse_hessian()
            .unwrap()
            .sub(&moved.inverse_hessian().unwrap())
            .frobenius_norm();
        assert!(gap < 1e-9);
    }

    #[test]
    fn rejects_bad_step_sequence() {
        let config = UsnaConfig {
            nu: StepSize::new(0.0, 1.0),
            ..UsnaConfig::default()
        };
        assert!(Usna::new(vec![0.0], config, seeded(0)).is_err());
        let mut config = UwasnaConfig::default();
        config.theory_q = Some(4.0);
        config.schedules.beta = 0.2;
        config.schedules.beta_prime = 0.3;
        config.schedules.c_beta_prime = 1.0;
        config.nu = StepSize::new(1.0, 0.6);
        // γ + ν = 1.35 is below 3/2
        assert!(config.validate().is_err());
        config.nu = StepSize::new(1.0, 0.78);
        config.validate().unwrap();
    }
}
