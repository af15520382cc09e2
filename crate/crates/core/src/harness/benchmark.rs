use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControllerGains, TrackingController};
use crate::disturbances::{sample_profile, Scenario};
use crate::error::{Error, Result};
use crate::estimators::{DisturbanceSensor, Estimator, EstimatorKind};
use crate::plant::{derive_seed, rollout, RolloutLog};
use crate::representation::RepresentationParams;

use super::config::ExperimentConfig;

pub const NO_ESTIMATOR: &str = "NoEstimator";
pub const SCHEMA_VERSION: u32 = 1;

/// Seed streams; keeps scenario sampling and sensor noise independent.
const SCENARIO_STREAM: u64 = 1 << 20;
const NOISE_STREAM: u64 = 2 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Estimate fed nowhere; tracking-error term off.
    Estimation,
    /// Estimate fed forward to the controller.
    Control,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Estimation => "estimation",
            Task::Control => "control",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// m/s^2, velocity rows.
    pub estimation_rmse: f64,
    /// m, position.
    pub tracking_rmse: f64,
    pub diverged: bool,
    /// Adaptive parameter clamp activated in some run.
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub methods: Vec<MethodResult>,
}

impl MetricsReport {
    pub fn get(&self, method: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Logged closed-loop run kept for plotting.
#[derive(Clone, Debug)]
pub struct RolloutTrace {
    pub method: String,
    pub task: Task,
    pub scenario: usize,
    pub log: RolloutLog<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchmarkOutput {
    pub report: MetricsReport,
    /// Runs on scenario 0 for every method and task.
    pub traces: Vec<RolloutTrace>,
}

/// Composite benchmark disturbances: a sampled Fourier profile (tier ranges
/// with amplitudes and offsets scaled by `fourier_scale`), linear
/// drag, and the constant acceleration error of an unmodeled payload,
/// `mass_ratio * gravity`.
pub fn benchmark_scenarios(cfg: &ExperimentConfig) -> Vec<Scenario<f64>> {
    let b = &cfg.benchmark;
    let mut ranges = cfg.disturbances.get(b.fourier_tier).clone();
    ranges.amplitude = ranges.amplitude.map(|a| a * b.fourier_scale);
    ranges.offset = ranges.offset.map(|a| a * b.fourier_scale);
    (0..b.scenarios)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SCENARIO_STREAM + i as u64));
            Scenario::Composite {
                children: vec![
                    Scenario::fourier(sample_profile(&mut rng, &ranges, cfg.plant.dof)),
                    Scenario::Drag {
                        coefficients: b.drag.clone(),
                        mass: cfg.plant.mass,
                    },
                    Scenario::Step {
                        time: 0.0,
                        vector: cfg.plant.gravity.iter().map(|g| b.mass_ratio * g).collect(),
                    },
                ],
            }
        })
        .collect()
}

struct Job<'a> {
    method: Option<&'a EstimatorKind>,
    task: Task,
    scenario: usize,
}

fn run_job(
    job: &Job<'_>,
    cfg: &ExperimentConfig,
    scenarios: &[Scenario<f64>],
    representation: &Option<Arc<RepresentationParams<f64>>>,
) -> Result<RolloutLog<f64>> {
    let mut gains = cfg.estimator.gains.clone();
    gains.gamma = match job.task {
        Task::Estimation => 0.0,
        Task::Control => cfg.estimator.gamma_control,
    };
    let mut estimator = match job.method {
        Some(kind) => Some(Estimator::new(
            kind.clone(),
            &gains,
            representation.clone(),
            cfg.plant.dof,
        )?),
        None => None,
    };
    let controller = TrackingController {
        gains: ControllerGains::diagonal(cfg.plant.dof, cfg.controller.kp, cfg.controller.kv),
        feedforward: job.task == Task::Control,
    };
    let mut sensor = DisturbanceSensor::new(
        &cfg.noise,
        cfg.plant.dof,
        derive_seed(cfg.seed, NOISE_STREAM + job.scenario as u64),
    );
    rollout(
        &controller,
        estimator.as_mut(),
        &scenarios[job.scenario],
        &cfg.benchmark.reference,
        cfg.benchmark.duration,
        &cfg.plant,
        &mut sensor,
    )
}

/// Sums of squared errors over the trailing window of a log.
fn tail_errors(log: &RolloutLog<f64>, fraction: f64, total_rows: usize) -> (f64, f64, usize) {
    let start = total_rows - ((fraction * total_rows as f64).round() as usize).min(total_rows);
    let (mut est, mut track, mut count) = (0.0, 0.0, 0);
    for row in log.rows.iter().skip(start) {
        let dof = row.d.len();
        est += row
            .d
            .iter()
            .zip(&row.d_hat)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
        track += (0..dof)
            .map(|i| (row.x[i] - row.x_d[i]).powi(2))
            .sum::<f64>();
        count += 1;
    }
    (est, track, count)
}

/// Runs every method on the estimation and control tasks over the same
/// scenarios, plus a run without any estimator.
///
/// Estimation RMSE comes from the estimation task, tracking RMSE from the
/// control task; both pool the trailing `rmse_fraction` of every scenario.
pub fn run_benchmark(
    cfg: &ExperimentConfig,
    representation: Option<Arc<RepresentationParams<f64>>>,
) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let methods = cfg.methods();
    if representation.is_none() && methods.iter().any(EstimatorKind::needs_representation) {
        return Err(Error::MissingWeights(Default::default()));
    }
    let scenarios = benchmark_scenarios(cfg);
    let mut entries: Vec<Option<&EstimatorKind>> = methods.iter().map(Some).collect();
    entries.push(None);
    let mut jobs = Vec::new();
    for m in &entries {
        for task in [Task::Estimation, Task::Control] {
            for scenario in 0..scenarios.len() {
                jobs.push(Job {
                    method: *m,
                    task,
                    scenario,
                });
            }
        }
    }
    let logs = jobs
        .par_iter()
        .map(|j| run_job(j, cfg, &scenarios, &representation))
        .collect::<Result<Vec<_>>>()?;

    let total_rows = (cfg.benchmark.duration / cfg.plant.dt).round() as usize + 1;
    let mut results = Vec::new();
    let mut traces = Vec::new();
    for m in &entries {
        let name = m.map_or(NO_ESTIMATOR, |k| k.name()).to_string();
        let mut r = MethodResult {
            method: name.clone(),
            estimation_rmse: 0.0,
            tracking_rmse: 0.0,
            diverged: false,
            saturated: false,
        };
        for task in [Task::Estimation, Task::Control] {
            let (mut sum, mut count) = (0.0, 0);
            for (job, log) in jobs.iter().zip(&logs) {
                if job.method.map(|k| k.name()) != m.map(|k| k.name()) || job.task != task {
                    continue;
                }
                r.diverged |= log.diverged;
                r.saturated |= log.saturated;
                let (est, track, c) = tail_errors(log, cfg.benchmark.rmse_fraction, total_rows);
                sum += match task {
                    Task::Estimation => est,
                    Task::Control => track,
                };
                count += c;
                if job.scenario == 0 {
                    traces.push(RolloutTrace {
                        method: name.clone(),
                        task,
                        scenario: 0,
                        log: log.clone(),
                    });
                }
            }
            let rmse = if count == 0 {
                f64::INFINITY
            } else {
                (sum / count as f64).sqrt()
            };
            match task {
                Task::Estimation => r.estimation_rmse = rmse,
                Task::Control => r.tracking_rmse = rmse,
            }
        }
        results.push(r);
    }
    Ok(BenchmarkOutput {
        report: MetricsReport {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.hash(),
            seed: cfg.seed,
            methods: results,
        },
        traces,
    })
}
