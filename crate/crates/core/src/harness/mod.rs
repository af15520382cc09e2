//! Experiment orchestration: configuration, the estimator benchmark, the
//! embedding ablation, and artifact export.

mod ablation;
mod benchmark;
mod config;
mod export;

pub use ablation::{offline_loss, online_loss, run_ablation, AblationRow, AdaptMode};
pub use benchmark::{
    benchmark_scenarios, run_benchmark, BenchmarkOutput, MethodResult, MetricsReport, RolloutTrace,
    Task, NO_ESTIMATOR, SCHEMA_VERSION,
};
pub use config::{
    AblationConfig, BenchmarkConfig, ControllerConfig, EstimatorConfig, ExperimentConfig,
    PathsConfig, Tier, TierRanges,
};
pub use export::{
    ablation_csv, metrics_csv, parse_ablation_csv, parse_metrics_csv, parse_summary_json,
    rollouts_csv, summary_json, write_text, ABLATION_HEADER, METRICS_HEADER,
};
