// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic recipes, tolerance-window scoring, accuracy-bound validation and
//! a batch experiment runner.

mod accuracy;
mod experiment;
mod metrics;
mod oracle;
mod synthetic;

pub use accuracy::{empirical_accuracy, AccuracyRow, AccuracySetup, AccuracyTable};
pub use experiment::{
    detect_with, parse_experiments, run_experiment, run_experiments, Aggregate, DetectorConfig,
    ExperimentConfig, ExperimentOutcome, ExperimentReport, GeneratorConfig, Pipeline, Precision,
    RatioKind, ScorerConfig, Summary, TrialOutcome, VariantOutcome,
};
pub use metrics::{default_delta, far_mdr, match_detections, ConfusionCounts, Metrics};
pub use oracle::{monte_carlo_log_ratio, oracle_check, OracleRow, OracleSetup, SlopeCheck};
pub use synthetic::{
    generate_synthetic, generate_with_process, CovarianceSpec, MeanSpec, Preset, SyntheticSpec,
    Variant,
};
