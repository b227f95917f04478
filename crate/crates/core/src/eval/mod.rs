//! Evaluation harness: metrics, dataset recipes and the benchmark runner.

pub mod benchmark;
pub mod datasets;
pub mod metrics;

pub use benchmark::{extreme_mask, run_benchmark, BaselineScores, BenchmarkConfig, EvalReport};
pub use datasets::{preprocess, LabeledDataset, Recipe};
pub use metrics::{pr_auc, roc_auc};
