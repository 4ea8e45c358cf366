//! Accuracy metrics, the exact oracle, logical memory accounting and the
//! experiment matrix.

pub mod matrix;
pub mod memory;
pub mod metrics;
pub mod oracle;

pub use matrix::{run_experiment_matrix, run_trial, MatrixConfig, MetricsRow};
pub use memory::logical_memory_bytes;
pub use metrics::{aae, ndcg, precision};
pub use oracle::{exact_topk, ExactOracle};
