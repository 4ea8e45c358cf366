//! Full-domain LDP frequency oracles used as baselines and building blocks.

pub mod grr;
pub mod hr;
pub mod olh;

pub use grr::{grr_debias, grr_randomize, GrrAggregator};
pub use hr::{hadamard_sign, hr_randomize, HrAggregator, HrParams};
pub use olh::{olh_randomize, optimal_g, OlhAggregator, OlhParams};
