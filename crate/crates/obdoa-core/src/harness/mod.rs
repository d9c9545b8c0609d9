//! Monte Carlo experiment harness: config parsing, parallel execution,
//! optimal-assignment error scoring and result serialization.
//!
//! Experiments are described by plain-text files (see [`config`]), executed
//! deterministically across any thread count by [`run_experiment`], and
//! rendered with [`result_to_csv`] / [`result_to_json`].

mod assign;
pub mod config;
mod output;
mod runner;

pub use assign::matched_sse;
pub use config::{
    noise_power_for_snr, parse_experiment, parse_scenario, DopPolicy, ExperimentSpec, Method,
    PolarizationPolicy, SourceTemplate, Sweep,
};
pub use output::{result_to_csv, result_to_json, RunMetadata, CSV_HEADER};
pub use runner::{run_experiment, ExperimentResult, ResultRow};
