//! Experiment orchestration: seeding, configuration, the coverage study
//! and result files.

mod config;
mod seed;
mod study;

pub use config::{parse_config, read_config, write_config, ExperimentConfig, NoiseLaw, Scale};
pub use seed::seed_split;
pub use study::{results_to_csv, run_table1, write_results, MethodResult, StudyResult, RESULTS_HEADER};
