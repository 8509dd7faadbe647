//! Config-driven experiments, artifact output and the acceptance checks.

pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_stages, Manifest, Stage, StageStatus};
pub use output::{ArtifactWriter, OutputRecord};
pub use verify::{verify, Check, Suite, Verdict, VerifyOptions};
