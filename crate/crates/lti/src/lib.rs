//! File formats, experiment descriptions, a rayon executor and the command
//! implementations behind the `lti` binary.

pub mod checkpoint;
pub mod cmd;
pub mod config;
pub mod error;
pub mod exec;
pub mod gridfile;
pub mod telemetry;

pub use config::ExperimentSpec;
pub use error::CliError;
pub use exec::Rayon;
