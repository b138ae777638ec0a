//! Subcommand implementations, usable without the binary.

pub mod calc;
pub mod grid;
pub mod report;
pub mod run;
