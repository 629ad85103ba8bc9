//! Command-line front end for `symtorus-core`: run configuration, field files,
//! CSV and JSON reports, the counterexample gallery and the verification
//! suites. The binary in `main.rs` is a thin argument parser over
//! [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod gallery;
pub mod io;
pub mod synth;
pub mod tables;
pub mod verify;

pub use config::{Resolved, RunConfig};
pub use error::CliError;
