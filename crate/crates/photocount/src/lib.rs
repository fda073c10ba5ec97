//! Experiment harness for the photon-counting receiver models in
//! `photocount-core`: parallel Monte Carlo, config files, presets and CSV output.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mc;
pub mod output;
pub mod presets;

pub use error::CliError;
pub use mc::Engine;
