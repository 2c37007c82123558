//! Scenario-driven command line for the nonlocal competition library.
//!
//! A scenario file (TOML) describes one experiment: a grid, a dispersal
//! kernel, the six competition coefficients, and run parameters. The
//! subcommands compile it and emit CSV/JSON artifacts; see the crate
//! README for the file format and the exit-code contract.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::{CliError, CliResult, EXIT_NUMERICAL, EXIT_SUITE, EXIT_VALIDATION};
pub use scenario::{load_scenario, LoadedScenario, Scenario};
