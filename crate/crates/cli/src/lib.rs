//! Scenario runner for `stiefel-sync`: scenario files, templates, batch
//! execution, CSV series and report JSON.

pub mod audit;
pub mod error;
pub mod generate;
pub mod run;
pub mod scenario;
pub mod series;

pub use error::{exit, CliError, Result};
pub use generate::{generate_scenario, Template};
pub use run::{execute, run_batch, run_scenario, Execution, RunReport};
pub use scenario::Scenario;
