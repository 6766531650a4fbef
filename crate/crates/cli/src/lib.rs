//! Spec parsing, commands and report output behind the `affinedim` binary.

pub mod commands;
pub mod error;
pub mod output;
pub mod report;
pub mod spec;

pub use commands::{analyze, examples, pressure, simulate, RunOptions};
pub use error::{CliError, SpecError};
pub use output::{Outcome, Table};
pub use report::RunReport;
pub use spec::{ResolvedSystem, SystemSpec};
