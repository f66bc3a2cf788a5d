//! File formats, reports and the command-line surface of the `liquidyn`
//! tool.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod numfmt;
pub mod report;
pub mod scenario_file;

pub use commands::{run, Cli, Command};
pub use error::{CliError, EXIT_IO, EXIT_VALIDATION};
pub use report::{emit_report, Format, Report};
