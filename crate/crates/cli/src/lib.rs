//! Command-line front end: fit, score and cluster user matrices, simulate
//! reference settings and run replicated benchmarks.

pub mod commands;
pub mod error;
pub mod io;
pub mod svg;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
