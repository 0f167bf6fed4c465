//! File formats, the end-to-end pipeline and the command-line front end for
//! `cfire-core`.

pub mod csvio;
pub mod document;
pub mod error;
pub mod pipeline;
pub mod report;

pub use error::{CliError, Result};
pub use pipeline::{run, RunConfig, RunOutcome};
