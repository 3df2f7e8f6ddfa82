//! File formats, parallel sampling and the command-line front end for
//! [`wdistill_core`].

pub mod cli;
pub mod error;
pub mod report;
pub mod sampling;
pub mod specfile;
pub mod sweep;

pub use error::CliError;
pub use report::Report;
pub use specfile::SpecFile;
