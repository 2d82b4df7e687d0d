//! Library half of the `qmimo` binary: argument parsing, dispatch and the
//! self-verification suite.

pub mod config;
pub mod error;
pub mod run;
pub mod verify;

pub use config::{parse_args, RunConfig};
pub use error::CliError;
pub use run::run;
