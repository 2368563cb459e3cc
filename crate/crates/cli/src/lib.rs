//! File formats and command-line front end for the unshuffling solvers.

pub mod commands;
pub mod error;
pub mod io;
pub mod model_args;
pub mod report;
pub mod selftest;

pub use commands::run;
pub use error::{CliError, Result};
pub use io::{load_corpus, write_corpus, CorpusSpec, Layout};
pub use report::{read_report, write_report, Report, TruthFile};
