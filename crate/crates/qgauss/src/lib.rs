//! Experiment driver for `qgauss-core`: JSON configs, the word mini-grammar,
//! suite dispatch and JSON/CSV reports.

pub mod config;
mod error;
pub mod report;
pub mod suites;
pub mod word;

pub use config::{parse_config, parse_config_as, parse_config_unvalidated, Command, ExperimentConfig, Format};
pub use error::{CliError, Result};
pub use report::{Cell, Check, Report, Summary, Table};
pub use suites::run;
pub use word::{parse_word, Word, WordLetter};
