//! Configuration files, output writers and the command-line front end.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str};
pub use output::{write_field_snapshot, write_timeseries, RunReport, StepMeta};
pub use run::execute;
