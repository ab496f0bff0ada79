//! Command-line front end: subcommands, pipeline configuration and plot
//! data.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod pitfall;

use std::fmt::Display;
use std::path::PathBuf;

use thiserror::Error;

pub use commands::{run, Cli, Command};
pub use config::PipelineConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {msg}")]
    Stage { stage: &'static str, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub(crate) fn stage<E: Display>(name: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage {
        stage: name,
        msg: e.to_string(),
    }
}
