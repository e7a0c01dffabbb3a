//! Harness around the `renorm` library: run configuration, the end-to-end
//! pipeline, the verification suite, and text exports.

pub mod checks;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod sampling;

pub use config::{Mode, RunConfig};
pub use pipeline::Pipeline;
pub use report::VerificationReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// The construction or a verification failed; exit code 1.
    #[error("{0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<renorm::Error> for CliError {
    fn from(e: renorm::Error) -> Self {
        match e {
            renorm::Error::Parse(_) | renorm::Error::Parameter(_) | renorm::Error::Infeasible(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }
}
