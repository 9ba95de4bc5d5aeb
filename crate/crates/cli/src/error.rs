use std::io;
use std::path::{Path, PathBuf};

use morseflow::critical::CriticalError;
use morseflow::isolate::IsolateError;
use morseflow::morse::MorseError;
use morseflow::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 input/output, 2 degenerate critical point, 3 not proper,
    /// 4 isolation violated, 5 `∂∂ ≠ 0`, 6 any other numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input(_) => 1,
            CliError::Pipeline(e) => match e {
                PipelineError::Critical(CriticalError::DegenerateCriticalPoint { .. }) => 2,
                PipelineError::Critical(CriticalError::InvalidArgument(_)) => 1,
                PipelineError::NotProper(_) | PipelineError::Isolate(IsolateError::R1NotFound) => 3,
                PipelineError::Isolate(IsolateError::IsolationViolation { .. }) => 4,
                PipelineError::Morse(MorseError::BoundarySquareNonzero { .. }) => 5,
                PipelineError::Morse(_) => 6,
                PipelineError::DimensionMismatch(..) => 1,
            },
        }
    }
}
