use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] grweyl::Error),
}

/// How a command finished when it did not error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// The computation ran but the claim under test did not hold.
    Fail,
}

fn is_input_error(e: &grweyl::Error) -> bool {
    use grweyl::Error::*;
    match e {
        Syntax { .. }
        | UnknownIdentifier(_)
        | InvalidSelector(_)
        | InvalidKind(_)
        | ShapeMismatch(_)
        | PointDimension { .. } => true,
        InCheck { source, .. } => is_input_error(source),
        _ => false,
    }
}

impl CliError {
    /// 2 for usage and input problems, 3 for mathematical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(..) => 2,
            CliError::Core(e) if is_input_error(e) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Pass => ExitCode::SUCCESS,
            Outcome::Fail => ExitCode::from(1),
        }
    }
}
