use std::fmt;
use std::path::Path;

use vbi_core::Error;

pub const EXIT_OUTPUT: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Output(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Solver(_) => EXIT_SOLVER,
            Self::Output(_) => EXIT_OUTPUT,
        }
    }

    pub fn write(path: &Path, err: impl fmt::Display) -> Self {
        Self::Output(format!("cannot write {}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Solver(m) => write!(f, "solver error: {m}"),
            Self::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(_)
            | Error::SupportOffMesh(_)
            | Error::InvalidFrequency(_)
            | Error::InvalidSpec(_)
            | Error::InvalidScenario(_)
            | Error::UnknownBenchmark(_)
            | Error::UnknownStudy(_) => Self::Config(e.to_string()),
            Error::Io(_) => Self::Output(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
