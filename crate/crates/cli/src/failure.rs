//! Failures and their exit codes: 1 numeric, 2 inadmissible input, 3 IO/parse.

use std::fmt;

use scalarflat::Error;

#[derive(Debug)]
pub enum Failure {
    /// A numeric check or solver failed.
    Numeric(String),
    /// The polygon spec file or the flags describe something the construction rejects.
    Input(String),
    /// The spec file could not be read or parsed, or an output could not be written.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Numeric(_) => 1,
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        Failure::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Input(m) => write!(f, "inadmissible input: {m}"),
            Failure::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain { .. }
            | Error::NoConvergence { .. }
            | Error::QuadratureFailure { .. }
            | Error::NonPositiveRadius(_)
            | Error::OracleDomain(_)
            | Error::RootNotFound(_)
            | Error::PointNotInterior(..)
            | Error::BoundaryMapMismatch(_) => Failure::Numeric(msg),
            _ => Failure::Input(msg),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
