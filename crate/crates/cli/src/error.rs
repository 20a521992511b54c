use std::fmt;

use thiserror::Error;

/// Failure class, mapped one-to-one onto the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed CSV or fixture input.
    Input,
    /// Singular systems, failed evaluations, missing table entries.
    Numerical,
    /// Bad flags, config keys or parameter values.
    Config,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Config => 4,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ErrorKind::Input => "input",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Config => "config",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{module}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    /// Module the failure originated in (`cli`, `moments`, `approximation`, ...).
    pub module: &'static str,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            module: "cli",
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            module: "cli",
            message: message.into(),
        }
    }

    /// Wraps a library error raised while running `module`.
    pub fn from_core(module: &'static str, err: ratiolab::Error) -> Self {
        use ratiolab::Error as E;
        let kind = match err {
            E::InvalidSpec(_)
            | E::InvalidSampleSize { .. }
            | E::ZeroReplications
            | E::InvalidOrder(_) => ErrorKind::Config,
            E::EmptyPopulation | E::LengthMismatch { .. } | E::NonFinite { .. } => ErrorKind::Input,
            _ => ErrorKind::Numerical,
        };
        Self {
            kind,
            module,
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Single-line, tab-separated record for machine consumption.
    pub fn record(&self) -> ErrorRecord<'_> {
        ErrorRecord(self)
    }
}

pub struct ErrorRecord<'a>(&'a CliError);

impl fmt::Display for ErrorRecord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.0;
        write!(
            f,
            "error\tkind={}\tmodule={}\texit={}\tmessage={}",
            e.kind.label(),
            e.module,
            e.exit_code(),
            e.message.replace(['\t', '\n'], " ")
        )
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
