//! Errors raised by the loader, the query parser and the command-line front
//! end. Every variant carries a stable machine-readable code.

use std::path::PathBuf;

/// Loader, parser and engine errors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The manifest is malformed or inconsistent.
    #[error("manifest error: {0}")]
    Manifest(String),
    /// A file could not be read or written.
    #[error("cannot access `{}`: {message}", path.display())]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Operating-system message.
        message: String,
    },
    /// A table file is not well-formed delimited text.
    #[error("{file}: row {row}, column {column}: {message}")]
    Csv {
        /// Table file name.
        file: String,
        /// 1-based line number (the header is line 1).
        row: usize,
        /// 1-based column number (0 when the whole row is at fault).
        column: usize,
        /// What is wrong.
        message: String,
    },
    /// A cell does not parse under its attribute's declared type.
    #[error("{file}: row {row}, column {column}: `{value}` is not a valid {expected}")]
    Type {
        /// Table file name.
        file: String,
        /// 1-based line number.
        row: usize,
        /// 1-based column number.
        column: usize,
        /// Offending cell text.
        value: String,
        /// Declared type name.
        expected: &'static str,
    },
    /// A row breaks a missing-value restriction of the star model.
    #[error("{file}: row {row}: {message}")]
    Restriction {
        /// Table file name.
        file: String,
        /// 1-based line number.
        row: usize,
        /// What is wrong.
        message: String,
    },
    /// The query text does not follow the grammar.
    #[error("syntax error at position {position}: {message}")]
    Syntax {
        /// 0-based byte offset into the query text.
        position: usize,
        /// What was expected.
        message: String,
    },
    /// The query names an attribute outside the universe.
    #[error("unknown attribute `{name}` at position {position}")]
    UnknownAttribute {
        /// The unknown name.
        name: String,
        /// 0-based byte offset into the query text.
        position: usize,
    },
    /// The query uses an aggregate other than MIN, MAX, COUNT and SUM.
    #[error("unsupported aggregate `{name}` at position {position}")]
    UnsupportedAggregate {
        /// The aggregate name as written.
        name: String,
        /// 0-based byte offset into the query text.
        position: usize,
    },
    /// The engine rejected the request.
    #[error(transparent)]
    Engine(#[from] cqa_core::Error),
}

impl Error {
    /// Stable identifier for programmatic handling.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Manifest(_) => "manifest_error",
            Error::Io { .. } => "io_error",
            Error::Csv { .. } => "csv_error",
            Error::Type { .. } => "type_error",
            Error::Restriction { .. } => "restriction_violation",
            Error::Syntax { .. } => "syntax_error",
            Error::UnknownAttribute { .. } => "unknown_attribute",
            Error::UnsupportedAggregate { .. } => "unsupported_aggregate",
            Error::Engine(e) => e.code(),
        }
    }

    /// Byte offset into the query text, for parser errors.
    pub fn position(&self) -> Option<usize> {
        match self {
            Error::Syntax { position, .. }
            | Error::UnknownAttribute { position, .. }
            | Error::UnsupportedAggregate { position, .. } => Some(*position),
            _ => None,
        }
    }

    /// Process exit code: 2 for internal invariant failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Engine(cqa_core::Error::Invariant(_)) => 2,
            _ => 1,
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
