//! Error type shared by every engine module.

use alloc::string::String;

/// Errors raised by the engine. Each variant has a stable machine-readable
/// [`code`](Error::code).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A restriction or projection referenced an attribute the tuple lacks.
    #[error("attribute `{0}` is not defined on the tuple")]
    AttributeNotDefined(String),
    /// An attribute name is declared twice.
    #[error("attribute `{0}` is declared more than once")]
    DuplicateAttribute(String),
    /// An attribute name does not exist in the universe.
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    /// The warehouse breaks a missing-value restriction or a type declaration.
    #[error("invalid warehouse: {0}")]
    InvalidWarehouse(String),
    /// The dependency set is not normalized or not acyclic.
    #[error("dependency set is not supported: {0}")]
    NonStarFds(String),
    /// An enumeration would exceed the configured output cap.
    #[error("enumeration exceeds the cap of {cap} tuples")]
    EnumerationTooLarge {
        /// Configured cap.
        cap: usize,
    },
    /// The repair space exceeds the configured limit.
    #[error("repair space of size {size} exceeds the limit {limit}")]
    RepairSpaceTooLarge {
        /// Product of choice-point sizes (saturating).
        size: u128,
        /// Configured limit.
        limit: u128,
    },
    /// A choice function does not match the chase it is applied to.
    #[error("invalid choice function: {0}")]
    InvalidChoice(String),
    /// The selection condition cannot be decomposed per attribute.
    #[error("condition is not independent: {0}")]
    NotIndependent(String),
    /// The having clause falls outside the supported fragment.
    #[error("unsupported having clause: {0}")]
    UnsupportedHaving(String),
    /// The query is malformed with respect to the schema.
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    /// A comparison or aggregate mixes incompatible types.
    #[error("type error: {0}")]
    TypeError(String),
    /// An internal consistency check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Stable identifier for programmatic handling.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AttributeNotDefined(_) => "attribute_not_defined",
            Error::DuplicateAttribute(_) => "duplicate_attribute",
            Error::UnknownAttribute(_) => "unknown_attribute",
            Error::InvalidWarehouse(_) => "invalid_warehouse",
            Error::NonStarFds(_) => "non_star_fds",
            Error::EnumerationTooLarge { .. } => "enumeration_too_large",
            Error::RepairSpaceTooLarge { .. } => "repair_space_too_large",
            Error::InvalidChoice(_) => "invalid_choice",
            Error::NotIndependent(_) => "not_independent",
            Error::UnsupportedHaving(_) => "unsupported_having",
            Error::InvalidQuery(_) => "invalid_query",
            Error::TypeError(_) => "type_error",
            Error::Invariant(_) => "invariant",
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;
