//! File formats, a small SQL dialect and the `cqa` command line on top of
//! the `cqa-core` consistent-answer engine.
//!
//! A warehouse is described by a JSON manifest naming one CSV file per
//! dimension plus a fact file ([`manifest`]). Queries are written in a
//! restricted SQL dialect ([`sql`]) and answered by the engine; results are
//! rendered as text, JSON or CSV ([`output`]).

pub mod cli;
pub mod error;
pub mod manifest;
pub mod output;
pub mod sql;

pub use error::{Error, Result};
pub use manifest::{load_warehouse, write_warehouse, Manifest};
pub use sql::{parse_query, print_statement, ParsedStatement};
