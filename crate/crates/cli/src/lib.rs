//! Command-line front end for `skelcov-core`.
//!
//! Cover specs are JSON documents (see [`document`]); every command prints a
//! line-oriented report ending in a `[summary]` block and exits 0 on
//! success, 1 on usage or parse errors, 2 when a validation or audit fails.

pub mod cli;
pub mod commands;
pub mod document;
pub mod dot;
pub mod oracle_doc;
pub mod report;
