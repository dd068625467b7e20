//! Issue-link graph analysis for issue tracker exports.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] loads repository exports and applies the cleaning rules
//!   (private/missing endpoints, self-links, multi-typed pairs, duplicate edges).
//! * [`taxonomy`] normalizes raw link type names and maps them onto the five
//!   link categories.
//! * [`graph`] builds undirected issue graphs per slice and computes the
//!   structural metric suite.
//! * [`dataset`] synthesizes non-links and builds balanced train/test sets with
//!   random or cluster-disjoint splitting.
//! * [`model`] is a TF-IDF/cosine similarity baseline with threshold and kTop
//!   classifiers.
//! * [`eval`] scores predictions on the traditional and new test sets.
//! * [`tables`] and [`pipeline`] tie everything together for the CLI.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod tables;
pub mod taxonomy;

mod io;

pub use error::{Error, Result};
