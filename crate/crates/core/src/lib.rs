//! Structural analysis of open-source design discussions.
//!
//! The pipeline reads two mailing-list archives (one user-oriented, one
//! developer-oriented) plus documentation and implementation revision logs,
//! rebuilds discussions, classifies participation, builds the
//! who-quotes-whom graph with relative-deviation statistics and attributes
//! revisions to participants.

pub mod attraction;
pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod quote;
pub mod report;
pub mod revisions;
pub mod store;
pub mod synth;
pub mod thread;

pub use error::{ArgumentError, CliError, IngestError};
pub use model::*;
