pub mod cli;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod merge;
pub mod metrics;
pub mod operators;
pub mod partition;
pub mod pipeline;

pub use error::{Error, Result};
