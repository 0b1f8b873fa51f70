//! Surgeme recognition from robot kinematics.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod model;
pub mod preprocess;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
