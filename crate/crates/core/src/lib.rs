//! Multi-view redescription mining.

pub mod cli;
pub mod dataio;
pub mod entities;
pub mod error;
pub mod gclusrm;
pub mod metrics;
pub mod multiview;
pub mod naive;
pub mod query;
pub mod report;
pub mod rng;
pub mod trees;

pub use error::{Error, Result};
