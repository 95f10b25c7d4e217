pub mod dataset;
pub mod discretizer;
pub mod error;
pub mod growth;
pub mod network;
pub mod pipeline;
pub mod pruning;
pub mod rules;

pub use error::{Error, Result};
