pub mod cli;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod model;
pub mod prior;
pub mod scores;
pub mod vocab;

pub use error::{Error, Result};
