pub mod cli;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod features;
pub mod lexical;
pub mod model;
pub mod semantic;
pub mod stats;
pub mod syntactic;
pub mod text;

pub use error::{Error, Result};
