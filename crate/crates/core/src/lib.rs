pub mod embed;
pub mod error;
pub mod kg;
pub mod nlu;
pub mod pipeline;
pub mod subgraph;
pub mod tensor;

pub use error::{Error, Result};
