//! Gaussian tensor network embeddings: construction, accuracy checks, cost
//! models with lower bounds, and sketched CP-ALS / TT rounding.

pub mod apps;
pub mod bounds;
pub mod embed;
pub mod error;
pub mod flops;
pub mod instances;
pub mod io;
pub mod network;
pub mod plan;
pub mod rng;
pub mod set;
pub mod sketch;
pub mod tensor;

pub use error::{Error, Result};
pub use flops::Flops;
pub use network::TensorNetwork;
pub use set::VertexSet;
pub use sketch::SketchSpec;
pub use tensor::DenseTensor;
