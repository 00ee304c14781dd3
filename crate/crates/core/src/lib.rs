//! Coherence audits for token embedding corpora.
//!
//! The crate reads token-level embedding dumps, groups tokens by word type
//! and sentence segment, and measures how tightly the groups cluster, how
//! much the segment label shifts them, and how pairwise cosine structure
//! differs between the first and second sentence of an input. A small
//! residual/layer-norm simulator shows how an additive segment vector
//! reaches the output.
//!
//! Geometric code is generic over [`Scalar`]; the `*64` aliases below fix
//! it to `f64`, the precision every pipeline in the CLI uses. Statistics
//! always run in `f64`.

pub mod cluster;
pub mod corpus;
pub mod error;
pub mod pairwise;
pub mod scalar;
pub mod segment;
pub mod sim;
pub mod stats;

pub use error::{CorpusError, Error, Result, StatsError};
pub use scalar::Scalar;

pub type CentroidTable64 = cluster::CentroidTable<f64>;
pub type Centroids64 = cluster::Centroids<f64>;
pub type SilhouetteValue64 = cluster::SilhouetteValue<f64>;
pub type StackConfig64 = sim::StackConfig<f64>;
pub type TokenInput64 = sim::TokenInput<f64>;
pub type ForwardTrace64 = sim::ForwardTrace<f64>;
