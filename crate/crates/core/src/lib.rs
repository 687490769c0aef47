//! Iterated equilibrium distributions and higher-order stop-loss transforms.

pub mod convolve;
pub mod csv;
pub mod dist;
pub mod error;
pub mod iterate;
pub mod limits;
pub mod ordering;
pub mod quadrature;
pub mod sampler;
pub mod special;

pub use dist::{DistributionSpec, Family, MomentTable, Shape};
pub use error::{Error, Result};
pub use iterate::{IteratedEvaluation, IterationIndex, Method};
pub use quadrature::{IntegralResult, QuadratureConfig};
