pub mod dist;
pub mod error;
pub mod ia;
pub mod metrics;
pub mod mle;
pub mod models;
pub mod moments;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod study;

pub use dist::{CoupledParams, Family, QBetaParams, Support};
pub use error::{Error, Result};
pub use ia::{ia_fit, EstimateResult, IAConfig, Method};
pub use mle::ml_fit;
pub use sampler::{RandomStream, SampleSet};
