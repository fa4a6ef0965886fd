//! The chapters of the guide in `book/`, one module each, so that
//! `cargo test --doc` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/power-moments.md")]
pub mod power_moments {}
#[doc = include_str!("../../../book/src/independent-approximates.md")]
pub mod independent_approximates {}
#[doc = include_str!("../../../book/src/likelihood-and-metrics.md")]
pub mod likelihood_and_metrics {}
#[doc = include_str!("../../../book/src/studies.md")]
pub mod studies {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
