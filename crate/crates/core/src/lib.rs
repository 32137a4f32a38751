//! Rare events in high-dimensional random geometric graphs.
//!
//! Points are drawn uniformly on the unit sphere `S^{d-1}` or as standard
//! Gaussian vectors in `R^d`; two vertices are joined when their inner
//! product exceeds a threshold chosen so that every edge has probability
//! `p`. This crate provides the special functions behind those thresholds,
//! seeded samplers for both models, the symmetric-rearrangement cap and MGF
//! processes, and estimators (naive, conditioned and tilted Monte Carlo as
//! well as closed-form bounds) for two rare events: the graph being
//! complete, and the edge count exceeding `(1 + eps)` times its mean.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod oracle;
pub mod params;
pub mod rearrange;
pub mod rng;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
pub use params::{Event, Model, ModelParams, Threshold};
pub use rng::RngStream;
