//! Likelihood-free Bayesian inference with rescaled composite score
//! summaries.
//!
//! The ABC-cs summary statistic is the composite score of the observed data's
//! maximum composite likelihood estimate, evaluated on simulated data and
//! whitened by a Cholesky factor of its variability matrix. This crate holds
//! the machinery for that (Godambe estimation, rescaled and adjusted scores),
//! the samplers that consume it (ABC rejection and importance sampling,
//! random-walk Metropolis for composite and full posteriors), four reference
//! models and the diagnostics used to compare posteriors.

pub mod diagnostics;
pub mod error;
pub mod estimating;
pub mod models;
pub mod numkernel;
pub mod parallel;
pub mod samplers;

pub use error::{Error, Result};
pub use estimating::{CompositeLikelihood, GodambeEstimate};
pub use models::Model;
pub use numkernel::{Matrix, RngStream};
pub use samplers::{DistanceSpec, WeightedSample};
