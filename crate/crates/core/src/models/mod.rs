//! Reference models: each bundles a simulator, a prior, a composite
//! log-likelihood and, where tractable, a full log-likelihood.

pub mod equicorr;
pub mod normal_mean;
pub mod normal_parabola;
pub mod probit;
pub mod smith;
pub mod spatial;

pub use equicorr::{EquicorrData, EquicorrModel};
pub use normal_mean::NormalMean;
pub use normal_parabola::NormalParabola;
pub use probit::{ProbitData, ProbitModel};
pub use smith::{SmithData, SmithModel};
pub use spatial::SpatialDataset;

use crate::error::Result;
use crate::estimating::{composite_score, CompositeLikelihood};
use crate::numkernel::Generator;

/// Score of a fixed parameter point as a function of the data, the shape of
/// every ABC summary statistic in this crate.
pub type DataFn<'a, D> = Box<dyn Fn(&D) -> Result<Vec<f64>> + Send + Sync + 'a>;

pub trait Model: CompositeLikelihood {
    fn name(&self) -> &'static str;

    fn param_names(&self) -> Vec<String>;

    /// Log prior density up to a constant; `-inf` outside the support.
    /// May be improper.
    fn log_prior(&self, theta: &[f64]) -> f64;

    /// A draw from the prior, for proper priors that can be sampled.
    fn sample_prior(&self, _rng: &mut Generator) -> Option<Vec<f64>> {
        None
    }

    fn simulate(&self, theta: &[f64], rng: &mut Generator) -> Result<Self::Data>;

    fn full_loglik(&self, _theta: &[f64], _data: &Self::Data) -> Option<f64> {
        None
    }

    fn has_full_likelihood(&self) -> bool {
        false
    }

    /// Moment-type starting point for the composite likelihood maximization.
    fn initial_estimate(&self, data: &Self::Data) -> Vec<f64>;

    /// `y ↦ cℓ_θ(θ; y)` at a fixed `θ`. Models override this when work can
    /// be shared across many datasets at the same parameter value.
    fn score_evaluator<'a>(&'a self, theta: &[f64]) -> Result<DataFn<'a, Self::Data>> {
        let theta = theta.to_vec();
        Ok(Box::new(move |y| composite_score(self, &theta, y)))
    }
}
