//! y_i ~ N(θ, 1): the simplest full-likelihood model, where the sensitivity
//! and variability matrices coincide at n.

use rand_distr::{Distribution, StandardNormal};

use super::Model;
use crate::error::Result;
use crate::estimating::CompositeLikelihood;
use crate::numkernel::{Generator, Matrix};

#[derive(Clone, Debug)]
pub struct NormalMean {
    pub n: usize,
}

impl NormalMean {
    pub fn new(n: usize) -> Self {
        NormalMean { n }
    }
}

impl CompositeLikelihood for NormalMean {
    type Data = Vec<f64>;

    fn dim(&self) -> usize {
        1
    }

    fn logcl(&self, theta: &[f64], y: &Vec<f64>) -> f64 {
        -0.5 * y.iter().map(|v| (v - theta[0]).powi(2)).sum::<f64>()
    }

    fn closed_form_score(&self, theta: &[f64], y: &Vec<f64>) -> Option<Vec<f64>> {
        Some(vec![y.iter().map(|v| v - theta[0]).sum()])
    }

    fn closed_form_score_jacobian(&self, _theta: &[f64], y: &Vec<f64>) -> Option<Matrix> {
        Some(Matrix::diag(&[-(y.len() as f64)]))
    }

    fn has_closed_form_score(&self) -> bool {
        true
    }
}

impl Model for NormalMean {
    fn name(&self) -> &'static str {
        "normal-mean"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    /// N(0, 100).
    fn log_prior(&self, theta: &[f64]) -> f64 {
        -theta[0] * theta[0] / 200.0
    }

    fn simulate(&self, theta: &[f64], rng: &mut Generator) -> Result<Vec<f64>> {
        Ok((0..self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                theta[0] + z
            })
            .collect())
    }

    fn full_loglik(&self, theta: &[f64], y: &Vec<f64>) -> Option<f64> {
        Some(self.logcl(theta, y))
    }

    fn has_full_likelihood(&self) -> bool {
        true
    }

    fn initial_estimate(&self, y: &Vec<f64>) -> Vec<f64> {
        vec![y.iter().sum::<f64>() / y.len() as f64]
    }
}
