//! Posterior samplers: ABC accept-reject and importance sampling with
//! quantile thresholds, multinomial resampling and random-walk Metropolis.

mod abc;
mod distance;
mod mcmc;

pub use abc::{abc_importance, abc_reject, select_epsilon, SummaryTarget};
pub use distance::{distance, DistanceKind, DistanceSpec};
pub use mcmc::rw_metropolis;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, RngStream};

/// Provenance of a sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub stream_id: u64,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub n_proposals: usize,
    pub n_accepted: usize,
    pub acceptance_rate: f64,
    /// Proposals whose simulation or summary failed (infinite distance).
    pub n_failed: usize,
    /// Importance proposals outside the prior support.
    pub n_zero_prior: usize,
}

/// Posterior draws (one per row) with normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub draws: Matrix,
    pub weights: Vec<f64>,
    pub meta: SampleMeta,
}

impl WeightedSample {
    pub fn new(draws: Matrix, weights: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if draws.rows() == 0 {
            return Err(Error::EmptySample("no draws".into()));
        }
        if weights.len() != draws.rows() {
            return Err(Error::Dimension {
                expected: draws.rows(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptySample("all weights are zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(WeightedSample {
            draws,
            weights,
            meta,
        })
    }

    pub fn equal_weights(draws: Matrix, meta: SampleMeta) -> Result<Self> {
        let m = draws.rows();
        Self::new(draws, vec![1.0; m], meta)
    }

    pub fn len(&self) -> usize {
        self.draws.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.draws.cols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.column(j)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (i, w) in self.weights.iter().enumerate() {
            for (mj, x) in m.iter_mut().zip(self.draws.row(i)) {
                *mj += w * x;
            }
        }
        m
    }

    /// Kish effective sample size 1/Σw².
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Multinomial resampling with replacement; the output has equal weights.
pub fn resample(ws: &WeightedSample, m_out: usize, stream: RngStream) -> Result<WeightedSample> {
    if m_out == 0 {
        return Err(Error::InvalidInput("resample size must be at least 1".into()));
    }
    let mut cum = Vec::with_capacity(ws.len());
    let mut acc = 0.0;
    for w in &ws.weights {
        acc += w;
        cum.push(acc);
    }
    let last = ws.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    let mut rng = stream.generator();
    let d = ws.dim();
    let mut data = Vec::with_capacity(m_out * d);
    for _ in 0..m_out {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cum.partition_point(|c| *c <= u).min(last);
        data.extend_from_slice(ws.draws.row(i));
    }
    let meta = SampleMeta {
        seed: stream.seed,
        stream_id: stream.stream_id,
        ..ws.meta.clone()
    };
    WeightedSample::equal_weights(Matrix::from_row_major(m_out, d, data)?, meta)
}
