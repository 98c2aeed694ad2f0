use rayon::prelude::*;

use super::{DistanceSpec, SampleMeta, WeightedSample};
use crate::error::{Error, Result};
use crate::models::{DataFn, Model};
use crate::numkernel::{Matrix, MultivariateT, RngStream};

/// One ABC summary: statistic, distance and the observed value it is
/// compared against. Several targets can share a proposal pool.
pub struct SummaryTarget<'a, D> {
    pub summary: DataFn<'a, D>,
    pub distance: DistanceSpec,
    pub observed: Vec<f64>,
}

impl<'a, D> SummaryTarget<'a, D> {
    pub fn new(summary: DataFn<'a, D>, distance: DistanceSpec, observed: Vec<f64>) -> Self {
        SummaryTarget {
            summary,
            distance,
            observed,
        }
    }

    fn distance_to(&self, y: &D) -> f64 {
        match (self.summary)(y) {
            Ok(s) if s.iter().all(|v| v.is_finite()) => self
                .distance
                .eval(&s, &self.observed)
                .unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }
}

/// ⌈αN⌉-th smallest finite distance, N counting finite entries only.
pub fn select_epsilon(distances: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {alpha} outside (0, 1]")));
    }
    let mut finite: Vec<f64> = distances.iter().copied().filter(|d| d.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::EmptySample("no finite distances".into()));
    }
    let n = finite.len();
    // guard against αN landing a rounding error above an integer
    let k = ((alpha * n as f64) * (1.0 - 1e-12)).ceil().clamp(1.0, n as f64) as usize;
    let (_, kth, _) = finite.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

fn check_level(n_proposals: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {alpha} outside (0, 1]")));
    }
    if (n_proposals as f64) * alpha < 1.0 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "{n_proposals} proposals are fewer than 1/α = {}",
            1.0 / alpha
        )));
    }
    Ok(())
}

struct Proposal {
    theta: Vec<f64>,
    log_weight: f64,
    distances: Vec<f64>,
}

fn threshold<D>(
    pool: &[Proposal],
    target_index: usize,
    alpha: f64,
    dim: usize,
    meta: SampleMeta,
) -> Result<WeightedSample> {
    let active: Vec<f64> = pool
        .iter()
        .filter(|p| p.log_weight > f64::NEG_INFINITY)
        .map(|p| p.distances[target_index])
        .collect();
    let n_failed = active.iter().filter(|d| !d.is_finite()).count();
    let eps = select_epsilon(&active, alpha)?;
    let accepted: Vec<&Proposal> = pool
        .iter()
        .filter(|p| p.log_weight > f64::NEG_INFINITY && p.distances[target_index] <= eps)
        .collect();
    let top = accepted
        .iter()
        .map(|p| p.log_weight)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut data = Vec::with_capacity(accepted.len() * dim);
    let mut weights = Vec::with_capacity(accepted.len());
    for p in &accepted {
        data.extend_from_slice(&p.theta);
        weights.push((p.log_weight - top).exp());
    }
    let n_acc = accepted.len();
    let meta = SampleMeta {
        epsilon: Some(eps),
        alpha: Some(alpha),
        n_accepted: n_acc,
        acceptance_rate: n_acc as f64 / pool.len() as f64,
        n_failed,
        ..meta
    };
    WeightedSample::new(Matrix::from_row_major(n_acc, dim, data)?, weights, meta)
}

fn evaluate<M: Model>(model: &M, targets: &[SummaryTarget<'_, M::Data>], theta: &[f64], rng: &mut crate::numkernel::Generator) -> Vec<f64> {
    match model.simulate(theta, rng) {
        Ok(y) => targets.iter().map(|t| t.distance_to(&y)).collect(),
        Err(_) => vec![f64::INFINITY; targets.len()],
    }
}

/// ABC accept-reject from the prior. All targets are thresholded on the
/// same pool of `n_proposals` (θ, y) pairs; proposal `i` draws from
/// `stream.child(i)`. Returns one equal-weight sample per target.
pub fn abc_reject<M: Model>(
    model: &M,
    targets: &[SummaryTarget<'_, M::Data>],
    n_proposals: usize,
    alpha: f64,
    stream: RngStream,
) -> Result<Vec<WeightedSample>> {
    check_level(n_proposals, alpha)?;
    let d = model.dim();
    let pool: Vec<Result<Proposal>> = (0..n_proposals)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i as u64).generator();
            let theta = model.sample_prior(&mut rng).ok_or_else(|| {
                Error::InvalidInput(format!("the {} prior cannot be sampled", model.name()))
            })?;
            let distances = evaluate(model, targets, &theta, &mut rng);
            Ok(Proposal {
                theta,
                log_weight: 0.0,
                distances,
            })
        })
        .collect();
    let pool: Vec<Proposal> = pool.into_iter().collect::<Result<_>>()?;
    let meta = SampleMeta {
        seed: stream.seed,
        stream_id: stream.stream_id,
        n_proposals,
        ..SampleMeta::default()
    };
    (0..targets.len())
        .map(|t| threshold::<M::Data>(&pool, t, alpha, d, meta.clone()))
        .collect()
}

/// ABC importance sampling with a multivariate t proposal. Weights are
/// π(θ)/q(θ); proposals outside the prior support get weight zero and are
/// left out of the distance quantile.
pub fn abc_importance<M: Model>(
    model: &M,
    proposal: &MultivariateT,
    targets: &[SummaryTarget<'_, M::Data>],
    n_proposals: usize,
    alpha: f64,
    stream: RngStream,
) -> Result<Vec<WeightedSample>> {
    check_level(n_proposals, alpha)?;
    let d = model.dim();
    if proposal.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            found: proposal.dim(),
        });
    }
    let pool: Vec<Proposal> = (0..n_proposals)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i as u64).generator();
            let theta = proposal.sample(&mut rng);
            let lp = model.log_prior(&theta);
            if lp == f64::NEG_INFINITY || lp.is_nan() {
                return Proposal {
                    theta,
                    log_weight: f64::NEG_INFINITY,
                    distances: vec![f64::INFINITY; targets.len()],
                };
            }
            let log_weight = lp - proposal.log_density(&theta);
            let distances = evaluate(model, targets, &theta, &mut rng);
            Proposal {
                theta,
                log_weight,
                distances,
            }
        })
        .collect();
    let n_zero = pool
        .iter()
        .filter(|p| p.log_weight == f64::NEG_INFINITY)
        .count();
    if n_zero == pool.len() {
        return Err(Error::EmptySample(
            "every importance proposal fell outside the prior support".into(),
        ));
    }
    let meta = SampleMeta {
        seed: stream.seed,
        stream_id: stream.stream_id,
        n_proposals,
        n_zero_prior: n_zero,
        ..SampleMeta::default()
    };
    (0..targets.len())
        .map(|t| threshold::<M::Data>(&pool, t, alpha, d, meta.clone()))
        .collect()
}
