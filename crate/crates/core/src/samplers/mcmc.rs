use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{SampleMeta, WeightedSample};
use crate::error::{Error, Result};
use crate::numkernel::{Matrix, RngStream};

/// Gaussian random-walk Metropolis. `n_iter` counts every iteration; the
/// first `burn_in` states are dropped and the rest returned with equal
/// weights. Proposals with log target −∞ are always rejected.
pub fn rw_metropolis(
    log_target: impl Fn(&[f64]) -> f64,
    init: &[f64],
    proposal_cov: &Matrix,
    n_iter: usize,
    burn_in: usize,
    stream: RngStream,
) -> Result<WeightedSample> {
    let d = init.len();
    if proposal_cov.rows() != d || !proposal_cov.is_square() {
        return Err(Error::Dimension {
            expected: d,
            found: proposal_cov.rows(),
        });
    }
    if burn_in >= n_iter {
        return Err(Error::InvalidInput(format!(
            "burn-in {burn_in} leaves nothing of {n_iter} iterations"
        )));
    }
    let l = proposal_cov.cholesky()?;
    let mut x = init.to_vec();
    let mut lx = log_target(&x);
    if !lx.is_finite() {
        return Err(Error::Domain(format!("log target not finite at the initial value {init:?}")));
    }
    let mut rng = stream.generator();
    let kept = n_iter - burn_in;
    let mut data = Vec::with_capacity(kept * d);
    let mut accepted = 0usize;
    let mut z = vec![0.0; d];
    for it in 0..n_iter {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let step = l.matvec(&z);
        let cand: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let lc = log_target(&cand);
        let u: f64 = rng.random();
        if lc > f64::NEG_INFINITY && !lc.is_nan() && u.ln() < lc - lx {
            x = cand;
            lx = lc;
            accepted += 1;
        }
        if it >= burn_in {
            data.extend_from_slice(&x);
        }
    }
    let meta = SampleMeta {
        seed: stream.seed,
        stream_id: stream.stream_id,
        n_proposals: n_iter,
        n_accepted: accepted,
        acceptance_rate: accepted as f64 / n_iter as f64,
        ..SampleMeta::default()
    };
    WeightedSample::equal_weights(Matrix::from_row_major(kept, d, data)?, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_box_accepts_every_inside_proposal() {
        let target = |t: &[f64]| if t[0].abs() < 1.0 { 0.0 } else { f64::NEG_INFINITY };
        let s = rw_metropolis(target, &[0.0], &Matrix::diag(&[0.25]), 2000, 0, RngStream::new(4, 0))
            .unwrap();
        assert!(s.column(0).iter().all(|v| v.abs() < 1.0));
        assert!(s.meta.acceptance_rate > 0.3 && s.meta.acceptance_rate < 1.0);
    }

    #[test]
    fn non_finite_start_is_error() {
        let r = rw_metropolis(|_| f64::NEG_INFINITY, &[0.0], &Matrix::identity(1), 10, 0, RngStream::new(0, 0));
        assert!(r.is_err());
    }
}
