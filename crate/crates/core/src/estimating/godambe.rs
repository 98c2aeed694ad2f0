use rayon::prelude::*;
use serde::Serialize;

use super::{composite_score, score_jacobian, CompositeLikelihood};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::numkernel::{Matrix, RngStream};

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const MIN_REPLICATIONS: usize = 100;

const JACKKNIFE_GROUPS: usize = 20;

/// Sensitivity `H`, variability `J` and everything derived from them at a
/// fixed parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct GodambeEstimate {
    pub theta: Vec<f64>,
    pub h: Matrix,
    pub j: Matrix,
    /// Godambe information H J⁻¹ H.
    pub g: Matrix,
    /// Sandwich variance H⁻¹ J H⁻¹ = G⁻¹.
    pub v: Matrix,
    /// Lower Cholesky factor of J.
    pub b_c: Matrix,
    pub omega_bar: f64,
    pub omega_bar_se: Option<f64>,
    pub replications: usize,
    pub mc_se_h: Option<Matrix>,
    pub mc_se_j: Option<Matrix>,
    #[serde(skip)]
    replicate_scores: Vec<Vec<f64>>,
    #[serde(skip)]
    replicate_jacobians: Vec<Matrix>,
}

fn mean_score_cov(scores: &[Vec<f64>]) -> Matrix {
    let r = scores.len();
    let d = scores[0].len();
    let mut mean = vec![0.0; d];
    for s in scores {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / r as f64;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for s in scores {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (s[a] - mean[a]) * (s[b] - mean[b]);
            }
        }
    }
    cov.scale(1.0 / (r as f64 - 1.0)).symmetrize()
}

fn neg_mean_jacobian(jacs: &[Matrix]) -> Matrix {
    let d = jacs[0].rows();
    let mut h = Matrix::zeros(d, d);
    for jac in jacs {
        h = h.sub(jac);
    }
    h.scale(1.0 / jacs.len() as f64).symmetrize()
}

impl GodambeEstimate {
    /// Builds the estimate from given `H` and `J`; no Monte Carlo error
    /// information is attached.
    pub fn from_matrices(theta: Vec<f64>, h: Matrix, j: Matrix) -> Result<Self> {
        let d = theta.len();
        if h.rows() != d || j.rows() != d || !h.is_square() || !j.is_square() {
            return Err(Error::Dimension {
                expected: d,
                found: h.rows(),
            });
        }
        let j = j.symmetrize();
        let h = h.symmetrize();
        let b_c = j.cholesky().map_err(|e| {
            Error::Estimation(format!(
                "variability matrix J is not positive definite ({e}); increase the number of replications"
            ))
        })?;
        let h_inv = h
            .inverse()
            .map_err(|e| Error::Estimation(format!("sensitivity matrix H is singular ({e})")))?;
        let j_inv = j.spd_inverse()?;
        let v = (&(&h_inv * &j) * &h_inv).symmetrize();
        let g = (&(&h * &j_inv) * &h).symmetrize();
        let omega_bar = (&j * &h_inv).trace() / d as f64;
        Ok(GodambeEstimate {
            theta,
            h,
            j,
            g,
            v,
            b_c,
            omega_bar,
            omega_bar_se: None,
            replications: 0,
            mc_se_h: None,
            mc_se_j: None,
            replicate_scores: Vec::new(),
            replicate_jacobians: Vec::new(),
        })
    }

    /// J = empirical covariance of the simulated scores, H = −mean Jacobian.
    pub fn from_replicates(
        theta: Vec<f64>,
        scores: Vec<Vec<f64>>,
        jacobians: Vec<Matrix>,
    ) -> Result<Self> {
        let r = scores.len();
        if r < 2 || jacobians.len() != r {
            return Err(Error::InvalidInput(format!(
                "need at least two matched score/Jacobian replicates, got {r}"
            )));
        }
        let d = theta.len();
        let j = mean_score_cov(&scores);
        let h = neg_mean_jacobian(&jacobians);
        let mut est = Self::from_matrices(theta, h, j)?;
        est.replications = r;

        let mut mean = vec![0.0; d];
        for s in &scores {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / r as f64;
            }
        }
        let rf = r as f64;
        let mut se_h = Matrix::zeros(d, d);
        let mut se_j = Matrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let hs: Vec<f64> = jacobians
                    .iter()
                    .map(|m| -0.5 * (m[(a, b)] + m[(b, a)]))
                    .collect();
                let ps: Vec<f64> = scores
                    .iter()
                    .map(|s| (s[a] - mean[a]) * (s[b] - mean[b]))
                    .collect();
                se_h[(a, b)] = sample_sd(&hs) / rf.sqrt();
                se_j[(a, b)] = sample_sd(&ps) / rf.sqrt();
            }
        }
        est.mc_se_h = Some(se_h);
        est.mc_se_j = Some(se_j);
        est.replicate_scores = scores;
        est.replicate_jacobians = jacobians;
        est.omega_bar_se = est.jackknife_se(|h, j| {
            let h_inv = h.inverse().ok()?;
            Some((&j * &h_inv).trace() / h.rows() as f64)
        });
        Ok(est)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Delete-a-group jackknife standard error of a statistic of (H, J),
    /// using 20 contiguous groups of replicates.
    pub fn jackknife_se<F>(&self, stat: F) -> Option<f64>
    where
        F: Fn(Matrix, Matrix) -> Option<f64>,
    {
        let r = self.replicate_scores.len();
        if r < 2 * JACKKNIFE_GROUPS {
            return None;
        }
        let g = JACKKNIFE_GROUPS;
        let mut values = Vec::with_capacity(g);
        for k in 0..g {
            let (lo, hi) = (k * r / g, (k + 1) * r / g);
            let scores: Vec<Vec<f64>> = self.replicate_scores[..lo]
                .iter()
                .chain(&self.replicate_scores[hi..])
                .cloned()
                .collect();
            let jacs: Vec<Matrix> = self.replicate_jacobians[..lo]
                .iter()
                .chain(&self.replicate_jacobians[hi..])
                .cloned()
                .collect();
            values.push(stat(neg_mean_jacobian(&jacs), mean_score_cov(&scores))?);
        }
        let m = values.iter().sum::<f64>() / g as f64;
        let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
        Some(((g as f64 - 1.0) / g as f64 * ss).sqrt())
    }

    /// B_c⁻¹ s.
    pub fn rescale(&self, score: &[f64]) -> Result<Vec<f64>> {
        self.b_c.solve_lower(score)
    }

    /// sᵀ J⁻¹ s, the composite score test statistic.
    pub fn score_test_statistic(&self, score: &[f64]) -> Result<f64> {
        let x = crate::numkernel::solve_spd(&self.j, score)?;
        Ok(crate::numkernel::linalg::dot(score, &x))
    }

    /// B_g = H (B_cᵀ)⁻¹, a square root of G.
    pub fn b_g(&self) -> Result<Matrix> {
        let bt_inv = self.b_c.transpose().inverse()?;
        Ok(&self.h * &bt_inv)
    }

    pub fn replicate_scores(&self) -> &[Vec<f64>] {
        &self.replicate_scores
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Monte Carlo estimate of H and J at `theta` from `replications` datasets
/// simulated under the model. Replicate `r` draws from `stream.child(r)`, so
/// the result does not depend on the number of workers.
pub fn estimate_godambe<M: Model>(
    model: &M,
    theta: &[f64],
    replications: usize,
    stream: RngStream,
) -> Result<GodambeEstimate> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_REPLICATIONS} replications required, got {replications}"
        )));
    }
    if !model.in_support(theta) {
        return Err(Error::Domain(format!("{theta:?} outside the parameter space")));
    }
    let per_rep: Vec<Result<(Vec<f64>, Matrix)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r as u64).generator();
            let y = model.simulate(theta, &mut rng)?;
            let s = composite_score(model, theta, &y)?;
            let jac = score_jacobian(model, theta, &y)?;
            Ok((s, jac))
        })
        .collect();
    let mut scores = Vec::with_capacity(replications);
    let mut jacs = Vec::with_capacity(replications);
    for rep in per_rep {
        let (s, j) = rep?;
        scores.push(s);
        jacs.push(j);
    }
    GodambeEstimate::from_replicates(theta.to_vec(), scores, jacs)
}

/// Covariance of an arbitrary summary statistic under the model at `theta`.
pub fn simulated_summary_covariance<M, S>(
    model: &M,
    theta: &[f64],
    summary: S,
    replications: usize,
    stream: RngStream,
) -> Result<Matrix>
where
    M: Model,
    S: Fn(&M::Data) -> Result<Vec<f64>> + Sync,
{
    if replications < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let values: Vec<Result<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r as u64).generator();
            summary(&model.simulate(theta, &mut rng)?)
        })
        .collect();
    let values: Vec<Vec<f64>> = values.into_iter().collect::<Result<_>>()?;
    Ok(mean_score_cov(&values))
}

/// η_c = B_c⁻¹ cℓ_θ(θ̃; y) with θ̃ = `est.theta`.
pub fn rescaled_score<C: CompositeLikelihood + ?Sized>(
    est: &GodambeEstimate,
    cl: &C,
    y: &C::Data,
) -> Result<Vec<f64>> {
    est.rescale(&composite_score(cl, &est.theta, y)?)
}

/// g = H J⁻¹ cℓ_θ(θ̃; y).
pub fn adjusted_score<C: CompositeLikelihood + ?Sized>(
    est: &GodambeEstimate,
    cl: &C,
    y: &C::Data,
) -> Result<Vec<f64>> {
    let s = composite_score(cl, &est.theta, y)?;
    let x = crate::numkernel::solve_spd(&est.j, &s)?;
    Ok(est.h.matvec(&x))
}

/// η_g = B_g⁻¹ g with B_g = H (B_cᵀ)⁻¹.
pub fn rescaled_adjusted_score(est: &GodambeEstimate, g: &[f64]) -> Result<Vec<f64>> {
    est.b_g()?.solve(g)
}

/// ω̄ = trace(J H⁻¹) / d.
pub fn calibration_weight(est: &GodambeEstimate) -> Result<f64> {
    let h_inv = est
        .h
        .inverse()
        .map_err(|e| Error::Estimation(format!("sensitivity matrix H is singular ({e})")))?;
    let w = (&est.j * &h_inv).trace() / est.dim() as f64;
    if !(w > 0.0) {
        return Err(Error::Estimation(format!("non-positive calibration weight {w}")));
    }
    Ok(w)
}
