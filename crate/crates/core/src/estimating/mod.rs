//! Composite-likelihood estimating machinery: scores, the maximum composite
//! likelihood estimator, sensitivity/variability (Godambe) estimation, the
//! rescaled and adjusted composite scores and the calibration weight.

mod godambe;
mod mcle;

pub use godambe::{
    adjusted_score, calibration_weight, estimate_godambe, rescaled_adjusted_score,
    rescaled_score, simulated_summary_covariance, GodambeEstimate, DEFAULT_REPLICATIONS,
    MIN_REPLICATIONS,
};
pub use mcle::{nelder_mead, solve_mcle, solve_mcle_with, McleFit, McleOptions};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// A composite log-likelihood `cℓ(θ; y)` of dimension `d`, with an optional
/// closed-form score (and score Jacobian).
pub trait CompositeLikelihood: Sync {
    type Data: Send + Sync;

    fn dim(&self) -> usize;

    fn logcl(&self, theta: &[f64], data: &Self::Data) -> f64;

    fn closed_form_score(&self, _theta: &[f64], _data: &Self::Data) -> Option<Vec<f64>> {
        None
    }

    /// ∂ score / ∂θᵀ, when available analytically.
    fn closed_form_score_jacobian(&self, _theta: &[f64], _data: &Self::Data) -> Option<Matrix> {
        None
    }

    fn has_closed_form_score(&self) -> bool {
        false
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        theta.iter().all(|v| v.is_finite())
    }
}

/// Relative finite-difference step with an absolute floor.
pub fn fd_step(x: f64, rel: f64) -> f64 {
    rel.max(rel * x.abs())
}

const SCORE_STEP: f64 = 1e-5;

/// Central-difference gradient of `logcl`.
pub fn fd_score<C: CompositeLikelihood + ?Sized>(
    cl: &C,
    theta: &[f64],
    data: &C::Data,
) -> Result<Vec<f64>> {
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        let h = fd_step(theta[j], SCORE_STEP);
        x[j] = theta[j] + h;
        let up = cl.logcl(&x, data);
        x[j] = theta[j] - h;
        let down = cl.logcl(&x, data);
        x[j] = theta[j];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Evaluation {
                coordinate: j,
                theta: theta.to_vec(),
            });
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// cℓ_θ(θ; y): the closed form when the likelihood provides one, central
/// differences with step `max(1e-5, 1e-5·|θ_j|)` otherwise.
pub fn composite_score<C: CompositeLikelihood + ?Sized>(
    cl: &C,
    theta: &[f64],
    data: &C::Data,
) -> Result<Vec<f64>> {
    if let Some(s) = cl.closed_form_score(theta, data) {
        if s.iter().all(|v| v.is_finite()) {
            return Ok(s);
        }
        let coordinate = s.iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::Evaluation {
            coordinate,
            theta: theta.to_vec(),
        });
    }
    fd_score(cl, theta, data)
}

/// Jacobian of the score, `J[i][j] = ∂s_i/∂θ_j`. Analytic when available,
/// otherwise central differences of [`composite_score`]; the step is larger
/// when the score itself is a finite difference.
pub fn score_jacobian<C: CompositeLikelihood + ?Sized>(
    cl: &C,
    theta: &[f64],
    data: &C::Data,
) -> Result<Matrix> {
    if let Some(j) = cl.closed_form_score_jacobian(theta, data) {
        return Ok(j);
    }
    let rel = if cl.has_closed_form_score() { 1e-5 } else { 1e-4 };
    let d = theta.len();
    let mut jac = Matrix::zeros(d, d);
    let mut x = theta.to_vec();
    for j in 0..d {
        let h = fd_step(theta[j], rel);
        x[j] = theta[j] + h;
        let up = composite_score(cl, &x, data)?;
        x[j] = theta[j] - h;
        let down = composite_score(cl, &x, data)?;
        x[j] = theta[j];
        for i in 0..d {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// A composite likelihood defined by a closure over parameters alone; handy
/// for analytic test objectives.
pub struct FnLikelihood<F> {
    dim: usize,
    f: F,
}

impl<F> FnLikelihood<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnLikelihood { dim, f }
    }
}

impl<F> CompositeLikelihood for FnLikelihood<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    type Data = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn logcl(&self, theta: &[f64], _data: &()) -> f64 {
        (self.f)(theta)
    }
}
