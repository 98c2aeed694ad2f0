//! Normal parabola: y_i ~ N(θ, θ²), θ > 0.
//!
//! A curved exponential family with two-dimensional minimal sufficient
//! statistic t(y) = (Σy, Σy²) and a one-dimensional parameter, so the
//! rescaled score η(y; θ̂_obs) = θ̂_obs ℓ_θ(θ̂_obs; y)/√(3n) is a genuine
//! dimension reduction.

use rand_distr::{Distribution, StandardNormal};

use super::Model;
use crate::diagnostics::DensityTable;
use crate::error::{Error, Result};
use crate::estimating::CompositeLikelihood;
use crate::numkernel::{Generator, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct NpData {
    pub y: Vec<f64>,
    pub sum: f64,
    pub sum_sq: f64,
}

impl NpData {
    pub fn new(y: Vec<f64>) -> Self {
        let sum = y.iter().sum();
        let sum_sq = y.iter().map(|v| v * v).sum();
        NpData { y, sum, sum_sq }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// t(y) = (Σy, Σy²).
    pub fn t(&self) -> Vec<f64> {
        vec![self.sum, self.sum_sq]
    }

    /// t₁(y) = (ȳ, s), sample mean and standard deviation (n − 1 divisor).
    pub fn t1(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq - n * mean * mean) / (n - 1.0);
        vec![mean, var.max(0.0).sqrt()]
    }
}

#[derive(Clone, Debug)]
pub struct NormalParabola {
    pub n: usize,
    pub prior_upper: f64,
}

impl Default for NormalParabola {
    fn default() -> Self {
        NormalParabola {
            n: 50,
            prior_upper: 15.0,
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("normal parabola requires θ > 0, got {theta}")))
    }
}

impl NormalParabola {
    pub fn new(n: usize, prior_upper: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("normal parabola needs n ≥ 2".into()));
        }
        if !(prior_upper > 0.0) {
            return Err(Error::InvalidInput("prior upper bound must be positive".into()));
        }
        Ok(NormalParabola { n, prior_upper })
    }

    /// ℓ(θ) = Σy/θ − Σy²/(2θ²) − n log θ.
    pub fn loglik(&self, theta: f64, y: &NpData) -> Result<f64> {
        check_theta(theta)?;
        Ok(y.sum / theta - y.sum_sq / (2.0 * theta * theta) - y.n() as f64 * theta.ln())
    }

    /// ℓ_θ = −Σy/θ² + Σy²/θ³ − n/θ.
    pub fn score(&self, theta: f64, y: &NpData) -> Result<f64> {
        check_theta(theta)?;
        Ok(-y.sum / theta.powi(2) + y.sum_sq / theta.powi(3) - y.n() as f64 / theta)
    }

    /// Expected information 3n/θ².
    pub fn info(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(3.0 * self.n as f64 / (theta * theta))
    }

    fn score_derivative(theta: f64, y: &NpData) -> f64 {
        2.0 * y.sum / theta.powi(3) - 3.0 * y.sum_sq / theta.powi(4) + y.n() as f64 / theta.powi(2)
    }

    /// Positive root of nθ² + (Σy)θ − Σy² = 0.
    pub fn mle(y: &NpData) -> f64 {
        let n = y.n() as f64;
        (-y.sum + (y.sum * y.sum + 4.0 * n * y.sum_sq).sqrt()) / (2.0 * n)
    }

    /// η(y; θ₀) = θ₀ ℓ_θ(θ₀; y) / √(3n).
    pub fn eta(&self, theta0: f64, y: &NpData) -> Result<f64> {
        Ok(self.score(theta0, y)? / self.info(theta0)?.sqrt())
    }

    /// Exact posterior under the uniform(0, prior_upper) prior on a uniform
    /// grid of `grid_size` points spanning [0, prior_upper] inclusive,
    /// normalized by the trapezoid rule. The density is 0 at θ = 0.
    pub fn exact_posterior(&self, y: &NpData, grid_size: usize) -> Result<DensityTable> {
        if grid_size < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 points".into()));
        }
        let step = self.prior_upper / (grid_size - 1) as f64;
        let logs: Vec<f64> = (0..grid_size)
            .map(|i| {
                let t = i as f64 * step;
                if t > 0.0 {
                    self.loglik(t, y).unwrap_or(f64::NEG_INFINITY)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        DensityTable::from_log_density(0.0, step, &logs)
    }

    pub fn simulate_data(&self, theta: f64, rng: &mut Generator) -> Result<NpData> {
        check_theta(theta)?;
        let y = (0..self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                theta + theta * z
            })
            .collect();
        Ok(NpData::new(y))
    }
}

impl CompositeLikelihood for NormalParabola {
    type Data = NpData;

    fn dim(&self) -> usize {
        1
    }

    fn logcl(&self, theta: &[f64], data: &NpData) -> f64 {
        self.loglik(theta[0], data).unwrap_or(f64::NEG_INFINITY)
    }

    fn closed_form_score(&self, theta: &[f64], data: &NpData) -> Option<Vec<f64>> {
        self.score(theta[0], data).ok().map(|s| vec![s])
    }

    fn closed_form_score_jacobian(&self, theta: &[f64], data: &NpData) -> Option<Matrix> {
        check_theta(theta[0]).ok()?;
        Some(Matrix::diag(&[Self::score_derivative(theta[0], data)]))
    }

    fn has_closed_form_score(&self) -> bool {
        true
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0] > 0.0 && theta[0].is_finite()
    }
}

impl Model for NormalParabola {
    fn name(&self) -> &'static str {
        "normal-parabola"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        if theta[0] > 0.0 && theta[0] < self.prior_upper {
            -self.prior_upper.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample_prior(&self, rng: &mut Generator) -> Option<Vec<f64>> {
        let u = crate::numkernel::rng::open_unit(rng);
        Some(vec![u * self.prior_upper])
    }

    fn simulate(&self, theta: &[f64], rng: &mut Generator) -> Result<NpData> {
        self.simulate_data(theta[0], rng)
    }

    fn full_loglik(&self, theta: &[f64], data: &NpData) -> Option<f64> {
        self.loglik(theta[0], data).ok()
    }

    fn has_full_likelihood(&self) -> bool {
        true
    }

    fn initial_estimate(&self, data: &NpData) -> Vec<f64> {
        vec![Self::mle(data)]
    }
}

/// Alternative parameterizations ψ = ψ(θ) of the normal parabola, each with
/// its own analytic log-likelihood derivative and expected information.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parameterization {
    Theta,
    /// ψ = log θ
    LogTheta,
    /// ψ = θ²
    ThetaSquared,
}

impl Parameterization {
    pub fn from_theta(self, theta: f64) -> f64 {
        match self {
            Parameterization::Theta => theta,
            Parameterization::LogTheta => theta.ln(),
            Parameterization::ThetaSquared => theta * theta,
        }
    }

    /// ∂ℓ/∂ψ written directly in ψ.
    pub fn score(self, psi: f64, y: &NpData) -> f64 {
        let (s1, s2, n) = (y.sum, y.sum_sq, y.n() as f64);
        match self {
            Parameterization::Theta => -s1 / psi.powi(2) + s2 / psi.powi(3) - n / psi,
            Parameterization::LogTheta => -(-psi).exp() * s1 + (-2.0 * psi).exp() * s2 - n,
            Parameterization::ThetaSquared => {
                -0.5 * psi.powf(-1.5) * s1 + s2 / (2.0 * psi * psi) - n / (2.0 * psi)
            }
        }
    }

    /// Expected information in ψ for a sample of size `n`.
    pub fn info(self, psi: f64, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Parameterization::Theta => 3.0 * n / (psi * psi),
            Parameterization::LogTheta => 3.0 * n,
            Parameterization::ThetaSquared => 0.75 * n / (psi * psi),
        }
    }

    /// Rescaled score at ψ₀: ℓ_ψ(ψ₀; y) / √i(ψ₀).
    pub fn eta(self, psi0: f64, y: &NpData) -> f64 {
        self.score(psi0, y) / self.info(psi0, y.n()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn information_at_five() {
        let m = NormalParabola::new(50, 15.0).unwrap();
        assert_eq!(m.info(5.0).unwrap(), 6.0);
    }

    #[test]
    fn mle_of_symmetric_pair() {
        let y = NpData::new(vec![1.0, -1.0]);
        let th = NormalParabola::mle(&y);
        assert!((th - 1.0).abs() < 1e-15);
        let m = NormalParabola::new(2, 15.0).unwrap();
        assert!(m.score(th, &y).unwrap().abs() < 1e-12);
        // η at θ̂ = 1 on y' = (2, 0): score −2 + 4 − 2 = 0
        let y2 = NpData::new(vec![2.0, 0.0]);
        assert_eq!(m.score(1.0, &y2).unwrap(), 0.0);
        assert_eq!(m.eta(1.0, &y2).unwrap(), 0.0);
    }

    #[test]
    fn non_positive_theta_is_domain_error() {
        let m = NormalParabola::default();
        let y = NpData::new(vec![1.0, 2.0]);
        assert!(matches!(m.loglik(0.0, &y), Err(Error::Domain(_))));
        assert!(m.score(-1.0, &y).is_err());
    }

    #[test]
    fn t1_is_mean_and_sd() {
        let y = NpData::new(vec![1.0, 2.0, 3.0]);
        let t1 = y.t1();
        assert!((t1[0] - 2.0).abs() < 1e-15);
        assert!((t1[1] - 1.0).abs() < 1e-15);
    }
}
