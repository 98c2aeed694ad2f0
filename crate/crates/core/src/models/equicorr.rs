//! Equicorrelated multivariate normal: n independent clusters of size q with
//! common mean μ, variance σ² and correlation ρ between any two members.
//!
//! The working parameter is ω = (μ, τ, κ) with τ = log σ² and
//! κ = logit((ρ(q − 1) + 1)/q), which maps ρ ∈ (−1/(q−1), 1) onto ℝ.
//! Both the pairwise and the full likelihood depend on the data only through
//! (ȳ, SS_B, SS_W).

use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::Model;
use crate::error::{Error, Result};
use crate::estimating::CompositeLikelihood;
use crate::numkernel::{Generator, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquicorrData {
    pub n: usize,
    pub q: usize,
    pub ybar: f64,
    pub ss_b: f64,
    pub ss_w: f64,
}

impl EquicorrData {
    /// Sufficient statistics of an n × q array given as cluster rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("no clusters".into()));
        }
        let q = rows[0].len();
        if q < 2 {
            return Err(Error::InvalidInput("cluster size must be at least 2".into()));
        }
        let mut means = Vec::with_capacity(n);
        let mut ss_w = 0.0;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidInput(format!(
                    "cluster {i} has {} members, expected {q}",
                    row.len()
                )));
            }
            let m = row.iter().sum::<f64>() / q as f64;
            ss_w += row.iter().map(|v| (v - m).powi(2)).sum::<f64>();
            means.push(m);
        }
        let ybar = means.iter().sum::<f64>() / n as f64;
        let ss_b = means.iter().map(|m| (m - ybar).powi(2)).sum();
        Ok(EquicorrData {
            n,
            q,
            ybar,
            ss_b,
            ss_w,
        })
    }

    /// (ȳ, √SS_B, √SS_W).
    pub fn summary(&self) -> Vec<f64> {
        vec![self.ybar, self.ss_b.sqrt(), self.ss_w.sqrt()]
    }
}

/// (μ, σ², ρ) together with 1 − ρ and 1 + ρ computed without cancellation.
#[derive(Clone, Copy, Debug)]
pub struct Natural {
    pub mu: f64,
    pub sigma2: f64,
    pub rho: f64,
    one_minus: f64,
    one_plus: f64,
}

#[derive(Clone, Debug)]
pub struct EquicorrModel {
    pub n: usize,
    pub q: usize,
    /// Draw (ȳ, SS_B, SS_W) from their exact joint law instead of simulating
    /// all n·q observations.
    pub sufficient_simulation: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl EquicorrModel {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if n < 2 || q < 2 {
            return Err(Error::InvalidInput(format!(
                "equicorrelated model needs n ≥ 2 and q ≥ 2, got n = {n}, q = {q}"
            )));
        }
        Ok(EquicorrModel {
            n,
            q,
            sufficient_simulation: false,
        })
    }

    pub fn with_sufficient_simulation(mut self, on: bool) -> Self {
        self.sufficient_simulation = on;
        self
    }

    pub fn kappa_from_rho(&self, rho: f64) -> Result<f64> {
        let q = self.q as f64;
        if !(rho > -1.0 / (q - 1.0) && rho < 1.0) {
            return Err(Error::Domain(format!(
                "ρ = {rho} outside (−1/(q−1), 1) for q = {}",
                self.q
            )));
        }
        let p = (rho * (q - 1.0) + 1.0) / q;
        Ok((p / (1.0 - p)).ln())
    }

    /// ω = (μ, log σ², κ) from θ = (μ, σ², ρ).
    pub fn omega_from_natural(&self, mu: f64, sigma2: f64, rho: f64) -> Result<Vec<f64>> {
        if !(sigma2 > 0.0) {
            return Err(Error::Domain(format!("σ² = {sigma2} must be positive")));
        }
        Ok(vec![mu, sigma2.ln(), self.kappa_from_rho(rho)?])
    }

    pub fn natural(&self, omega: &[f64]) -> Natural {
        let q = self.q as f64;
        let p = sigmoid(omega[2]);
        let pc = sigmoid(-omega[2]);
        Natural {
            mu: omega[0],
            sigma2: omega[1].exp(),
            rho: (q * p - 1.0) / (q - 1.0),
            one_minus: q * pc / (q - 1.0),
            one_plus: (q * p + q - 2.0) / (q - 1.0),
        }
    }

    fn check(&self, y: &EquicorrData) -> Result<()> {
        if y.q != self.q {
            return Err(Error::Dimension {
                expected: self.q,
                found: y.q,
            });
        }
        Ok(())
    }

    /// Pairwise log-likelihood in (μ, σ², ρ), additive constants omitted.
    pub fn pairwise_loglik(&self, mu: f64, sigma2: f64, rho: f64, y: &EquicorrData) -> Result<f64> {
        self.check(y)?;
        if !(sigma2 > 0.0) || !(rho.abs() < 1.0) || rho <= -1.0 / (self.q as f64 - 1.0) {
            return Err(Error::Domain(format!("(σ², ρ) = ({sigma2}, {rho}) outside the support")));
        }
        Ok(self.pl_natural(
            &Natural {
                mu,
                sigma2,
                rho,
                one_minus: 1.0 - rho,
                one_plus: 1.0 + rho,
            },
            y,
        ))
    }

    fn pl_natural(&self, t: &Natural, y: &EquicorrData) -> f64 {
        let (n, q) = (y.n as f64, y.q as f64);
        let a = n * q * (q - 1.0) / 2.0;
        let one_m_r2 = t.one_minus * t.one_plus;
        let between = q * (q - 1.0) * (y.ss_b + n * (y.ybar - t.mu).powi(2));
        -a * t.sigma2.ln() - 0.5 * a * one_m_r2.ln()
            - (q - 1.0 + t.rho) * y.ss_w / (2.0 * t.sigma2 * one_m_r2)
            - between / (2.0 * t.sigma2 * t.one_plus)
    }

    /// Analytic pairwise score in (μ, σ², ρ).
    pub fn pairwise_score_natural(&self, t: &Natural, y: &EquicorrData) -> [f64; 3] {
        let (n, q) = (y.n as f64, y.q as f64);
        let a = n * q * (q - 1.0) / 2.0;
        let s2 = t.sigma2;
        let r = t.rho;
        let one_m_r2 = t.one_minus * t.one_plus;
        let dev = y.ybar - t.mu;
        let between = q * (q - 1.0) * (y.ss_b + n * dev * dev);
        let d_mu = n * q * (q - 1.0) * dev / (s2 * t.one_plus);
        let d_s2 = -a / s2
            + ((q - 1.0 + r) * y.ss_w / one_m_r2 + between / t.one_plus) / (2.0 * s2 * s2);
        let d_rho = a * r / one_m_r2
            - y.ss_w * (1.0 + r * r + 2.0 * r * (q - 1.0)) / (2.0 * s2 * one_m_r2 * one_m_r2)
            + between / (2.0 * s2 * t.one_plus * t.one_plus);
        [d_mu, d_s2, d_rho]
    }

    /// ∂(μ, σ², ρ)/∂(μ, τ, κ), which is diagonal.
    fn chain(&self, omega: &[f64]) -> [f64; 3] {
        let q = self.q as f64;
        let p = sigmoid(omega[2]);
        let pc = sigmoid(-omega[2]);
        [1.0, omega[1].exp(), q * p * pc / (q - 1.0)]
    }

    /// Pairwise score in ω.
    pub fn pairwise_score(&self, omega: &[f64], y: &EquicorrData) -> Result<Vec<f64>> {
        self.check(y)?;
        let s = self.pairwise_score_natural(&self.natural(omega), y);
        let c = self.chain(omega);
        Ok((0..3).map(|i| s[i] * c[i]).collect())
    }

    /// Full log-likelihood in ω, additive constants omitted. Σ has eigenvalue
    /// σ²(1 + (q−1)ρ) on the constant vector and σ²(1 − ρ) on its complement.
    pub fn full_loglik_omega(&self, omega: &[f64], y: &EquicorrData) -> f64 {
        let t = self.natural(omega);
        let (n, q) = (y.n as f64, y.q as f64);
        let lam1 = t.sigma2 * (1.0 + (q - 1.0) * t.rho);
        let lam2 = t.sigma2 * t.one_minus;
        -0.5 * n * (lam1.ln() + (q - 1.0) * lam2.ln())
            - q * (y.ss_b + n * (y.ybar - t.mu).powi(2)) / (2.0 * lam1)
            - y.ss_w / (2.0 * lam2)
    }

    /// Every observation: Y_ir = μ + σ(√ρ W_i + √(1−ρ) E_ir) for ρ ≥ 0, and the
    /// Cholesky factor of the full q × q correlation matrix otherwise.
    pub fn simulate_raw(&self, omega: &[f64], rng: &mut Generator) -> Result<Vec<Vec<f64>>> {
        let t = self.natural(omega);
        let sd = t.sigma2.sqrt();
        if t.rho >= 0.0 {
            let (a, b) = (t.rho.sqrt(), t.one_minus.sqrt());
            Ok((0..self.n)
                .map(|_| {
                    let w: f64 = StandardNormal.sample(rng);
                    (0..self.q)
                        .map(|_| {
                            let e: f64 = StandardNormal.sample(rng);
                            t.mu + sd * (a * w + b * e)
                        })
                        .collect()
                })
                .collect())
        } else {
            let corr = Matrix::from_fn(self.q, self.q, |r, s| if r == s { 1.0 } else { t.rho });
            let l = corr.cholesky()?;
            Ok((0..self.n)
                .map(|_| {
                    let z: Vec<f64> = (0..self.q).map(|_| StandardNormal.sample(rng)).collect();
                    l.matvec(&z).into_iter().map(|v| t.mu + sd * v).collect()
                })
                .collect())
        }
    }

    /// Exact joint law of the sufficient statistics: cluster means are i.i.d.
    /// N(μ, σ²(1 + (q−1)ρ)/q) and SS_W ~ σ²(1 − ρ) χ²_{n(q−1)}, independent.
    pub fn simulate_sufficient(&self, omega: &[f64], rng: &mut Generator) -> Result<EquicorrData> {
        let t = self.natural(omega);
        let (n, q) = (self.n as f64, self.q as f64);
        let sd_mean = (t.sigma2 * (1.0 + (q - 1.0) * t.rho) / q).sqrt();
        let means: Vec<f64> = (0..self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                t.mu + sd_mean * z
            })
            .collect();
        let ybar = means.iter().sum::<f64>() / n;
        let ss_b = means.iter().map(|m| (m - ybar).powi(2)).sum();
        let chi = ChiSquared::new(n * (q - 1.0))
            .map_err(|e| Error::InvalidInput(format!("chi-squared: {e}")))?;
        let ss_w = t.sigma2 * t.one_minus * chi.sample(rng);
        Ok(EquicorrData {
            n: self.n,
            q: self.q,
            ybar,
            ss_b,
            ss_w,
        })
    }

    /// Closed-form full-likelihood MLE mapped to ω; ρ is pulled slightly
    /// inside its range when the moment estimate lands on the boundary.
    pub fn mle(&self, y: &EquicorrData) -> Vec<f64> {
        let (n, q) = (y.n as f64, y.q as f64);
        let within = y.ss_w / (n * (q - 1.0));
        let between = q * y.ss_b / n;
        let sigma2 = ((between + (q - 1.0) * within) / q).max(1e-300);
        let lo = -1.0 / (q - 1.0);
        let rho = ((between - within) / (q * sigma2)).clamp(lo + 1e-6 * (1.0 - lo), 1.0 - 1e-6);
        vec![y.ybar, sigma2.ln(), self.kappa_from_rho(rho).unwrap_or(0.0)]
    }
}

impl CompositeLikelihood for EquicorrModel {
    type Data = EquicorrData;

    fn dim(&self) -> usize {
        3
    }

    fn logcl(&self, omega: &[f64], y: &EquicorrData) -> f64 {
        if self.check(y).is_err() {
            return f64::NAN;
        }
        self.pl_natural(&self.natural(omega), y)
    }

    fn closed_form_score(&self, omega: &[f64], y: &EquicorrData) -> Option<Vec<f64>> {
        self.pairwise_score(omega, y).ok()
    }

    fn has_closed_form_score(&self) -> bool {
        true
    }
}

impl Model for EquicorrModel {
    fn name(&self) -> &'static str {
        "equicorr"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "tau".into(), "kappa".into()]
    }

    /// Independent N(0, 100) on μ, τ and κ.
    fn log_prior(&self, omega: &[f64]) -> f64 {
        -omega.iter().map(|v| v * v).sum::<f64>() / 200.0
    }

    fn sample_prior(&self, rng: &mut Generator) -> Option<Vec<f64>> {
        Some(
            (0..3)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    10.0 * z
                })
                .collect(),
        )
    }

    fn simulate(&self, omega: &[f64], rng: &mut Generator) -> Result<EquicorrData> {
        if self.sufficient_simulation {
            self.simulate_sufficient(omega, rng)
        } else {
            EquicorrData::from_rows(&self.simulate_raw(omega, rng)?)
        }
    }

    fn full_loglik(&self, omega: &[f64], y: &EquicorrData) -> Option<f64> {
        Some(self.full_loglik_omega(omega, y))
    }

    fn has_full_likelihood(&self) -> bool {
        true
    }

    fn initial_estimate(&self, y: &EquicorrData) -> Vec<f64> {
        self.mle(y)
    }
}
