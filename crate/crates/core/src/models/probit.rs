//! Multivariate probit with exchangeable latent correlation.
//!
//! S_ih = x_ih β + σ U_i + ε_ih, Y_ih = 1{S_ih > 0}, so that the standardized
//! latent margins have mean γ_ih = x_ih β/√(1+σ²) and pairwise correlation
//! ρ = σ²/(1+σ²). θ = (β₀, β₁, log σ²) with x_ih β = β₀ + β₁ x_ih.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DataFn, Model};
use crate::error::{Error, Result};
use crate::estimating::CompositeLikelihood;
use crate::numkernel::{bvn_cdf, bvn_pdf, std_normal_cdf, std_normal_pdf, Generator, RngStream};

/// Cell probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// Binary responses, n units × q occasions, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbitData {
    pub q: usize,
    pub y: Vec<u8>,
}

impl ProbitData {
    pub fn new(q: usize, y: Vec<u8>) -> Result<Self> {
        if q == 0 || y.len() % q != 0 {
            return Err(Error::InvalidInput(format!(
                "{} responses do not fill rows of length {q}",
                y.len()
            )));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::InvalidInput("responses must be 0 or 1".into()));
        }
        Ok(ProbitData { q, y })
    }

    pub fn n(&self) -> usize {
        self.y.len() / self.q
    }

    pub fn unit(&self, i: usize) -> &[u8] {
        &self.y[i * self.q..(i + 1) * self.q]
    }

    /// Number of successes at each occasion.
    pub fn counts(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.q];
        for row in self.y.chunks(self.q) {
            for (ch, &v) in c.iter_mut().zip(row) {
                *ch += v as f64;
            }
        }
        c
    }
}

/// Σ_h |Σ_i (y_obs,ih − y_ih)|.
pub fn count_distance(a: &ProbitData, b: &ProbitData) -> f64 {
    a.counts()
        .iter()
        .zip(b.counts())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

#[derive(Debug)]
pub struct ProbitModel {
    q: usize,
    /// Covariate x_ih, n × q row-major.
    covariate: Vec<f64>,
    /// Units whose covariate is the same at all occasions.
    constant_rows: Vec<bool>,
    floor_hits: AtomicU64,
}

impl Clone for ProbitModel {
    fn clone(&self) -> Self {
        ProbitModel {
            q: self.q,
            covariate: self.covariate.clone(),
            constant_rows: self.constant_rows.clone(),
            floor_hits: AtomicU64::new(self.floor_hits.load(Ordering::Relaxed)),
        }
    }
}

/// Standardized mean, correlation and the derivatives needed by the score.
#[derive(Clone, Copy, Debug)]
struct Scale {
    b0: f64,
    b1: f64,
    inv_s: f64,
    rho: f64,
}

impl Scale {
    fn new(theta: &[f64]) -> Self {
        let ls = theta[2];
        // ρ = σ²/(1+σ²) = logistic(log σ²), 1/(1+σ²) = logistic(−log σ²)
        let rho = 1.0 / (1.0 + (-ls).exp());
        let inv_var = 1.0 / (1.0 + ls.exp());
        Scale {
            b0: theta[0],
            b1: theta[1],
            inv_s: inv_var.sqrt(),
            rho,
        }
    }

    fn gamma(&self, x: f64) -> f64 {
        (self.b0 + self.b1 * x) * self.inv_s
    }

    /// ∂γ/∂θ at covariate x.
    fn dgamma(&self, x: f64) -> [f64; 3] {
        let g = self.gamma(x);
        [self.inv_s, x * self.inv_s, -0.5 * g * self.rho]
    }

    fn drho(&self) -> f64 {
        self.rho * (1.0 - self.rho)
    }
}

/// log P(Y_h = a, Y_k = b) and its gradient w.r.t. (γ_h, γ_k, ρ), via the
/// orthant identity P = Φ₂(s_a γ_h, s_b γ_k; s_a s_b ρ) with s = 2y − 1.
fn cell(gh: f64, gk: f64, rho: f64, a: u8, b: u8, floored: &mut bool) -> Result<(f64, [f64; 3])> {
    let sa = if a == 1 { 1.0 } else { -1.0 };
    let sb = if b == 1 { 1.0 } else { -1.0 };
    let (u, v, r) = (sa * gh, sb * gk, sa * sb * rho);
    let mut p = bvn_cdf(u, v, r)?;
    if p < PROB_FLOOR {
        p = PROB_FLOOR;
        *floored = true;
    }
    let c = (1.0 - r * r).sqrt();
    let du = std_normal_pdf(u) * std_normal_cdf((v - r * u) / c);
    let dv = std_normal_pdf(v) * std_normal_cdf((u - r * v) / c);
    let dr = bvn_pdf(u, v, r);
    Ok((p.ln(), [sa * du / p, sb * dv / p, sa * sb * dr / p]))
}

/// Per-unit contribution of one (h, k) pair to the log-likelihood and score.
struct PairTerm {
    logp: f64,
    grad: [f64; 3],
}

impl ProbitModel {
    /// `covariate` holds one row of length q per unit.
    pub fn new(covariate: Vec<Vec<f64>>) -> Result<Self> {
        let n = covariate.len();
        if n == 0 {
            return Err(Error::InvalidInput("probit design has no units".into()));
        }
        let q = covariate[0].len();
        if q < 2 {
            return Err(Error::InvalidInput("probit model needs q ≥ 2 occasions".into()));
        }
        if let Some(i) = covariate.iter().position(|r| r.len() != q) {
            return Err(Error::InvalidInput(format!("design row {i} does not have length {q}")));
        }
        if covariate.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite covariate".into()));
        }
        let constant_rows = covariate
            .iter()
            .map(|r| r.iter().all(|&v| v == r[0]))
            .collect();
        Ok(ProbitModel {
            q,
            covariate: covariate.concat(),
            constant_rows,
            floor_hits: AtomicU64::new(0),
        })
    }

    /// One uniform(−1, 1) covariate per unit, constant across occasions.
    pub fn random_design(n: usize, q: usize, stream: RngStream) -> Result<Self> {
        let mut rng = stream.generator();
        let rows = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                vec![x; q]
            })
            .collect();
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.covariate.len() / self.q
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn covariate(&self, i: usize) -> &[f64] {
        &self.covariate[i * self.q..(i + 1) * self.q]
    }

    /// Number of cell probabilities floored at [`PROB_FLOOR`] so far.
    pub fn floor_hits(&self) -> u64 {
        self.floor_hits.load(Ordering::Relaxed)
    }

    fn check(&self, y: &ProbitData) -> Result<()> {
        if y.q != self.q || y.n() != self.n() {
            return Err(Error::InvalidInput(format!(
                "data is {} × {}, design is {} × {}",
                y.n(),
                y.q,
                self.n(),
                self.q
            )));
        }
        Ok(())
    }

    fn pair_term(&self, sc: &Scale, xh: f64, xk: f64, a: u8, b: u8, want_grad: bool) -> Result<PairTerm> {
        let (gh, gk) = (sc.gamma(xh), sc.gamma(xk));
        let mut floored = false;
        let (logp, g) = cell(gh, gk, sc.rho, a, b, &mut floored)?;
        if floored {
            self.floor_hits.fetch_add(1, Ordering::Relaxed);
        }
        let mut grad = [0.0; 3];
        if want_grad {
            let (dh, dk) = (sc.dgamma(xh), sc.dgamma(xk));
            let dr = sc.drho();
            for j in 0..3 {
                grad[j] = g[0] * dh[j] + g[1] * dk[j];
            }
            grad[2] += g[2] * dr;
        }
        Ok(PairTerm { logp, grad })
    }

    /// Pairwise log-likelihood and (optionally) its score for one unit.
    fn unit_terms(
        &self,
        sc: &Scale,
        i: usize,
        yi: &[u8],
        want_grad: bool,
        acc: &mut (f64, [f64; 3]),
    ) -> Result<()> {
        let x = self.covariate(i);
        let q = self.q;
        if self.constant_rows[i] {
            // every pair shares γ; only the success count matters
            let m = yi.iter().filter(|&&v| v == 1).count() as f64;
            let qf = q as f64;
            let weights = [
                (1u8, 1u8, m * (m - 1.0) / 2.0),
                (1, 0, m * (qf - m)),
                (0, 0, (qf - m) * (qf - m - 1.0) / 2.0),
            ];
            for (a, b, w) in weights {
                if w > 0.0 {
                    let t = self.pair_term(sc, x[0], x[0], a, b, want_grad)?;
                    acc.0 += w * t.logp;
                    for j in 0..3 {
                        acc.1[j] += w * t.grad[j];
                    }
                }
            }
            return Ok(());
        }
        for h in 0..q - 1 {
            for k in h + 1..q {
                let t = self.pair_term(sc, x[h], x[k], yi[h], yi[k], want_grad)?;
                acc.0 += t.logp;
                for j in 0..3 {
                    acc.1[j] += t.grad[j];
                }
            }
        }
        Ok(())
    }

    fn evaluate(&self, theta: &[f64], y: &ProbitData, want_grad: bool) -> Result<(f64, [f64; 3])> {
        self.check(y)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter {theta:?}")));
        }
        let sc = Scale::new(theta);
        let mut acc = (0.0, [0.0; 3]);
        for i in 0..self.n() {
            self.unit_terms(&sc, i, y.unit(i), want_grad, &mut acc)?;
        }
        Ok(acc)
    }

    pub fn pairwise_loglik(&self, theta: &[f64], y: &ProbitData) -> Result<f64> {
        Ok(self.evaluate(theta, y, false)?.0)
    }

    /// Analytic pairwise score.
    pub fn pairwise_score(&self, theta: &[f64], y: &ProbitData) -> Result<Vec<f64>> {
        Ok(self.evaluate(theta, y, true)?.1.to_vec())
    }

    /// Full log-likelihood; only available for q = 2, where the single pair
    /// is the whole joint distribution.
    pub fn full_loglik_q2(&self, theta: &[f64], y: &ProbitData) -> Result<f64> {
        if self.q != 2 {
            return Err(Error::InvalidInput(format!(
                "full probit likelihood implemented for q = 2 only, got q = {}",
                self.q
            )));
        }
        self.check(y)?;
        let sc = Scale::new(theta);
        let mut total = 0.0;
        for i in 0..self.n() {
            let x = self.covariate(i);
            let yi = y.unit(i);
            let sa = 2.0 * yi[0] as f64 - 1.0;
            let sb = 2.0 * yi[1] as f64 - 1.0;
            let p = bvn_cdf(sa * sc.gamma(x[0]), sb * sc.gamma(x[1]), sa * sb * sc.rho)?;
            total += p.max(PROB_FLOOR).ln();
        }
        Ok(total)
    }

    pub fn simulate_data(&self, theta: &[f64], rng: &mut Generator) -> ProbitData {
        let sigma = theta[2].exp().sqrt();
        let mut y = Vec::with_capacity(self.covariate.len());
        for i in 0..self.n() {
            let u: f64 = StandardNormal.sample(rng);
            for &x in self.covariate(i) {
                let e: f64 = StandardNormal.sample(rng);
                let s = theta[0] + theta[1] * x + sigma * u + e;
                y.push(u8::from(s > 0.0));
            }
        }
        ProbitData { q: self.q, y }
    }

    /// Independence-probit fit of β/√2 by Fisher scoring, rescaled to σ² = 1.
    fn marginal_start(&self, y: &ProbitData) -> Vec<f64> {
        let mut b = [0.0f64; 2];
        for _ in 0..25 {
            let mut grad = [0.0; 2];
            let mut info = [[0.0; 2]; 2];
            for (x, &v) in self.covariate.iter().zip(&y.y) {
                let eta = b[0] + b[1] * x;
                let p = std_normal_cdf(eta).clamp(1e-10, 1.0 - 1e-10);
                let d = std_normal_pdf(eta);
                let r = (v as f64 - p) * d / (p * (1.0 - p));
                let w = d * d / (p * (1.0 - p));
                let z = [1.0, *x];
                for a in 0..2 {
                    grad[a] += r * z[a];
                    for c in 0..2 {
                        info[a][c] += w * z[a] * z[c];
                    }
                }
            }
            let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
            if !(det.abs() > 1e-12) {
                break;
            }
            let step = [
                (info[1][1] * grad[0] - info[0][1] * grad[1]) / det,
                (info[0][0] * grad[1] - info[1][0] * grad[0]) / det,
            ];
            b[0] = (b[0] + step[0]).clamp(-5.0, 5.0);
            b[1] = (b[1] + step[1]).clamp(-5.0, 5.0);
            if step[0].abs().max(step[1].abs()) < 1e-10 {
                break;
            }
        }
        let s = std::f64::consts::SQRT_2;
        vec![b[0] * s, b[1] * s, 0.0]
    }
}

impl CompositeLikelihood for ProbitModel {
    type Data = ProbitData;

    fn dim(&self) -> usize {
        3
    }

    fn logcl(&self, theta: &[f64], y: &ProbitData) -> f64 {
        self.pairwise_loglik(theta, y).unwrap_or(f64::NEG_INFINITY)
    }

    fn closed_form_score(&self, theta: &[f64], y: &ProbitData) -> Option<Vec<f64>> {
        self.pairwise_score(theta, y).ok()
    }

    fn has_closed_form_score(&self) -> bool {
        true
    }
}

impl Model for ProbitModel {
    fn name(&self) -> &'static str {
        "probit"
    }

    fn param_names(&self) -> Vec<String> {
        vec!["beta0".into(), "beta1".into(), "log_sigma2".into()]
    }

    /// Independent N(0, 100) components.
    fn log_prior(&self, theta: &[f64]) -> f64 {
        -theta.iter().map(|v| v * v).sum::<f64>() / 200.0
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

    fn simulate(&self, theta: &[f64], rng: &mut Generator) -> Result<ProbitData> {
        Ok(self.simulate_data(theta, rng))
    }

    fn full_loglik(&self, theta: &[f64], y: &ProbitData) -> Option<f64> {
        self.full_loglik_q2(theta, y).ok()
    }

    fn has_full_likelihood(&self) -> bool {
        self.q == 2
    }

    fn initial_estimate(&self, y: &ProbitData) -> Vec<f64> {
        self.marginal_start(y)
    }

    /// Tabulates the score contribution of every (unit, pair, cell) at the
    /// fixed θ, so that each dataset costs only table lookups.
    fn score_evaluator<'a>(&'a self, theta: &[f64]) -> Result<DataFn<'a, ProbitData>> {
        let sc = Scale::new(theta);
        let q = self.q;
        let pairs = q * (q - 1) / 2;
        let mut table = Vec::with_capacity(self.n() * pairs * 4);
        for i in 0..self.n() {
            let x = self.covariate(i);
            for h in 0..q - 1 {
                for k in h + 1..q {
                    for cell in 0..4u8 {
                        let t = self.pair_term(&sc, x[h], x[k], cell >> 1, cell & 1, true)?;
                        table.push(t.grad);
                    }
                }
            }
        }
        let n = self.n();
        Ok(Box::new(move |y: &ProbitData| {
            if y.q != q || y.n() != n {
                return Err(Error::InvalidInput("dataset does not match the design".into()));
            }
            let mut s = [0.0; 3];
            let mut idx = 0;
            for i in 0..n {
                let yi = y.unit(i);
                for h in 0..q - 1 {
                    for k in h + 1..q {
                        let g = &table[idx + ((yi[h] << 1) | yi[k]) as usize];
                        s[0] += g[0];
                        s[1] += g[1];
                        s[2] += g[2];
                        idx += 4;
                    }
                }
            }
            Ok(s.to_vec())
        }))
    }
}
