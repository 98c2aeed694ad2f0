//! Smith's Gaussian-storm max-stable process with GEV margins whose location
//! and scale are linear response surfaces in the station coordinates.
//!
//! θ = (σ₁₁, σ₁₂, σ₂₂, β^μ₀, β^μ₁, β^μ₂, β^λ₀, β^λ₁, β^λ₂, ξ), with
//! μ_k = β^μ·(1, x_k, y_k), λ_k = β^λ·(1, x_k, y_k) and a common shape ξ.

use rand_distr::{Distribution, Exp1};

use super::Model;
use crate::error::{Error, Result};
use crate::estimating::CompositeLikelihood;
use crate::numkernel::rng::open_unit;
use crate::numkernel::{std_normal_cdf, std_normal_pdf, std_normal_quantile, Generator};

pub const DIM: usize = 10;

/// Below this |ξ| the GEV transform uses its Gumbel limit.
pub const GUMBEL_XI: f64 = 1e-8;

/// Symmetric 2 × 2 covariance (σ₁₁, σ₁₂, σ₂₂).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cov2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl Cov2 {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Result<Self> {
        let c = Cov2 { s11, s12, s22 };
        if !(s11 > 0.0 && s22 > 0.0 && c.det() > 0.0) || !s12.is_finite() {
            return Err(Error::Domain(format!(
                "Σ = [[{s11}, {s12}], [{s12}, {s22}]] is not positive definite"
            )));
        }
        Ok(c)
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    /// a(h) = (hᵀ Σ⁻¹ h)^{1/2}.
    pub fn mahalanobis(&self, h: [f64; 2]) -> f64 {
        let q = (self.s22 * h[0] * h[0] - 2.0 * self.s12 * h[0] * h[1] + self.s11 * h[1] * h[1])
            / self.det();
        q.max(0.0).sqrt()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let m = 0.5 * (self.s11 + self.s22);
        let r = (0.25 * (self.s11 - self.s22).powi(2) + self.s12 * self.s12).sqrt();
        m + r
    }
}

/// δ(h) = 2Φ(a(h)/2).
pub fn extremal_coefficient(h: [f64; 2], sigma: &Cov2) -> f64 {
    2.0 * std_normal_cdf(0.5 * sigma.mahalanobis(h))
}

/// P{Z(t_k) ≤ z_k, Z(t_l) ≤ z_l} for unit-Fréchet margins, h = t_l − t_k.
pub fn bivariate_cdf(z_k: f64, z_l: f64, h: [f64; 2], sigma: &Cov2) -> Result<f64> {
    if !(z_k > 0.0 && z_l > 0.0) {
        return Err(Error::Domain(format!("Fréchet levels must be positive, got ({z_k}, {z_l})")));
    }
    let a = sigma.mahalanobis(h);
    if !(a > 0.0) {
        return Err(Error::Domain("a(h) = 0: coincident stations".into()));
    }
    if z_l.is_infinite() {
        return Ok((-1.0 / z_k).exp());
    }
    if z_k.is_infinite() {
        return Ok((-1.0 / z_l).exp());
    }
    let w = 0.5 * a + (z_l / z_k).ln() / a;
    let v = a - w;
    Ok((-std_normal_cdf(w) / z_k - std_normal_cdf(v) / z_l).exp())
}

/// log of the bivariate density of (Z_k, Z_l) at unit-Fréchet (z_k, z_l):
/// A + log(BC + D) with −A the exponent measure.
pub fn log_pair_density(z_k: f64, z_l: f64, a: f64) -> f64 {
    let lr = (z_l / z_k).ln();
    let w = 0.5 * a + lr / a;
    let v = a - w;
    let (pw, pv) = (std_normal_cdf(w), std_normal_cdf(v));
    let (dw, dv) = (std_normal_pdf(w), std_normal_pdf(v));
    let big_a = -pw / z_k - pv / z_l;
    let zkl = z_k * z_l;
    let b = pw / (z_k * z_k) + dw / (a * z_k * z_k) - dv / (a * zkl);
    let c = pv / (z_l * z_l) + dv / (a * z_l * z_l) - dw / (a * zkl);
    let d = v * dw / (a * a * z_k * zkl) + w * dv / (a * a * zkl * z_l);
    let inner = b * c + d;
    if inner > 0.0 {
        big_a + inner.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Value and gradient in (log z_k, log z_l, a).
#[derive(Clone, Copy)]
struct D3 {
    v: f64,
    d: [f64; 3],
}

impl D3 {
    fn map(self, v: f64, dv: f64) -> D3 {
        D3 {
            v,
            d: [self.d[0] * dv, self.d[1] * dv, self.d[2] * dv],
        }
    }

    fn ln(self) -> D3 {
        self.map(self.v.ln(), 1.0 / self.v)
    }

    fn cdf(self) -> D3 {
        self.map(std_normal_cdf(self.v), std_normal_pdf(self.v))
    }

    fn pdf(self) -> D3 {
        let p = std_normal_pdf(self.v);
        self.map(p, -self.v * p)
    }
}

impl std::ops::Add for D3 {
    type Output = D3;
    fn add(self, o: D3) -> D3 {
        D3 {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl std::ops::Sub for D3 {
    type Output = D3;
    fn sub(self, o: D3) -> D3 {
        self + o * -1.0
    }
}

impl std::ops::Mul for D3 {
    type Output = D3;
    fn mul(self, o: D3) -> D3 {
        D3 {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl std::ops::Mul<f64> for D3 {
    type Output = D3;
    fn mul(self, c: f64) -> D3 {
        self.map(self.v * c, c)
    }
}

impl std::ops::Div for D3 {
    type Output = D3;
    fn div(self, o: D3) -> D3 {
        let inv = o.map(1.0 / o.v, -1.0 / (o.v * o.v));
        self * inv
    }
}

/// [`log_pair_density`] with its gradient in (log z_k, log z_l, a).
pub fn log_pair_density_grad(z_k: f64, z_l: f64, a: f64) -> (f64, [f64; 3]) {
    let zk = D3 { v: z_k, d: [z_k, 0.0, 0.0] };
    let zl = D3 { v: z_l, d: [0.0, z_l, 0.0] };
    let a = D3 { v: a, d: [0.0, 0.0, 1.0] };
    let lr = D3 {
        v: (z_l / z_k).ln(),
        d: [-1.0, 1.0, 0.0],
    };
    let w = a * 0.5 + lr / a;
    let v = a - w;
    let (pw, pv, dw, dv) = (w.cdf(), v.cdf(), w.pdf(), v.pdf());
    let big_a = (pw / zk + pv / zl) * -1.0;
    let zkl = zk * zl;
    let b = pw / (zk * zk) + dw / (a * zk * zk) - dv / (a * zkl);
    let c = pv / (zl * zl) + dv / (a * zl * zl) - dw / (a * zkl);
    let d = v * dw / (a * a * zk * zkl) + w * dv / (a * a * zkl * zl);
    let inner = b * c + d;
    if !(inner.v > 0.0) {
        return (f64::NEG_INFINITY, [f64::NAN; 3]);
    }
    let out = big_a + inner.ln();
    (out.v, out.d)
}

/// ∂(log z, log Jacobian)/∂(μ, λ, ξ) of [`gev_to_frechet`] at a point
/// inside the support.
fn gev_to_frechet_grad(y: f64, mu: f64, lambda: f64, xi: f64) -> ([f64; 3], [f64; 3]) {
    let s = (y - mu) / lambda;
    if xi.abs() < GUMBEL_XI {
        return (
            [-1.0 / lambda, -s / lambda, -0.5 * s * s],
            [-1.0 / lambda, -(s + 1.0) / lambda, -0.5 * s * s - s],
        );
    }
    let t = 1.0 + xi * s;
    let lt = t.ln();
    let du = [
        -1.0 / (lambda * t),
        -s / (lambda * t),
        -lt / (xi * xi) + s / (xi * t),
    ];
    let dj = [
        -(1.0 - xi) / (lambda * t),
        -(1.0 - xi) * s / (lambda * t) - 1.0 / lambda,
        -lt / (xi * xi) + (1.0 / xi - 1.0) * s / t,
    ];
    (du, dj)
}

/// y = μ + λ(z^ξ − 1)/ξ, or μ + λ log z in the Gumbel limit.
pub fn frechet_to_gev(z: f64, mu: f64, lambda: f64, xi: f64) -> f64 {
    if xi.abs() < GUMBEL_XI {
        mu + lambda * z.ln()
    } else {
        mu + lambda * (z.powf(xi) - 1.0) / xi
    }
}

/// (log z, log |dz/dy|) for a GEV observation, `None` outside the support.
pub fn gev_to_frechet(y: f64, mu: f64, lambda: f64, xi: f64) -> Option<(f64, f64)> {
    let s = (y - mu) / lambda;
    if xi.abs() < GUMBEL_XI {
        return Some((s, s - lambda.ln()));
    }
    let t = 1.0 + xi * s;
    if !(t > 0.0) {
        return None;
    }
    let lt = t.ln();
    Some((lt / xi, (1.0 / xi - 1.0) * lt - lambda.ln()))
}

/// Annual maxima, n years × q stations, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SmithData {
    pub q: usize,
    pub y: Vec<f64>,
}

impl SmithData {
    pub fn new(q: usize, y: Vec<f64>) -> Result<Self> {
        if q == 0 || y.len() % q != 0 {
            return Err(Error::InvalidInput(format!("{} values do not fill rows of {q}", y.len())));
        }
        Ok(SmithData { q, y })
    }

    pub fn n(&self) -> usize {
        self.y.len() / self.q
    }

    pub fn year(&self, i: usize) -> &[f64] {
        &self.y[i * self.q..(i + 1) * self.q]
    }

    pub fn station(&self, k: usize) -> Vec<f64> {
        self.y.iter().skip(k).step_by(self.q).copied().collect()
    }
}

#[derive(Clone, Debug)]
pub struct SmithModel {
    coords: Vec<[f64; 2]>,
    pub n_years: usize,
}

/// Parameter vector split into its blocks.
struct Parts {
    sigma: Cov2,
    beta_mu: [f64; 3],
    beta_lambda: [f64; 3],
    xi: f64,
}

fn parts(theta: &[f64]) -> Result<Parts> {
    if theta.len() != DIM {
        return Err(Error::Dimension {
            expected: DIM,
            found: theta.len(),
        });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite parameter {theta:?}")));
    }
    Ok(Parts {
        sigma: Cov2::new(theta[0], theta[1], theta[2])?,
        beta_mu: [theta[3], theta[4], theta[5]],
        beta_lambda: [theta[6], theta[7], theta[8]],
        xi: theta[9],
    })
}

impl SmithModel {
    pub fn new(coords: Vec<[f64; 2]>, n_years: usize) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("Smith model needs at least two stations".into()));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite station coordinate".into()));
        }
        for k in 0..coords.len() {
            for l in k + 1..coords.len() {
                if coords[k] == coords[l] {
                    return Err(Error::InvalidInput(format!(
                        "stations {k} and {l} share coordinates {:?}: a(h) = 0",
                        coords[k]
                    )));
                }
            }
        }
        if n_years == 0 {
            return Err(Error::InvalidInput("need at least one year".into()));
        }
        Ok(SmithModel { coords, n_years })
    }

    /// Regular `side × side` grid with the given spacing, origin at (0, 0).
    pub fn grid(side: usize, spacing: f64, n_years: usize) -> Result<Self> {
        let coords = (0..side * side)
            .map(|i| [(i % side) as f64 * spacing, (i / side) as f64 * spacing])
            .collect();
        Self::new(coords, n_years)
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn q(&self) -> usize {
        self.coords.len()
    }

    fn surface(&self, beta: &[f64; 3], k: usize) -> f64 {
        beta[0] + beta[1] * self.coords[k][0] + beta[2] * self.coords[k][1]
    }

    /// (μ_k, λ_k) at every station.
    pub fn margins(&self, theta: &[f64]) -> Result<Vec<(f64, f64)>> {
        let p = parts(theta)?;
        (0..self.q())
            .map(|k| {
                let lam = self.surface(&p.beta_lambda, k);
                if lam > 0.0 {
                    Ok((self.surface(&p.beta_mu, k), lam))
                } else {
                    Err(Error::Domain(format!("scale λ = {lam} ≤ 0 at station {k}")))
                }
            })
            .collect()
    }

    /// Pairwise log-likelihood over all years and station pairs k < l.
    /// Observations outside the GEV support give −∞.
    pub fn pairwise_loglik(&self, theta: &[f64], data: &SmithData) -> Result<f64> {
        if data.q != self.q() {
            return Err(Error::Dimension {
                expected: self.q(),
                found: data.q,
            });
        }
        let p = parts(theta)?;
        let margins = self.margins(theta)?;
        let q = self.q();
        let n = data.n();
        // unit-Fréchet levels and log-Jacobians, station-major
        let mut z = vec![0.0; n * q];
        let mut jac = 0.0;
        for k in 0..q {
            let (mu, lam) = margins[k];
            for i in 0..n {
                match gev_to_frechet(data.y[i * q + k], mu, lam, p.xi) {
                    Some((lz, lj)) => {
                        z[k * n + i] = lz.exp();
                        jac += lj;
                    }
                    None => return Ok(f64::NEG_INFINITY),
                }
            }
        }
        // each station's Jacobian enters every pair it belongs to
        let mut total = (q - 1) as f64 * jac;
        for k in 0..q - 1 {
            for l in k + 1..q {
                let h = [
                    self.coords[l][0] - self.coords[k][0],
                    self.coords[l][1] - self.coords[k][1],
                ];
                let a = p.sigma.mahalanobis(h);
                let (zk, zl) = (&z[k * n..(k + 1) * n], &z[l * n..(l + 1) * n]);
                for i in 0..n {
                    total += log_pair_density(zk[i], zl[i], a);
                }
            }
        }
        Ok(total)
    }

    /// Analytic gradient of [`Self::pairwise_loglik`]; `Err` when θ is
    /// invalid or an observation lies outside the GEV support.
    pub fn pairwise_score(&self, theta: &[f64], data: &SmithData) -> Result<Vec<f64>> {
        if data.q != self.q() {
            return Err(Error::Dimension {
                expected: self.q(),
                found: data.q,
            });
        }
        let p = parts(theta)?;
        let margins = self.margins(theta)?;
        let q = self.q();
        let n = data.n();
        let outside = || Error::Domain(format!("observation outside the GEV support at {theta:?}"));
        let mut z = vec![0.0; n * q];
        let mut du = vec![[0.0; 3]; n * q];
        let mut grad = vec![0.0; DIM];
        // ∂/∂(μ_k, λ_k, ξ) of every Jacobian term, weighted by the q − 1 pairs
        let mut jac_margin = vec![[0.0; 3]; q];
        for k in 0..q {
            let (mu, lam) = margins[k];
            for i in 0..n {
                let y = data.y[i * q + k];
                let (lz, _) = gev_to_frechet(y, mu, lam, p.xi).ok_or_else(outside)?;
                let (u, j) = gev_to_frechet_grad(y, mu, lam, p.xi);
                z[k * n + i] = lz.exp();
                du[k * n + i] = u;
                for c in 0..3 {
                    jac_margin[k][c] += (q - 1) as f64 * j[c];
                }
            }
        }
        // accumulated ∂/∂ log z per station-year and ∂/∂a per pair
        let mut g_u = vec![0.0; n * q];
        let det = p.sigma.det();
        for k in 0..q - 1 {
            for l in k + 1..q {
                let h = [
                    self.coords[l][0] - self.coords[k][0],
                    self.coords[l][1] - self.coords[k][1],
                ];
                let a = p.sigma.mahalanobis(h);
                let mut g_a = 0.0;
                for i in 0..n {
                    let (v, g) = log_pair_density_grad(z[k * n + i], z[l * n + i], a);
                    if !v.is_finite() {
                        return Err(Error::Evaluation {
                            coordinate: 0,
                            theta: theta.to_vec(),
                        });
                    }
                    g_u[k * n + i] += g[0];
                    g_u[l * n + i] += g[1];
                    g_a += g[2];
                }
                // a² = Q = (σ₂₂h₁² − 2σ₁₂h₁h₂ + σ₁₁h₂²)/det
                let qf = a * a;
                let dq = [
                    (h[1] * h[1] - qf * p.sigma.s22) / det,
                    (-2.0 * h[0] * h[1] + 2.0 * qf * p.sigma.s12) / det,
                    (h[0] * h[0] - qf * p.sigma.s11) / det,
                ];
                for c in 0..3 {
                    grad[c] += g_a * dq[c] / (2.0 * a);
                }
            }
        }
        for k in 0..q {
            let x = [1.0, self.coords[k][0], self.coords[k][1]];
            let mut gm = jac_margin[k];
            for i in 0..n {
                for c in 0..3 {
                    gm[c] += g_u[k * n + i] * du[k * n + i][c];
                }
            }
            for r in 0..3 {
                grad[3 + r] += gm[0] * x[r];
                grad[6 + r] += gm[1] * x[r];
            }
            grad[9] += gm[2];
        }
        Ok(grad)
    }

    /// One unit-Fréchet field at the stations. Storms arrive in decreasing
    /// order of ζ = |W|/Γ_j; once ζ·φ_max falls below the smallest running
    /// maximum no later storm can change any station.
    pub fn simulate_frechet(&self, sigma: &Cov2, rng: &mut Generator) -> Vec<f64> {
        let pad = 4.0 * sigma.max_eigenvalue().sqrt();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for c in &self.coords {
            x0 = x0.min(c[0]);
            x1 = x1.max(c[0]);
            y0 = y0.min(c[1]);
            y1 = y1.max(c[1]);
        }
        let (x0, y0) = (x0 - pad, y0 - pad);
        let (wx, wy) = (x1 + pad - x0, y1 + pad - y0);
        let area = wx * wy;
        let det = sigma.det();
        let phi_max = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
        let (i11, i12, i22) = (sigma.s22 / det, -sigma.s12 / det, sigma.s11 / det);
        let mut z = vec![0.0f64; self.q()];
        let mut gamma = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            let peak = area / gamma * phi_max;
            let floor = z.iter().copied().fold(f64::INFINITY, f64::min);
            if peak < floor {
                break;
            }
            let ux = x0 + wx * open_unit(rng);
            let uy = y0 + wy * open_unit(rng);
            for (zk, c) in z.iter_mut().zip(&self.coords) {
                let (dx, dy) = (c[0] - ux, c[1] - uy);
                let quad = i11 * dx * dx + 2.0 * i12 * dx * dy + i22 * dy * dy;
                let val = peak * (-0.5 * quad).exp();
                if val > *zk {
                    *zk = val;
                }
            }
        }
        z
    }

    pub fn simulate_data(&self, theta: &[f64], rng: &mut Generator) -> Result<SmithData> {
        let p = parts(theta)?;
        let margins = self.margins(theta)?;
        let mut y = Vec::with_capacity(self.n_years * self.q());
        for _ in 0..self.n_years {
            let z = self.simulate_frechet(&p.sigma, rng);
            for (zk, &(mu, lam)) in z.iter().zip(&margins) {
                y.push(frechet_to_gev(*zk, mu, lam, p.xi));
            }
        }
        Ok(SmithData { q: self.q(), y })
    }

    /// Moment-based start: Gumbel fits per station regressed on the
    /// coordinates, ξ = 0.1, and Σ from a least-squares fit of a(h)² to
    /// naive pairwise extremal-coefficient estimates.
    pub fn moment_start(&self, data: &SmithData) -> Vec<f64> {
        const EULER: f64 = 0.577_215_664_901_532_9;
        let q = self.q();
        let mut mus = Vec::with_capacity(q);
        let mut lams = Vec::with_capacity(q);
        for k in 0..q {
            let v = data.station(k);
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
            let lam = (sd * 6f64.sqrt() / std::f64::consts::PI).max(1e-3);
            mus.push(m - EULER * lam);
            lams.push(lam);
        }
        let design: Vec<[f64; 3]> = self.coords.iter().map(|c| [1.0, c[0], c[1]]).collect();
        let beta_mu = least_squares3(&design, &mus).unwrap_or([mean(&mus), 0.0, 0.0]);
        let mut beta_lambda = least_squares3(&design, &lams).unwrap_or([mean(&lams), 0.0, 0.0]);
        if (0..q).any(|k| self.surface(&beta_lambda, k) <= 0.0) {
            beta_lambda = [mean(&lams), 0.0, 0.0];
        }

        let mut theta = vec![
            100.0,
            0.0,
            100.0,
            beta_mu[0],
            beta_mu[1],
            beta_mu[2],
            beta_lambda[0],
            beta_lambda[1],
            beta_lambda[2],
            0.1,
        ];
        // shrink ξ until every observation is inside the GEV support
        while theta[9] > 1e-4 {
            let ok = (0..q).all(|k| {
                let (mu, lam) = (self.surface(&beta_mu, k), self.surface(&beta_lambda, k));
                data.station(k)
                    .iter()
                    .all(|&y| gev_to_frechet(y, mu, lam, theta[9]).is_some())
            });
            if ok {
                break;
            }
            theta[9] *= 0.5;
        }

        let margins: Vec<(f64, f64)> = (0..q)
            .map(|k| (self.surface(&beta_mu, k), self.surface(&beta_lambda, k)))
            .collect();
        let n = data.n();
        let z: Vec<Vec<f64>> = (0..q)
            .map(|k| {
                data.station(k)
                    .iter()
                    .map(|&y| {
                        gev_to_frechet(y, margins[k].0, margins[k].1, theta[9])
                            .map_or(1.0, |(lz, _)| lz.exp())
                    })
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..q {
            for l in k + 1..q {
                let inv_sum: f64 = (0..n).map(|i| 1.0 / z[k][i].max(z[l][i])).sum();
                let delta = (n as f64 / inv_sum).clamp(1.0 + 1e-3, 2.0 - 1e-3);
                let a = 2.0 * std_normal_quantile(delta / 2.0);
                let h = [
                    self.coords[l][0] - self.coords[k][0],
                    self.coords[l][1] - self.coords[k][1],
                ];
                rows.push([h[0] * h[0], 2.0 * h[0] * h[1], h[1] * h[1]]);
                rhs.push(a * a);
            }
        }
        let sigma = least_squares3(&rows, &rhs)
            .and_then(|p| {
                // p = (P₁₁, P₁₂, P₂₂) of the precision matrix
                let det = p[0] * p[2] - p[1] * p[1];
                if p[0] > 0.0 && det > 0.0 {
                    Some([p[2] / det, -p[1] / det, p[0] / det])
                } else {
                    None
                }
            })
            .unwrap_or_else(|| {
                let mut r: Vec<f64> = rows
                    .iter()
                    .zip(&rhs)
                    .map(|(h, a2)| (h[0] + h[2]) / a2.max(1e-6))
                    .collect();
                r.sort_by(f64::total_cmp);
                let s = r[r.len() / 2];
                [s, 0.0, s]
            });
        theta[0] = sigma[0].clamp(1.0, 999.0);
        theta[2] = sigma[2].clamp(1.0, 999.0);
        let bound = 0.9 * (theta[0] * theta[2]).sqrt();
        theta[1] = sigma[1].clamp(-bound, bound).clamp(-299.0, 299.0);
        theta
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ordinary least squares with three regressors via the normal equations.
fn least_squares3(x: &[[f64; 3]], y: &[f64]) -> Option<[f64; 3]> {
    let mut xtx = crate::numkernel::Matrix::zeros(3, 3);
    let mut xty = vec![0.0; 3];
    for (row, &yi) in x.iter().zip(y) {
        for a in 0..3 {
            xty[a] += row[a] * yi;
            for b in 0..3 {
                xtx[(a, b)] += row[a] * row[b];
            }
        }
    }
    let sol = xtx.solve(&xty).ok()?;
    if sol.iter().all(|v| v.is_finite()) {
        Some([sol[0], sol[1], sol[2]])
    } else {
        None
    }
}

impl CompositeLikelihood for SmithModel {
    type Data = SmithData;

    fn dim(&self) -> usize {
        DIM
    }

    fn logcl(&self, theta: &[f64], data: &SmithData) -> f64 {
        self.pairwise_loglik(theta, data).unwrap_or(f64::NEG_INFINITY)
    }

    fn closed_form_score(&self, theta: &[f64], data: &SmithData) -> Option<Vec<f64>> {
        Some(
            self.pairwise_score(theta, data)
                .unwrap_or_else(|_| vec![f64::NAN; DIM]),
        )
    }

    fn has_closed_form_score(&self) -> bool {
        true
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        self.margins(theta).is_ok()
    }
}

impl Model for SmithModel {
    fn name(&self) -> &'static str {
        "smith"
    }

    fn param_names(&self) -> Vec<String> {
        [
            "sigma11",
            "sigma12",
            "sigma22",
            "beta_mu0",
            "beta_mu1",
            "beta_mu2",
            "beta_lambda0",
            "beta_lambda1",
            "beta_lambda2",
            "xi",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    /// Flat on (0,1000) × (−300,300) × (0,1000) × ℝ⁶ × (0,∞) restricted to a
    /// positive definite Σ and positive scale at every station.
    fn log_prior(&self, theta: &[f64]) -> f64 {
        let inside = theta.len() == DIM
            && theta[0] > 0.0
            && theta[0] < 1000.0
            && theta[1] > -300.0
            && theta[1] < 300.0
            && theta[2] > 0.0
            && theta[2] < 1000.0
            && theta[9] > 0.0
            && self.margins(theta).is_ok();
        if inside {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn simulate(&self, theta: &[f64], rng: &mut Generator) -> Result<SmithData> {
        self.simulate_data(theta, rng)
    }

    fn initial_estimate(&self, data: &SmithData) -> Vec<f64> {
        self.moment_start(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_levels_give_extremal_coefficient() {
        let s = Cov2::new(300.0, 70.0, 180.0).unwrap();
        let h = [20.0, -10.0];
        for &z in &[0.3, 1.0, 7.5] {
            let c = bivariate_cdf(z, z, h, &s).unwrap();
            assert!((c - (-extremal_coefficient(h, &s) / z).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_at_distance_two() {
        let s = Cov2::new(1.0, 0.0, 1.0).unwrap();
        assert!((extremal_coefficient([2.0, 0.0], &s) - 1.682_689_492_137_086).abs() < 1e-12);
        assert_eq!(extremal_coefficient([0.0, 0.0], &s), 1.0);
    }

    #[test]
    fn density_is_mixed_derivative_of_cdf() {
        let s = Cov2::new(2.0, 0.3, 1.0).unwrap();
        let h = [1.2, 0.7];
        let a = s.mahalanobis(h);
        for &(zk, zl) in &[(0.8, 1.7), (3.0, 0.4), (1.1, 1.1)] {
            let e = 1e-4;
            let f = |x: f64, y: f64| bivariate_cdf(x, y, h, &s).unwrap();
            let fd = (f(zk + e, zl + e) - f(zk + e, zl - e) - f(zk - e, zl + e) + f(zk - e, zl - e))
                / (4.0 * e * e);
            let exact = log_pair_density(zk, zl, a).exp();
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact), "{fd} vs {exact}");
        }
    }

    #[test]
    fn pair_density_gradient_matches_differences() {
        for &(zk, zl, a) in &[(0.8, 1.7, 1.3), (3.0, 0.4, 0.2), (1.1, 1.1, 2.5)] {
            let (v, g) = log_pair_density_grad(zk, zl, a);
            let direct = log_pair_density(zk, zl, a);
            assert!((v - direct).abs() < 1e-12 * (1.0 + direct.abs()));
            let e: f64 = 1e-6;
            let fd = [
                (log_pair_density(zk * e.exp(), zl, a) - log_pair_density(zk * (-e).exp(), zl, a)) / (2.0 * e),
                (log_pair_density(zk, zl * e.exp(), a) - log_pair_density(zk, zl * (-e).exp(), a)) / (2.0 * e),
                (log_pair_density(zk, zl, a + e) - log_pair_density(zk, zl, a - e)) / (2.0 * e),
            ];
            for c in 0..3 {
                assert!((g[c] - fd[c]).abs() < 1e-6 * (1.0 + fd[c].abs()), "{c}: {} vs {}", g[c], fd[c]);
            }
        }
    }

    #[test]
    fn analytic_score_matches_differences() {
        let m = SmithModel::grid(2, 10.0, 15).unwrap();
        let theta = [100.0, 30.0, 150.0, 30.0, 0.1, -0.05, 8.0, 0.02, 0.01, 0.15];
        let y = m.simulate(&theta, &mut crate::numkernel::RngStream::new(5, 0).generator()).unwrap();
        let exact = m.pairwise_score(&theta, &y).unwrap();
        let fd = crate::estimating::fd_score(&m, &theta, &y).unwrap();
        for j in 0..DIM {
            assert!((exact[j] - fd[j]).abs() < 1e-5 * (1.0 + fd[j].abs()), "{j}: {} vs {}", exact[j], fd[j]);
        }
        let mut gumbel = theta;
        gumbel[9] = 0.0;
        let y = m.simulate(&gumbel, &mut crate::numkernel::RngStream::new(6, 0).generator()).unwrap();
        let exact = m.pairwise_score(&gumbel, &y).unwrap();
        let fd = crate::estimating::fd_score(&m, &gumbel, &y).unwrap();
        for j in 0..DIM {
            assert!((exact[j] - fd[j]).abs() < 1e-4 * (1.0 + fd[j].abs()), "{j}: {} vs {}", exact[j], fd[j]);
        }
    }

    #[test]
    fn gev_round_trip() {
        for &xi in &[0.2, -0.1, 0.0, 1e-10] {
            let y = frechet_to_gev(2.5, 10.0, 3.0, xi);
            let (lz, _) = gev_to_frechet(y, 10.0, 3.0, xi).unwrap();
            assert!((lz.exp() - 2.5).abs() < 1e-9, "ξ = {xi}");
        }
    }

    #[test]
    fn non_pd_sigma_rejected() {
        assert!(Cov2::new(1.0, 2.0, 1.0).is_err());
    }
}
