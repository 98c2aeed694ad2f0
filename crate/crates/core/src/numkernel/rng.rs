//! Reproducible random streams.
//!
//! A [`RngStream`] is a `(seed, stream_id)` pair. Its generator is ChaCha8
//! keyed by the seed with the 64-bit ChaCha stream selector set to
//! `stream_id`, so every stream is an independent, platform-stable sequence
//! no matter which worker consumes it. Nested streams are derived with
//! [`RngStream::child`], which hashes the parent pair into a fresh key.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::linalg::Matrix;
use crate::error::{Error, Result};

pub type Generator = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Sub-stream `index` of this stream. Children of distinct parents never
    /// share a key (up to 64-bit hash collisions).
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id ^ 0x5851_f42d_4c95_7f2d)),
            stream_id: index,
        }
    }

    pub fn generator(&self) -> Generator {
        let mut g = ChaCha8Rng::seed_from_u64(self.seed);
        g.set_stream(self.stream_id);
        g
    }
}

pub fn draw_normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform draws on the open interval (0, 1).
pub fn draw_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| open_unit(rng)).collect()
}

pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Multivariate Student-t with `df` degrees of freedom, location and scale
/// matrix. Holds the Cholesky factor so repeated draws and density
/// evaluations are cheap.
#[derive(Clone, Debug)]
pub struct MultivariateT {
    df: f64,
    location: Vec<f64>,
    chol: Matrix,
    log_norm: f64,
    chi2: ChiSquared<f64>,
}

impl MultivariateT {
    pub fn new(df: f64, location: Vec<f64>, scale: &Matrix) -> Result<Self> {
        if !(df > 0.0) {
            return Err(Error::Domain(format!("t degrees of freedom {df} must be positive")));
        }
        if scale.rows() != location.len() {
            return Err(Error::Dimension {
                expected: location.len(),
                found: scale.rows(),
            });
        }
        let chol = scale.cholesky()?;
        let d = location.len() as f64;
        let log_det: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = libm::lgamma(0.5 * (df + d))
            - libm::lgamma(0.5 * df)
            - 0.5 * d * (df * std::f64::consts::PI).ln()
            - 0.5 * log_det;
        let chi2 = ChiSquared::new(df).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(MultivariateT {
            df,
            location,
            chol,
            log_norm,
            chi2,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    /// location + L z √(df / χ²_df).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = draw_normal(rng, self.dim());
        let w: f64 = self.chi2.sample(rng);
        let f = (self.df / w).sqrt();
        let lz = self.chol.matvec(&z);
        self.location
            .iter()
            .zip(lz)
            .map(|(m, v)| m + f * v)
            .collect()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.location).map(|(a, b)| a - b).collect();
        let u = match self.chol.solve_lower(&diff) {
            Ok(u) => u,
            Err(_) => return f64::NEG_INFINITY,
        };
        let q: f64 = u.iter().map(|v| v * v).sum();
        self.log_norm - 0.5 * (self.df + self.dim() as f64) * (q / self.df).ln_1p()
    }
}

/// One multivariate t draw; convenience wrapper over [`MultivariateT`].
pub fn draw_student_t<R: Rng + ?Sized>(
    rng: &mut R,
    df: f64,
    location: &[f64],
    scale: &Matrix,
) -> Result<Vec<f64>> {
    Ok(MultivariateT::new(df, location.to_vec(), scale)?.sample(rng))
}
