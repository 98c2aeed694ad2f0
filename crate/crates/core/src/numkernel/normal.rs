//! Univariate and bivariate standard normal distribution functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), computed through `erfc` so both tails keep full relative precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p): Acklam's rational approximation followed by one Halley step.
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let plow = 0.02425;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Standard bivariate normal density with correlation `rho`.
pub fn bvn_pdf(h: f64, k: f64, rho: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    (-(h * h - 2.0 * rho * h * k + k * k) / (2.0 * r2)).exp() / (2.0 * PI * r2.sqrt())
}

const GL_NODES: usize = 32;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on P_n.
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_NODES;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            let wi = 2.0 / ((1.0 - z * z) * dp * dp);
            w[i] = wi;
            w[n - 1 - i] = wi;
        }
        (x, w)
    })
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

fn gl_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= 1e-15 {
        return refined;
    }
    gl_adaptive(f, a, m, left, depth - 1) + gl_adaptive(f, m, b, right, depth - 1)
}

/// Φ₂(h, k; ρ) = P(X ≤ h, Y ≤ k) for a standard bivariate normal pair.
///
/// Uses Plackett's identity ∂Φ₂/∂ρ = φ₂ integrated from 0 to ρ after the
/// substitution r = sin t, which removes the (1 − r²)^{-1/2} singularity:
///
/// Φ₂ = Φ(h)Φ(k) + (2π)⁻¹ ∫₀^{asin ρ} exp{−(h² + k² − 2hk sin t) / (2 cos² t)} dt.
///
/// The integral is evaluated with 32-point Gauss–Legendre panels, bisected
/// until two successive refinements agree.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("correlation {rho} outside (-1, 1)")));
    }
    if h.is_nan() || k.is_nan() {
        return Err(Error::Domain("NaN argument to bvn_cdf".into()));
    }
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(std_normal_cdf(k));
    }
    if k == f64::INFINITY {
        return Ok(std_normal_cdf(h));
    }
    let base = std_normal_cdf(h) * std_normal_cdf(k);
    if rho == 0.0 {
        return Ok(base);
    }
    let hk = h * k;
    let hs = 0.5 * (h * h + k * k);
    let integrand = |t: f64| {
        let (s, c) = t.sin_cos();
        ((hk * s - hs) / (c * c)).exp()
    };
    let upper = rho.asin();
    let whole = gl_panel(&integrand, 0.0, upper);
    let integral = gl_adaptive(&integrand, 0.0, upper, whole, 8);
    Ok((base + integral / (2.0 * PI)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_fixed_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.02, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            let x = std_normal_quantile(p);
            assert!((std_normal_cdf(x) - p).abs() < 1e-14 * (1.0 + p / 1e-10), "{p}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact up to degree 63
        let i: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((i - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn bvn_independence_and_margins() {
        for &(h, k) in &[(0.3, -1.2), (2.0, 0.1), (-0.5, -0.5)] {
            let v = bvn_cdf(h, k, 0.0).unwrap();
            assert!((v - std_normal_cdf(h) * std_normal_cdf(k)).abs() < 1e-15);
            assert_eq!(bvn_cdf(f64::INFINITY, k, 0.7).unwrap(), std_normal_cdf(k));
            let far = bvn_cdf(h, 40.0, 0.6).unwrap();
            assert!((far - std_normal_cdf(h)).abs() < 1e-10);
        }
    }

    #[test]
    fn bvn_orthant_closed_form() {
        for &rho in &[-0.95, -0.4, 0.2, 0.5, 0.9, 0.999] {
            let v = bvn_cdf(0.0, 0.0, rho).unwrap();
            let exact = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert!((v - exact).abs() < 1e-14, "rho={rho}: {v} vs {exact}");
        }
    }

    #[test]
    fn bvn_rejects_degenerate_correlation() {
        assert!(bvn_cdf(0.0, 0.0, 1.0).is_err());
        assert!(bvn_cdf(0.0, 0.0, -1.2).is_err());
    }
}
