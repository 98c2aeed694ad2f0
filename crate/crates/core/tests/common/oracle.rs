//! Reference values computed independently of the library: adaptive
//! Gauss–Kronrod quadrature for the normal CDF and for the bivariate normal
//! CDF as an iterated two-dimensional integral of the density.

#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// ∫ₐᵇ f to absolute tolerance `tol` by recursive bisection.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        // Below ~100 ulps of the panel value the estimate is rounding noise.
        if err <= tol || err <= 1e-14 * v.abs() || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, tol, 30)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(z) = ½ ± ∫₀^|z| φ, to about 1e-15 absolute.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_infinite() {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    if z.abs() > 38.0 {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    // The far tail integrated directly avoids cancellation against ½.
    if z < -6.0 {
        return integrate(&normal_pdf, z - 30.0, z, 1e-20);
    }
    let half = integrate(&normal_pdf, 0.0, z.abs(), 1e-15);
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// P(X ≤ h, Y ≤ k) for a standard bivariate normal with correlation ρ,
/// integrating the joint density: ∫_{-∞}^{h} ∫_{-∞}^{k} φ₂(x, y; ρ) dy dx,
/// with the inner integral done on the conditional scale of Y | X = x.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    let lo = -10.0;
    if h <= lo || k <= lo {
        return 0.0;
    }
    let inner = |x: f64| {
        let upper = (k - rho * x) / s;
        let ph = normal_pdf(x);
        if ph < 1e-300 {
            return 0.0;
        }
        ph * normal_cdf(upper)
    };
    // Split at the point where the inner CDF switches from 0 to 1.
    let hh = h.min(10.0);
    let mut cuts = vec![lo, hh];
    if rho != 0.0 {
        let x0 = k / rho;
        if x0 > lo && x0 < hh {
            cuts.insert(1, x0);
        }
    }
    cuts.windows(2).map(|w| integrate(&inner, w[0], w[1], 1e-12)).sum()
}
