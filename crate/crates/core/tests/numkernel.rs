mod common;

use common::oracle;
use proptest::prelude::*;

use abcscore_core::numkernel::{bvn_cdf, std_normal_cdf, std_normal_quantile, Matrix, MultivariateT};
use abcscore_core::RngStream;

fn spd(d: usize, entries: &[f64]) -> Matrix {
    let a = Matrix::from_fn(d, d, |i, j| entries[i * d + j]);
    (&a * &a.transpose()).add(&Matrix::identity(d).scale(0.1)).symmetrize()
}

#[test]
fn normal_cdf_matches_quadrature() {
    for i in 0..=160 {
        let z = -8.0 + 0.1 * i as f64;
        let want = oracle::normal_cdf(z);
        let got = std_normal_cdf(z);
        assert!((got - want).abs() <= 1e-15 + 1e-13 * want, "z={z}: {got} vs {want}");
    }
}

#[test]
fn independent_bvn_factorizes() {
    for &(h, k) in &[(0.0, 0.0), (1.2, -0.4), (-3.0, 2.5), (-6.0, -1.0)] {
        let p = bvn_cdf(h, k, 0.0).unwrap();
        assert!((p - std_normal_cdf(h) * std_normal_cdf(k)).abs() < 1e-15);
    }
    assert!((bvn_cdf(0.0, 0.0, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bvn_matches_quadrature(h in -6.0..6.0f64, k in -6.0..6.0f64, rho in -0.995..0.995f64) {
        let got = bvn_cdf(h, k, rho).unwrap();
        let want = oracle::bvn_cdf(h, k, rho);
        prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn orthants_sum_to_one(h in -8.0..8.0f64, k in -8.0..8.0f64, rho in -1.0..1.0f64) {
        let s = bvn_cdf(h, k, rho).unwrap()
            + bvn_cdf(-h, k, -rho).unwrap()
            + bvn_cdf(h, -k, -rho).unwrap()
            + bvn_cdf(-h, -k, rho).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bvn_symmetric_and_bounded(h in -8.0..8.0f64, k in -8.0..8.0f64, rho in -1.0..1.0f64) {
        let p = bvn_cdf(h, k, rho).unwrap();
        prop_assert_eq!(p, bvn_cdf(k, h, rho).unwrap());
        let upper = std_normal_cdf(h).min(std_normal_cdf(k));
        let lower = (std_normal_cdf(h) + std_normal_cdf(k) - 1.0).max(0.0);
        prop_assert!(p >= lower - 1e-15 && p <= upper + 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-12..1.0f64) {
        prop_assume!(p < 1.0 - 1e-12);
        let z = std_normal_quantile(p);
        prop_assert!((std_normal_cdf(z) - p).abs() <= 1e-13 * p.min(1.0 - p).max(1e-3));
    }

    #[test]
    fn cholesky_reconstructs(d in 1usize..8, entries in prop::collection::vec(-2.0..2.0f64, 64)) {
        let a = spd(d, &entries);
        let l = a.cholesky().unwrap();
        for i in 0..d {
            for j in i + 1..d {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
        prop_assert!((&l * &l.transpose()).sub(&a).max_abs() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn spd_inverse_is_inverse(d in 1usize..8, entries in prop::collection::vec(-2.0..2.0f64, 64)) {
        let a = spd(d, &entries);
        let inv = a.spd_inverse().unwrap();
        let cond = a.max_abs() * inv.max_abs();
        prop_assert!((&a * &inv).sub(&Matrix::identity(d)).max_abs() < 1e-13 * cond.max(1.0) * d as f64);
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    use rand::RngCore;
    let draw = |s: RngStream| {
        let mut g = s.generator();
        (0..4).map(|_| g.next_u64()).collect::<Vec<_>>()
    };
    let root = RngStream::new(42, 0);
    assert_eq!(draw(root.child(3)), draw(RngStream::new(42, 0).child(3)));
    assert_ne!(draw(root.child(3)), draw(root.child(4)));
    assert_ne!(draw(root.child(3)), draw(RngStream::new(43, 0).child(3)));
    assert_ne!(draw(root.child(1).child(2)), draw(root.child(2).child(1)));
}

#[test]
fn multivariate_t_moments() {
    let scale = Matrix::from_rows(&[[2.0, 0.6], [0.6, 1.0]]).unwrap();
    let t = MultivariateT::new(8.0, vec![1.0, -2.0], &scale).unwrap();
    let mut g = RngStream::new(5, 0).generator();
    let n = 200_000;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| t.sample(&mut g)).collect();
    let mean: Vec<f64> = (0..2).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
    // Covariance of a t_ν is ν/(ν−2)·scale.
    let c01 = xs.iter().map(|x| (x[0] - mean[0]) * (x[1] - mean[1])).sum::<f64>() / n as f64;
    assert!((mean[0] - 1.0).abs() < 0.02 && (mean[1] + 2.0).abs() < 0.02, "{mean:?}");
    assert!((c01 - 0.8).abs() < 0.03, "{c01}");
}
