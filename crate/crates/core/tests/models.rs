use proptest::prelude::*;

use abcscore_core::models::equicorr::EquicorrData;
use abcscore_core::models::smith::{extremal_coefficient, gev_to_frechet, Cov2};
use abcscore_core::models::{EquicorrModel, NormalParabola, ProbitModel, SmithModel, SpatialDataset};
use abcscore_core::numkernel::std_normal_cdf;
use abcscore_core::{CompositeLikelihood, Model, RngStream};

fn ks_statistic(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    d * n.sqrt()
}

proptest! {
    #[test]
    fn extremal_coefficient_bounded_and_monotone(s11 in 0.1..500.0f64, s22 in 0.1..500.0f64, r in -0.99..0.99f64,
                                                 angle in 0.0..std::f64::consts::TAU, t in 0.0..50.0f64, dt in 0.0..50.0f64) {
        let sigma = Cov2::new(s11, r * (s11 * s22).sqrt(), s22).unwrap();
        let u = [angle.cos(), angle.sin()];
        let at = |s: f64| extremal_coefficient([s * u[0], s * u[1]], &sigma);
        let (a, b) = (at(t), at(t + dt));
        prop_assert!((1.0..=2.0).contains(&a) && (1.0..=2.0).contains(&b));
        prop_assert!(b >= a - 1e-15);
        prop_assert_eq!(at(0.0), 1.0);
        prop_assert_eq!(at(t), extremal_coefficient([-t * u[0], -t * u[1]], &sigma));
    }

    #[test]
    fn equicorr_likelihood_depends_on_sufficient_statistics(seed in 0u64..500, perm in 0usize..10) {
        let model = EquicorrModel::new(6, 5).unwrap();
        let omega = model.omega_from_natural(0.3, 1.5, 0.4).unwrap();
        let rows = model.simulate_raw(&omega, &mut RngStream::new(seed, 0).generator()).unwrap();
        // Permute members within clusters and the cluster order.
        let mut shuffled: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        for row in shuffled.iter_mut() {
            row.rotate_left(perm % 5);
        }
        let a = EquicorrData::from_rows(&rows).unwrap();
        let b = EquicorrData::from_rows(&shuffled).unwrap();
        for (x, y) in a.summary().iter().zip(b.summary()) {
            prop_assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
        let at = model.omega_from_natural(0.0, 1.0, 0.2).unwrap();
        prop_assert!((model.logcl(&at, &a) - model.logcl(&at, &b)).abs() < 1e-9);
        prop_assert!((model.full_loglik(&at, &a).unwrap() - model.full_loglik(&at, &b).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn sufficient_and_raw_simulation_agree_in_law() {
    let raw = EquicorrModel::new(30, 10).unwrap();
    let suff = raw.clone().with_sufficient_simulation(true);
    let omega = raw.omega_from_natural(0.5, 2.0, 0.3).unwrap();
    let stats = |m: &EquicorrModel, s: u64| {
        let mut g = RngStream::new(s, 0).generator();
        let ys: Vec<Vec<f64>> = (0..3000).map(|_| m.simulate(&omega, &mut g).unwrap().summary()).collect();
        (0..3)
            .map(|j| {
                let v: Vec<f64> = ys.iter().map(|y| y[j]).collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
                (mean, sd)
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (stats(&raw, 1), stats(&suff, 2));
    for j in 0..3 {
        let se = (a[j].1.powi(2) + b[j].1.powi(2)).sqrt() / 3000f64.sqrt();
        assert!((a[j].0 - b[j].0).abs() < 4.0 * se, "component {j}: {:?} vs {:?}", a[j], b[j]);
        assert!((a[j].1 / b[j].1 - 1.0).abs() < 0.1);
    }
}

/// P(Z_k ≤ z, Z_l ≤ z) = exp(−δ/z), so δ̂ = −z log P̂ at z = 1.
#[test]
fn joint_exceedance_estimator_recovers_extremal_coefficient() {
    let m = SmithModel::grid(3, 10.0, 1).unwrap();
    let sigma = Cov2::new(100.0, 30.0, 150.0).unwrap();
    let mut g = RngStream::new(17, 0).generator();
    let n = 10_000;
    let fields: Vec<Vec<f64>> = (0..n).map(|_| m.simulate_frechet(&sigma, &mut g)).collect();
    let c = m.coords();
    for (k, l) in [(0, 1), (0, 3), (0, 4), (0, 8)] {
        let h = [c[l][0] - c[k][0], c[l][1] - c[k][1]];
        let delta = extremal_coefficient(h, &sigma);
        let p_hat = fields.iter().filter(|f| f[k] <= 1.0 && f[l] <= 1.0).count() as f64 / n as f64;
        let est = -p_hat.ln();
        // Delta method: SE(−log P̂) = √((1 − p)/(n p)).
        let p = (-delta).exp();
        let se = ((1.0 - p) / (n as f64 * p)).sqrt();
        assert!((est - delta).abs() < 4.0 * se, "h={h:?}: {est} vs {delta} (se {se})");
    }
}

#[test]
fn smith_margins_transform_to_unit_frechet() {
    let m = SmithModel::grid(2, 10.0, 3000).unwrap();
    let theta = [100.0, 30.0, 150.0, 30.0, 0.1, -0.05, 8.0, 0.02, 0.01, 0.3];
    let y = m.simulate(&theta, &mut RngStream::new(3, 0).generator()).unwrap();
    let margins = m.margins(&theta).unwrap();
    for (k, &(mu, lambda)) in margins.iter().enumerate() {
        let u: Vec<f64> = y
            .station(k)
            .iter()
            .map(|&v| (-(-gev_to_frechet(v, mu, lambda, theta[9]).unwrap().0).exp()).exp())
            .collect();
        assert!(ks_statistic(u) < 1.63, "station {k}");
    }
}

#[test]
fn probit_margins_match_probabilities() {
    let m = ProbitModel::random_design(4000, 3, RngStream::new(4, 0)).unwrap();
    let theta = [0.5, 1.0, 0.0];
    let y = m.simulate(&theta, &mut RngStream::new(4, 1).generator()).unwrap();
    let counts = y.counts();
    for h in 0..3 {
        let expected: f64 = (0..m.n())
            .map(|i| std_normal_cdf((0.5 + m.covariate(i)[h]) / 2f64.sqrt()))
            .sum();
        let sd = (expected * (1.0 - expected / m.n() as f64)).sqrt();
        assert!((counts[h] - expected).abs() < 4.0 * sd, "item {h}: {} vs {expected}", counts[h]);
    }
}

#[test]
fn normal_parabola_exact_posterior_is_normalized() {
    let model = NormalParabola::new(50, 15.0).unwrap();
    let y = model.simulate(&[5.0], &mut RngStream::new(5, 0).generator()).unwrap();
    let post = model.exact_posterior(&y, 4096).unwrap();
    assert!((post.integral() - 1.0).abs() < 1e-9);
    assert!((post.mode() - NormalParabola::mle(&y)).abs() < 0.01);
    // Laplace approximation: sd ≈ 1/√(3n/θ̂²).
    let approx = NormalParabola::mle(&y) / 150f64.sqrt();
    assert!((post.sd() / approx - 1.0).abs() < 0.1);
}

#[test]
fn spatial_dataset_drives_model_coordinates() {
    let stations = "station,x,y\nS1,0,0\nS2,5,1\nS3,2,7\n";
    let maxima = "year,S3,S1,S2\n2000,3,1,2\n2001,6,4,5\n";
    let ds = SpatialDataset::from_readers(stations.as_bytes(), "s", maxima.as_bytes(), "m").unwrap();
    assert_eq!(ds.shape(), (2, 3));
    // Columns are reordered to the station file order.
    assert_eq!(ds.maxima.year(0), &[1.0, 2.0, 3.0]);
    let model = ds.model().unwrap();
    assert_eq!(model.coords(), &[[0.0, 0.0], [5.0, 1.0], [2.0, 7.0]]);
}
