use proptest::prelude::*;

use abcscore_core::diagnostics::{
    kl_divergence_1d, mcmc_ess, run_study, summarize, weighted_quantile, DensityTable, StudyConfig,
};
use abcscore_core::numkernel::{draw_normal, std_normal_pdf};
use abcscore_core::parallel::with_workers;
use abcscore_core::{Error, Matrix, RngStream, WeightedSample};

fn sample(values: &[f64], weights: &[f64]) -> WeightedSample {
    let draws = Matrix::from_row_major(values.len(), 1, values.to_vec()).unwrap();
    WeightedSample::new(draws, weights.to_vec(), Default::default()).unwrap()
}

proptest! {
    #[test]
    fn summary_invariant_under_permutation(pairs in prop::collection::vec((-50.0..50.0f64, 0.01..5.0f64), 2..80),
                                           shift in 0usize..80) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let mut rotated = pairs.clone();
        rotated.rotate_left(shift % pairs.len());
        rotated.reverse();
        let (v2, w2): (Vec<f64>, Vec<f64>) = rotated.into_iter().unzip();
        let names = vec!["x".to_string()];
        let a = summarize(&sample(&v, &w), &names).unwrap();
        let b = summarize(&sample(&v2, &w2), &names).unwrap();
        let (pa, pb) = (&a.parameters[0], &b.parameters[0]);
        prop_assert!((pa.mean - pb.mean).abs() < 1e-10);
        prop_assert!((pa.sd - pb.sd).abs() < 1e-9);
        prop_assert_eq!((pa.q025, pa.median, pa.q975), (pb.q025, pb.median, pb.q975));
        prop_assert!((a.ess - b.ess).abs() < 1e-9 * a.ess);
        prop_assert!(pa.q025 <= pa.median && pa.median <= pa.q975);
    }

    #[test]
    fn equal_weight_quantile_is_order_statistic(v in prop::collection::vec(-10.0..10.0f64, 1..100), p in 0.001..1.0f64) {
        let w = vec![1.0; v.len()];
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let k = ((p * v.len() as f64) - 1e-9).ceil().max(1.0) as usize;
        prop_assert_eq!(weighted_quantile(&v, &w, p), s[k - 1]);
    }
}

fn standard_normal_table() -> DensityTable {
    DensityTable::from_fn(-8.0, 8.0, 2049, std_normal_pdf).unwrap()
}

#[test]
fn kl_of_matching_sample_is_small_and_shrinks() {
    let reference = standard_normal_table();
    let mut g = RngStream::new(1, 0).generator();
    let kl = |n: usize, g: &mut _| {
        let x = draw_normal(g, n);
        kl_divergence_1d(&reference, &sample(&x, &vec![1.0; n]), 0).unwrap()
    };
    let small = kl(500, &mut g);
    let large = kl(50_000, &mut g);
    assert!(large < small && large < 0.002, "{small} {large}");
}

#[test]
fn kl_detects_shifted_sample() {
    let reference = standard_normal_table();
    let mut g = RngStream::new(2, 0).generator();
    let x: Vec<f64> = draw_normal(&mut g, 20_000).iter().map(|v| v + 1.0).collect();
    // KL(N(0,1) ‖ N(1,1)) = ½; the kernel estimate widens q slightly.
    let kl = kl_divergence_1d(&reference, &sample(&x, &vec![1.0; x.len()]), 0).unwrap();
    assert!((kl - 0.5).abs() < 0.05, "{kl}");
}

#[test]
fn ar1_ess_matches_theory() {
    let phi: f64 = 0.8;
    let mut g = RngStream::new(3, 0).generator();
    let e = draw_normal(&mut g, 200_000);
    let mut x = vec![0.0; e.len()];
    for t in 1..e.len() {
        x[t] = phi * x[t - 1] + e[t];
    }
    let expected = x.len() as f64 * (1.0 - phi) / (1.0 + phi);
    let ess = mcmc_ess(&x);
    assert!((ess / expected - 1.0).abs() < 0.15, "{ess} vs {expected}");
}

#[test]
fn study_is_reproducible_across_workers() {
    let cfg = StudyConfig {
        n_trials: 12,
        seed: 5,
        methods: vec!["a".into(), "b".into()],
        param_names: vec!["m".into()],
        config_snapshot: "{}".into(),
    };
    let trial = |i: usize, s: RngStream| -> abcscore_core::Result<Vec<abcscore_core::Result<Vec<f64>>>> {
        let x = draw_normal(&mut s.generator(), 10);
        let b = if i == 3 { Err(Error::InvalidInput("skip".into())) } else { Ok(vec![x[1]]) };
        Ok(vec![Ok(vec![x[0]]), b])
    };
    let csv = |w| {
        let r = with_workers(w, || run_study(&cfg, trial).unwrap());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(1), csv(3));
}
