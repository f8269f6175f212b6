mod common;

use common::lg_brute_force;
use rand::Rng;
use ssm_abc::filters::{aukf_loglik_with, grid_loglik_with, kalman_loglik, LinearGaussianGrid, LinearGaussianUkf};
use ssm_abc::models::{simulate_lg, simulate_lg_with, LgParams};
use ssm_abc::rng::{domain, Streams};

fn random_lg(rng: &mut impl Rng) -> LgParams<f64> {
    LgParams::new(
        rng.random_range(-0.95..0.95),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
    )
    .unwrap()
}

#[test]
fn kalman_matches_joint_gaussian_density() {
    let streams = Streams::new(1).child(domain::TEST, 10);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut rng = streams.stream(i);
        let p = random_lg(&mut rng);
        let y = simulate_lg_with(&p, 10, &mut rng).unwrap().obs;
        for len in 1..=10 {
            let err = (kalman_loglik(&y[..len], &p).unwrap() - lg_brute_force(&y[..len], &p)).abs();
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn unscented_filter_is_exact_on_the_linear_model() {
    let streams = Streams::new(2).child(domain::TEST, 11);
    for i in 0..20 {
        let mut rng = streams.stream(i);
        let p = random_lg(&mut rng);
        let y = simulate_lg_with(&p, 400, &mut rng).unwrap().obs;
        let kf = kalman_loglik(&y, &p).unwrap();
        let ukf = aukf_loglik_with(&LinearGaussianUkf(p), &y).unwrap();
        assert!((kf - ukf).abs() < 1e-6, "draw {i}: {kf} vs {ukf}");
    }
}

#[test]
fn grid_filter_converges_monotonically() {
    for seed in [1, 2, 3] {
        let p = LgParams::<f64>::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        let y = simulate_lg(&p, 100, seed).unwrap().obs;
        let exact = kalman_loglik(&y, &p).unwrap();
        let model = LinearGaussianGrid(p);
        let errs: Vec<f64> = [50, 100, 200, 400]
            .iter()
            .map(|&n| (grid_loglik_with(&model, &y, &model.spec(n, 6.0).unwrap()).unwrap() - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {errs:?}");
        assert!(errs[2] / exact.abs() < 1e-3, "seed {seed}: {errs:?}");
    }
}
