//! Doubling the series length should double the cost of a filter pass.
//! Kept in its own binary with a single test so no other test competes for
//! the CPU while it measures.

use std::hint::black_box;
use std::time::Instant;

use ssm_abc::filters::{aukf_loglik, grid_filter_loglik, kalman_loglik, GridSpec, Transitions};
use ssm_abc::models::{simulate_heston, simulate_lg, HestonParams, LgParams};

/// Fastest of several repetitions, in seconds.
fn best_of(reps: usize, f: impl Fn() -> f64) -> f64 {
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            black_box(f());
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn doubling_ratio(len: usize, pass: impl Fn(usize) -> f64) -> f64 {
    pass(len);
    best_of(7, || pass(2 * len)) / best_of(7, || pass(len))
}

#[test]
fn filter_passes_scale_linearly_in_length() {
    let lg = LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
    let y = simulate_lg(&lg, 400_000, 1).unwrap().obs;
    let kf = doubling_ratio(200_000, |n| kalman_loglik(&y[..n], &lg).unwrap());

    let hp = HestonParams::new(0.92, 0.0024, 0.062).unwrap();
    let r = simulate_heston(&hp, 100_000, 2).unwrap().obs;
    let ukf = doubling_ratio(50_000, |n| aukf_loglik(&r[..n], &hp).unwrap());

    let grid = GridSpec::heston_default(&hp, 100).unwrap();
    let gf = doubling_ratio(1_000, |n| grid_filter_loglik(&r[..n], &hp, Transitions::Exact, &grid).unwrap());

    for (name, ratio) in [("kalman", kf), ("aukf", ukf), ("grid", gf)] {
        assert!((1.4..=2.6).contains(&ratio), "{name}: doubling T multiplied the runtime by {ratio:.3}");
    }
}
