use ssm_abc::auxiliary::*;
use ssm_abc::linalg::Matrix;
use ssm_abc::models::{heston_default_prior, lg_default_prior, simulate_heston, simulate_lg, HestonParams, LgParams};

fn paper() -> LgParams<f64> {
    LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap()
}

fn lg_aux() -> LgAux<f64> {
    let prior = lg_default_prior::<f64>();
    LgAux::new(paper().sigma_e, prior.lower, prior.upper)
}

/// Synthetic model whose likelihood ignores the data.
struct Synthetic<G: Fn(&[f64]) -> f64 + Send + Sync> {
    f: G,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<G: Fn(&[f64]) -> f64 + Send + Sync> AuxiliaryModel<f64> for Synthetic<G> {
    fn dim(&self) -> usize {
        self.lower.len()
    }
    fn lower(&self) -> &[f64] {
        &self.lower
    }
    fn upper(&self) -> &[f64] {
        &self.upper
    }
    fn loglik(&self, _: &[f64], beta: &[f64]) -> f64 {
        (self.f)(beta)
    }
}

#[test]
fn quadratic_optimum_and_weighting() {
    let c = [0.3, -0.2];
    let m = Synthetic { f: move |b: &[f64]| -(b[0] - c[0]).powi(2) - (b[1] - c[1]).powi(2), lower: vec![-1.0; 2], upper: vec![1.0; 2] };
    let z = [0.0; 4];
    let fit = fit_mle(&m, &z, &default_starts(m.lower(), m.upper())).unwrap();
    assert!((fit.beta_hat[0] - c[0]).abs() < 1e-6 && (fit.beta_hat[1] - c[1]).abs() < 1e-6);
    // T^-1 L has Hessian -2/T I, so the weighting matrix is T/2 I
    let want = Matrix::identity(2).scale(2.0);
    assert!(fit.sigma_weight.max_abs_diff(&want) < 1e-5, "{:?}", fit.sigma_weight);
}

#[test]
fn multistart_keeps_the_best_terminal_value() {
    // two basins, the deeper one at 0.8
    let f = |b: &[f64]| (-(b[0] + 0.6).powi(2) * 20.0).exp() + 2.0 * (-(b[0] - 0.8).powi(2) * 20.0).exp();
    let m = Synthetic { f, lower: vec![-1.0], upper: vec![1.0] };
    let z = [0.0];
    let (x_a, v_a, _) = maximize(&m, &z, &[vec![-0.6]]).unwrap();
    let (x_b, v_b, _) = maximize(&m, &z, &[vec![0.7]]).unwrap();
    let (x, v, _) = maximize(&m, &z, &[vec![-0.6], vec![0.7]]).unwrap();
    assert!(v_b > v_a);
    assert_eq!((x.clone(), v), (x_b, v_b));
    assert!((x_a[0] + 0.6).abs() < 1e-3 && (x[0] - 0.8).abs() < 1e-3);
}

#[test]
fn no_finite_start_is_a_fit_error() {
    let m = Synthetic { f: |_: &[f64]| f64::NEG_INFINITY, lower: vec![0.0], upper: vec![1.0] };
    assert!(matches!(maximize(&m, &[0.0], &[vec![0.5]]), Err(ssm_abc::Error::Fit(_))));
}

#[test]
fn lg_fit_near_truth_and_first_order_condition() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 400, 11).unwrap().obs;
    let fit = fit_mle(&m, &y, &default_starts(m.lower(), m.upper())).unwrap();
    assert!(fit.converged);
    let truth = [0.7, 0.1, 1.0];
    for j in 0..3 {
        let se = (fit.sigma_weight[(j, j)] / 400.0).sqrt();
        assert!((fit.beta_hat[j] - truth[j]).abs() < 3.0 * se, "coordinate {j}: {:?} se {se}", fit.beta_hat);
    }
    let s = score(&m, &y, &fit.beta_hat).unwrap();
    assert!(s.iter().all(|v| v.abs() < 1e-4), "{s:?}");
    // the weighting matrix inverts the negative Hessian
    let prod = fit.sigma_weight.matmul(&fit.neg_hess);
    assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-6);
}

#[test]
fn long_series_fit_concentrates() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 20_000, 12).unwrap().obs;
    let (b, _, _) = maximize(&m, &y, &default_starts(m.lower(), m.upper())).unwrap();
    assert!((b[0] - 0.7).abs() < 0.03 && (b[1] - 0.1).abs() < 0.03 && (b[2] - 1.0).abs() < 0.05, "{b:?}");
}

#[test]
fn linear_loglik_has_exact_score() {
    let a = [1.5, -2.0, 0.25];
    let m = Synthetic { f: move |b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum(), lower: vec![-5.0; 3], upper: vec![5.0; 3] };
    let s = score(&m, &[0.0], &[0.3, 1.2, -4.0]).unwrap();
    for j in 0..3 {
        assert!((s[j] - a[j]).abs() < 1e-10);
    }
}

#[test]
fn score_matches_richardson_oracle() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 400, 13).unwrap().obs;
    let mut rng = ssm_abc::rng::Streams::new(5).stream(0);
    let box_ = ssm_abc::models::UniformPrior::new(vec![0.3, -0.2, 0.6], vec![0.9, 0.4, 1.5], None).unwrap();
    for _ in 0..20 {
        let beta = box_.sample(&mut rng).unwrap();
        let s = score(&m, &y, &beta).unwrap();
        for j in 0..3 {
            let h = 1e-3;
            let f = |d: f64| {
                let mut b = beta.clone();
                b[j] += d;
                m.loglik(&y, &b) / 400.0
            };
            let oracle = (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
            assert!((s[j] - oracle).abs() < 1e-6, "{beta:?} {j}: {} vs {oracle}", s[j]);
        }
    }
}

#[test]
fn prepared_score_matches_direct() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 400, 14).unwrap().obs;
    let z = simulate_lg(&paper(), 400, 15).unwrap().obs;
    let beta = vec![0.65, 0.12, 0.95];
    let ev = ScoreEvaluator::new(&m, beta.clone(), 400);
    let a = ev.eval(&z).unwrap();
    let b = score(&m, &z, &beta).unwrap();
    for j in 0..3 {
        assert!((a[j] - b[j]).abs() < 1e-8, "{a:?} {b:?}");
    }
    assert_eq!(ev.eval(&y).unwrap(), ev.eval(&y).unwrap());
}

#[test]
fn one_dimensional_integral_is_the_loglik() {
    let m = Synthetic { f: |b: &[f64]| -3.0 * b[0] * b[0], lower: vec![-1.0], upper: vec![1.0] };
    assert_eq!(integrated_loglik(&m, &[0.0], 0, 0.4, 15).unwrap(), -3.0 * 0.4 * 0.4);
}

#[test]
fn separable_marginal_score() {
    let f = |x: f64| -2.0 * (x - 0.1).powi(2) + x.sin();
    let fprime = |x: f64| -4.0 * (x - 0.1) + x.cos();
    let m = Synthetic { f: move |b: &[f64]| f(b[0]) + (-(b[1] * b[1]) * 7.0).exp() * 3.0 - b[2].powi(4), lower: vec![-1.0; 3], upper: vec![1.0; 3] };
    for n in [15, 30] {
        for x in [-0.5, 0.0, 0.35] {
            let s = marginal_score(&m, &[0.0], 0, x, n).unwrap();
            assert!((s - fprime(x)).abs() < 1e-6, "{n} {x}: {s}");
        }
    }
}

#[test]
fn marginal_score_invariant_to_likelihood_offset() {
    let m = lg_aux();
    struct Offset<'a>(&'a LgAux<f64>);
    impl AuxiliaryModel<f64> for Offset<'_> {
        fn dim(&self) -> usize {
            3
        }
        fn lower(&self) -> &[f64] {
            self.0.lower()
        }
        fn upper(&self) -> &[f64] {
            self.0.upper()
        }
        fn loglik(&self, z: &[f64], b: &[f64]) -> f64 {
            self.0.loglik(z, b) + 500.0
        }
    }
    let z = simulate_lg(&paper(), 400, 16).unwrap().obs;
    for j in 0..3 {
        let a = marginal_score(&m, &z, j, [0.7, 0.1, 1.0][j], 15).unwrap();
        let b = marginal_score(&Offset(&m), &z, j, [0.7, 0.1, 1.0][j], 15).unwrap();
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn lg_marginal_score_near_observed_peak() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 400, 17).unwrap().obs;
    for j in 0..3 {
        let phi = marginal_mle(&m, &y, j, 15, 200).unwrap();
        let at = marginal_score(&m, &y, j, phi, 15).unwrap();
        assert!(at.abs() < 1e-3, "coordinate {j}: score {at} at {phi}");
        let left = marginal_score(&m, &y, j, phi - 0.05, 15).unwrap();
        let right = marginal_score(&m, &y, j, phi + 0.05, 15).unwrap();
        assert!(left > 0.0 && right < 0.0, "coordinate {j}: {left} {right}");
        let prepared = MarginalScorer::new(&m, j, phi, 15, 400);
        assert!((prepared.eval(&y).unwrap() - at).abs() < 1e-8);
    }
}

#[test]
fn lg_marginal_score_nuisance_refinement() {
    let m = lg_aux();
    let y = simulate_lg(&paper(), 400, 18).unwrap().obs;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let rho = 0.55 + 0.03 * k as f64;
        let a = marginal_score(&m, &y, 0, rho, DEFAULT_NUISANCE_POINTS).unwrap();
        let b = marginal_score(&m, &y, 0, rho, 2 * DEFAULT_NUISANCE_POINTS).unwrap();
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 1e-3, "max change {worst}");
}

#[test]
fn heston_fit_satisfies_first_order_condition() {
    let prior = heston_default_prior::<f64>();
    let m = HestonAukfAux { lower: prior.lower, upper: prior.upper };
    let p = HestonParams::new(0.92, 0.0024, 0.062).unwrap();
    let r = simulate_heston(&p, 400, 2024).unwrap().obs;
    let fit = fit_mle(&m, &r, &default_starts(m.lower(), m.upper())).unwrap();
    assert!(fit.converged);
    let b = &fit.beta_hat;
    for j in 0..3 {
        assert!(b[j] > m.lower()[j] && b[j] < m.upper()[j], "{b:?}");
        // delta's curvature varies on the scale of delta itself, so the
        // derivative is taken with steps far below the score's own
        let h = 1e-4 * (m.upper()[j] - m.lower()[j]);
        let slope = |h: f64| {
            let (mut up, mut down) = (b.clone(), b.clone());
            up[j] += h;
            down[j] -= h;
            (m.loglik(&r, &up) - m.loglik(&r, &down)) / (2.0 * h * r.len() as f64)
        };
        let d = (4.0 * slope(h / 2.0) - slope(h)) / 3.0;
        assert!(d.abs() < 1e-4, "coordinate {j}: {d} at {b:?}");
    }
    let prod = fit.sigma_weight.matmul(&fit.neg_hess);
    assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-6);
}
