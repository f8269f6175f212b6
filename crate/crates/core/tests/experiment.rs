use ssm_abc::abc::{accept_count, Engine};
use ssm_abc::experiment::{simulate_observed, table1, ExperimentConfig, Method, Setup, TABLE1_ROWS};

fn quiet(_: &str) {}

fn small_lg(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::lg_default(seed);
    c.len = 100;
    c.abc.replications = 1_000;
    c.abc.accept_quantile = 0.05;
    c.grids.posterior_points = Some(30);
    c.grids.nuisance_points = 6;
    c.grids.marginal_mle_points = 40;
    c.runs = 2;
    c
}

fn small_heston(seed: u64, unknown: Vec<usize>) -> ExperimentConfig {
    let mut c = ExperimentConfig::heston_default(seed);
    c.len = 100;
    c.unknown = unknown;
    c.abc.replications = 300;
    c.abc.accept_quantile = 0.1;
    c.abc.pilot_quantile = 0.2;
    c.grids.posterior_points = Some(8);
    c.grids.filter_points = 20;
    c.grids.nuisance_points = 4;
    c.grids.marginal_mle_points = 12;
    c.runs = 1;
    c
}

#[test]
fn lg_experiment_has_every_method_and_parameter() {
    let mut c = small_lg(3);
    c.methods.push(Method::Mle);
    let engine = Engine::new(0).unwrap();
    let y = simulate_observed(&c).unwrap().obs;
    assert_eq!(y.len(), 100);
    let out = Setup::new(&c).unwrap().run(&engine, &y, c.runs, &quiet).unwrap();
    assert_eq!(out.references.exact.len(), 3);
    assert!(out.references.approximate.is_empty());
    assert_eq!(out.reports.len(), 5);
    for r in &out.reports {
        assert_eq!(r.params.len(), 3, "{}", r.method);
        for p in &r.params {
            assert_eq!(p.rmse.len(), 2);
            assert!(p.rmse.iter().chain(&p.rmse_mass).all(|v| v.is_finite() && *v >= 0.0));
            let mean = p.rmse.iter().sum::<f64>() / 2.0;
            assert!((p.mean_rmse - mean).abs() <= 1e-12);
        }
    }
    let k = accept_count(0.05, 1_000);
    for t in &out.first_run {
        assert_eq!(t.run.accepted.len(), k);
        assert_eq!(t.run.draws.len(), 1_000);
    }
    // joint methods select once, marginal ones once per parameter
    assert_eq!(out.first_run.len(), 1 + 1 + 3 + 3 + 1);
    assert_eq!(out.details.len(), 2 * out.first_run.len());
    let fit = out.auxiliary.unwrap();
    assert!(fit.marginal_phi_hat.iter().all(Option::is_some));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let c = small_lg(4);
    let y = simulate_observed(&c).unwrap().obs;
    let setup = Setup::new(&c).unwrap();
    let a = setup.run(&Engine::new(1).unwrap(), &y, 2, &quiet).unwrap();
    let b = setup.run(&Engine::new(4).unwrap(), &y, 2, &quiet).unwrap();
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.details, b.details);
    assert_eq!(a.first_run, b.first_run);
}

#[test]
fn a_method_ignores_its_neighbours() {
    let mut alone = small_lg(5);
    alone.methods = vec![Method::SummEuclid];
    let mut together = small_lg(5);
    together.methods = vec![Method::JointScore, Method::SummEuclid];
    let engine = Engine::new(0).unwrap();
    let y = simulate_observed(&alone).unwrap().obs;
    let a = Setup::new(&alone).unwrap().run(&engine, &y, 1, &quiet).unwrap();
    let b = Setup::new(&together).unwrap().run(&engine, &y, 1, &quiet).unwrap();
    let pick = |o: &ssm_abc::experiment::ExperimentOutcome| {
        o.reports.iter().find(|r| r.method == "summ-euclid").cloned().unwrap()
    };
    assert_eq!(pick(&a), pick(&b));
}

#[test]
fn observed_series_depends_only_on_seed() {
    let a = simulate_observed(&small_lg(9)).unwrap();
    let mut other = small_lg(9);
    other.methods = vec![Method::Fp];
    other.abc.replications = 5_000;
    assert_eq!(a, simulate_observed(&other).unwrap());
    assert_ne!(a.obs, simulate_observed(&small_lg(10)).unwrap().obs);
}

#[test]
fn longer_simulations_are_supported() {
    let mut c = small_lg(6);
    c.abc.multiplier = 2;
    c.methods = vec![Method::JointScore, Method::SummEuclid];
    let engine = Engine::new(0).unwrap();
    let y = simulate_observed(&c).unwrap().obs;
    let out = Setup::new(&c).unwrap().run(&engine, &y, 1, &quiet).unwrap();
    assert!(out.reports.iter().all(|r| r.params.iter().all(|p| p.mean_rmse.is_finite())));
}

#[test]
fn wrong_observed_length_is_rejected() {
    let c = small_lg(7);
    let err = Setup::new(&c).unwrap().run(&Engine::new(1).unwrap(), &[0.0; 50], 1, &quiet).unwrap_err();
    assert!(err.is_config());
}

#[test]
fn heston_two_stage_truncates_inside_the_prior() {
    let c = small_heston(11, vec![0, 2]);
    assert!(c.two_stage());
    let engine = Engine::new(0).unwrap();
    let y = simulate_observed(&c).unwrap().obs;
    let setup = Setup::new(&c).unwrap();
    let out = setup.run(&engine, &y, 1, &quiet).unwrap();
    assert_eq!(out.references.approximate.len(), 2);
    for d in &out.details {
        let b = d.truncated_prior.as_ref().expect("two-stage passes record their prior");
        for k in 0..2 {
            assert!(b.lower[k] >= setup.prior.lower[k] && b.upper[k] <= setup.prior.upper[k]);
            assert!(b.lower[k] < b.upper[k]);
        }
    }
    for t in &out.first_run {
        for phi in t.run.accepted_draws() {
            assert!(setup.prior.contains(&phi));
        }
    }
    for r in &out.reports {
        assert!(r.params.iter().all(|p| p.mean_rmse.is_finite()), "{}", r.method);
    }
}

#[test]
fn table_smoke_is_well_formed_and_repeatable() {
    let mut c = small_heston(12, vec![0, 1, 2]);
    c.table1 = Some(ssm_abc::experiment::Table1Settings {
        panels: vec!["A".into(), "B".into()],
        runs: 1,
        runs_three_unknowns: 1,
    });
    let engine = Engine::new(0).unwrap();
    let t = table1(&c, &engine, &quiet).unwrap();
    assert_eq!(t.columns.len(), 5);
    assert_eq!(t.rows.len(), TABLE1_ROWS.len());
    for row in &t.rows {
        assert_eq!(row.mass.len(), 5);
        assert!(row.mass.iter().chain(&row.density).all(|v| v.is_some_and(f64::is_finite)), "{}", row.label);
    }
    assert_eq!(t.column("B", 2), Some(4));
    let again = table1(&c, &engine, &quiet).unwrap();
    assert_eq!(t.rows, again.rows);
}
