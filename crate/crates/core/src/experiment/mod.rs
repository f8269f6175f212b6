//! End-to-end experiments: observed data, reference posteriors, the
//! auxiliary fit, repeated ABC runs and their accuracy.
//!
//! All randomness derives from the configured seed. The observed series uses
//! its own stream family. Run `i` simulates one shared pool from family
//! `ABC_RUN/i`; in two-stage mode each method and target gets its own pilot
//! and final families under `PILOT/i` and `ABC_RUN/i`. Either way a method's
//! results depend neither on the other configured methods nor on the worker
//! count.

mod config;
mod table1;

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::abc::{select, simulate_pool, AbcRun, Criterion, Engine, Simulator, Statistic};
use crate::auxiliary::{
    default_starts, fit_mle, marginal_mle, marginal_score, maximize, AuxiliaryModel, FittedAux, HestonAukfAux, LgAux,
    MarginalScorer, Restricted, ScoreEvaluator,
};
use crate::error::{Error, Result};
use crate::eval::{exact_posterior, posterior_axes, replicate, rmse, rmse_mass, MethodDraws, PosteriorGrid, ReplicationReport};
use crate::filters::{aukf_loglik, grid_filter_loglik, kalman_loglik, log_squared_returns, GridSpec, Transitions};
use crate::models::{
    ar1_summary_stats, simulate_heston_with, simulate_lg_with, HestonParams, LgParams, SimulatedSeries, UniformPrior,
};
use crate::rng::{domain, StreamRng, Streams};

pub use config::{
    panel_unknowns, AbcSettings, ExperimentConfig, GridSettings, Method, ModelKind, PriorBox, Table1Settings,
    PARAM_NAMES, SCHEMA_VERSION,
};
pub use table1::{table1, Table1, Table1Column, Table1Row, TABLE1_ROWS};

/// Progress messages for a human watching the run.
pub type Progress<'a> = &'a (dyn Fn(&str) + Sync);

/// The observed series of `config`, from its own stream family.
pub fn simulate_observed(config: &ExperimentConfig) -> Result<SimulatedSeries<f64>> {
    let mut rng = Streams::new(config.seed).child(domain::OBSERVED, 0).stream(0);
    match config.model {
        ModelKind::Lg => simulate_lg_with(&LgParams::from_phi(&config.true_params, config.sigma_e()?)?, config.len, &mut rng),
        ModelKind::Heston => simulate_heston_with(&HestonParams::from_phi(&config.true_params)?, config.len, &mut rng),
    }
}

/// The model side of an experiment: prior, simulator and auxiliary model.
pub struct Setup {
    pub config: ExperimentConfig,
    /// Prior over the unknown coordinates.
    pub prior: UniformPrior<f64>,
    aux: Box<dyn AuxiliaryModel<f64>>,
    sigma_e: f64,
}

impl std::fmt::Debug for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Setup").field("config", &self.config).field("prior", &self.prior).finish_non_exhaustive()
    }
}

/// Summary of the auxiliary fit to the observed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliarySummary {
    pub beta_hat: Vec<f64>,
    pub sigma_weight: Vec<Vec<f64>>,
    pub neg_hess: Vec<Vec<f64>>,
    pub scaled_loglik: f64,
    pub converged: bool,
    /// Maximizer of the integrated likelihood per unknown coordinate, where
    /// the marginal score is in use.
    pub marginal_phi_hat: Vec<Option<f64>>,
}

/// The auxiliary fit with the weighting matrices in usable form.
#[derive(Debug, Clone)]
pub struct AuxiliaryFit {
    pub fitted: FittedAux<f64>,
    pub marginal_phi_hat: Vec<Option<f64>>,
}

impl AuxiliaryFit {
    pub fn summary(&self) -> AuxiliarySummary {
        AuxiliarySummary {
            beta_hat: self.fitted.beta_hat.clone(),
            sigma_weight: self.fitted.sigma_weight.to_rows(),
            neg_hess: self.fitted.neg_hess.to_rows(),
            scaled_loglik: self.fitted.scaled_loglik,
            converged: self.fitted.converged,
            marginal_phi_hat: self.marginal_phi_hat.clone(),
        }
    }
}

/// Reference posteriors and the approximate-likelihood posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    /// Exact marginals, `param_index` in full coordinates.
    pub exact: Vec<PosteriorGrid>,
    pub approximate: Vec<ApproxPosterior>,
}

impl References {
    pub fn exact(&self, j: usize) -> Option<&PosteriorGrid> {
        self.exact.iter().find(|g| g.param_index == j)
    }
}

/// Posterior from normalizing an approximate likelihood on the reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxPosterior {
    pub method: Method,
    pub grids: Vec<PosteriorGrid>,
    pub params: Vec<ApproxParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxParam {
    pub param_index: usize,
    pub rmse: f64,
    pub rmse_mass: f64,
    pub percentiles: [f64; 5],
}

/// One rejection pass of one method. Marginal methods have one per unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRun {
    pub method: Method,
    /// Position in the unknown coordinates for marginal methods.
    pub target: Option<usize>,
    pub run: AbcRun,
}

/// Per-pass bookkeeping kept for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDetail {
    pub run: usize,
    pub method: Method,
    /// Full coordinate index of the target for marginal methods.
    pub param_index: Option<usize>,
    pub epsilon: f64,
    pub accepted: usize,
    pub nonfinite: usize,
    pub warnings: Vec<String>,
    /// Prior box of the final pass after pilot truncation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_prior: Option<BoxBounds>,
}

/// Prior box over the unknown coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub reference_seconds: f64,
    pub auxiliary_seconds: f64,
    pub abc_seconds: f64,
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub unknown: Vec<usize>,
    pub auxiliary: Option<AuxiliaryFit>,
    pub references: References,
    pub reports: Vec<ReplicationReport>,
    pub details: Vec<RunDetail>,
    /// All passes of run 0, for writing draws and posterior estimates.
    pub first_run: Vec<TargetRun>,
    pub timings: Timings,
}

/// Which statistic of a simulated series a method matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StatKind {
    Summary,
    Score,
    Mle,
    Marginal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Likelihood {
    Exact,
    Aukf,
    Euler,
}

struct Matcher {
    method: Method,
    target: Option<usize>,
    stat: usize,
    criterion: Criterion,
    observed: Vec<f64>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let full = config.full_prior()?;
        let prior = config.prior()?;
        let truth = config.true_params.to_vec();
        let unknown = config.unknown.clone();
        let (aux, sigma_e): (Box<dyn AuxiliaryModel<f64>>, f64) = match config.model {
            ModelKind::Lg => {
                let sigma_e = config.sigma_e()?;
                let inner = LgAux::new(sigma_e, full.lower.clone(), full.upper.clone());
                (Box::new(Restricted::new(inner, unknown, truth)), sigma_e)
            }
            ModelKind::Heston => {
                let inner = HestonAukfAux { lower: full.lower.clone(), upper: full.upper.clone() };
                (Box::new(Restricted::new(inner, unknown, truth)), f64::NAN)
            }
        };
        Ok(Self { config: config.clone(), prior, aux, sigma_e })
    }

    pub fn unknown(&self) -> &[usize] {
        &self.config.unknown
    }

    pub fn auxiliary_model(&self) -> &dyn AuxiliaryModel<f64> {
        self.aux.as_ref()
    }

    /// Full parameter vector with the unknown coordinates set to `phi`.
    pub fn embed(&self, phi: &[f64]) -> Vec<f64> {
        let mut full = self.config.true_params.to_vec();
        for (&i, &v) in self.config.unknown.iter().zip(phi) {
            full[i] = v;
        }
        full
    }

    fn sim_len(&self) -> usize {
        self.config.len * self.config.abc.multiplier
    }

    /// The series the summary statistics are computed on: `ln r^2` for
    /// returns, the observations themselves otherwise.
    fn summary_series(&self, z: &[f64]) -> Vec<f64> {
        match self.config.model {
            ModelKind::Lg => z.to_vec(),
            ModelKind::Heston => log_squared_returns(z),
        }
    }

    fn summary_stats(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(ar1_summary_stats(&self.summary_series(z))?.s.to_vec())
    }

    /// Exact log-likelihood of `y` at the unknown coordinates `phi`;
    /// `-inf` where it is undefined.
    pub fn exact_loglik(&self, y: &[f64], phi: &[f64]) -> f64 {
        self.loglik_with(y, phi, Likelihood::Exact)
    }

    fn loglik_with(&self, y: &[f64], phi: &[f64], which: Likelihood) -> f64 {
        let full = self.embed(phi);
        let n = self.config.grids.filter_points;
        let ll = match self.config.model {
            ModelKind::Lg => LgParams::from_phi(&full, self.sigma_e).and_then(|p| kalman_loglik(y, &p)),
            ModelKind::Heston => HestonParams::from_phi(&full).and_then(|p| match which {
                Likelihood::Aukf => aukf_loglik(y, &p),
                Likelihood::Euler => grid_filter_loglik(y, &p, Transitions::Euler, &GridSpec::heston_default(&p, n)?),
                Likelihood::Exact => grid_filter_loglik(y, &p, Transitions::Exact, &GridSpec::heston_default(&p, n)?),
            }),
        };
        ll.ok().filter(|v| !v.is_nan()).unwrap_or(f64::NEG_INFINITY)
    }

    fn posterior(&self, engine: &Engine, y: &[f64], which: Likelihood) -> Result<Vec<PosteriorGrid>> {
        let axes = posterior_axes(&self.prior, self.config.posterior_points());
        let grids = exact_posterior(engine, &self.prior, &axes, |phi| self.loglik_with(y, phi, which))?;
        Ok(grids
            .into_iter()
            .map(|g| PosteriorGrid { param_index: self.config.unknown[g.param_index], ..g })
            .collect())
    }

    /// The exact posterior marginals and, for Heston, the AUKF and Euler
    /// posteriors scored against them.
    pub fn references(&self, engine: &Engine, y: &[f64]) -> Result<References> {
        let exact = self.posterior(engine, y, Likelihood::Exact)?;
        let mut approximate = Vec::new();
        for method in self.config.methods.iter().copied().filter(|m| !m.is_abc()) {
            let which = if method == Method::Aukf { Likelihood::Aukf } else { Likelihood::Euler };
            let grids = self.posterior(engine, y, which)?;
            let params = grids
                .iter()
                .zip(&exact)
                .map(|(g, e)| {
                    Ok(ApproxParam {
                        param_index: e.param_index,
                        rmse: rmse(g, e)?,
                        rmse_mass: rmse_mass(g, e)?,
                        percentiles: g.percentiles(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            approximate.push(ApproxPosterior { method, grids, params });
        }
        Ok(References { exact, approximate })
    }

    fn needs_fit(&self) -> bool {
        self.config.abc_methods().any(|m| matches!(m, Method::JointScore | Method::Mle | Method::MarginalScore))
    }

    /// Fits the auxiliary model to `y`, and maximizes the integrated
    /// likelihood per coordinate when the marginal score is configured.
    pub fn fit_auxiliary(&self, engine: &Engine, y: &[f64]) -> Result<AuxiliaryFit> {
        let aux = self.aux.as_ref();
        let fitted = fit_mle(aux, y, &default_starts(aux.lower(), aux.upper()))?;
        let d = self.prior.dim();
        let marginal_phi_hat = if self.config.methods.contains(&Method::MarginalScore) {
            let g = &self.config.grids;
            engine
                .map(d, |k| marginal_mle(aux, y, k, g.nuisance_points, g.marginal_mle_points))?
                .into_iter()
                .map(Some)
                .collect()
        } else {
            vec![None; d]
        };
        Ok(AuxiliaryFit { fitted, marginal_phi_hat })
    }

    /// Computes references and the auxiliary fit, then runs every ABC method
    /// `n_runs` times on `y` and scores the runs.
    pub fn run(&self, engine: &Engine, y: &[f64], n_runs: usize, progress: Progress<'_>) -> Result<ExperimentOutcome> {
        if y.len() != self.config.len {
            return Err(Error::Config(format!("observed series has {} points, config says T = {}", y.len(), self.config.len)));
        }
        let mut timings = Timings::default();
        let clock = Instant::now();
        progress("computing reference posteriors");
        let references = self.references(engine, y)?;
        timings.reference_seconds = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let auxiliary = if self.needs_fit() {
            progress("fitting the auxiliary model");
            Some(self.fit_auxiliary(engine, y)?)
        } else {
            None
        };
        timings.auxiliary_seconds = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let (reports, details, first_run) = if self.config.abc_methods().next().is_some() {
            self.replicate_abc(engine, y, auxiliary.as_ref(), &references, n_runs, progress)?
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };
        timings.abc_seconds = clock.elapsed().as_secs_f64();
        Ok(ExperimentOutcome {
            unknown: self.config.unknown.clone(),
            auxiliary,
            references,
            reports,
            details,
            first_run,
            timings,
        })
    }

    fn replicate_abc(
        &self,
        engine: &Engine,
        y: &[f64],
        fit: Option<&AuxiliaryFit>,
        references: &References,
        n_runs: usize,
        progress: Progress<'_>,
    ) -> Result<(Vec<ReplicationReport>, Vec<RunDetail>, Vec<TargetRun>)> {
        let aux = self.aux.as_ref();
        let d = self.prior.dim();
        let len = self.sim_len();
        let g = &self.config.grids;
        let abc = &self.config.abc;

        let mut kinds: Vec<StatKind> = Vec::new();
        let mut stat_of = |k: StatKind| match kinds.iter().position(|&x| x == k) {
            Some(i) => i,
            None => {
                kinds.push(k);
                kinds.len() - 1
            }
        };
        let fit_err = || Error::Config("auxiliary fit missing".into());
        let mut matchers = Vec::new();
        for method in self.config.abc_methods() {
            match method {
                Method::SummEuclid => matchers.push(Matcher {
                    method,
                    target: None,
                    stat: stat_of(StatKind::Summary),
                    criterion: Criterion::SummEuclid,
                    observed: self.summary_stats(y)?,
                }),
                Method::Fp => {
                    for k in 0..d {
                        matchers.push(Matcher {
                            method,
                            target: Some(k),
                            stat: stat_of(StatKind::Summary),
                            criterion: Criterion::Fp { target: k, split_pilot: abc.split_pilot },
                            observed: self.summary_stats(y)?,
                        });
                    }
                }
                Method::JointScore => matchers.push(Matcher {
                    method,
                    target: None,
                    stat: stat_of(StatKind::Score),
                    criterion: Criterion::Quadratic(fit.ok_or_else(fit_err)?.fitted.sigma_weight.clone()),
                    observed: vec![0.0; d],
                }),
                Method::Mle => {
                    let f = &fit.ok_or_else(fit_err)?.fitted;
                    matchers.push(Matcher {
                        method,
                        target: None,
                        stat: stat_of(StatKind::Mle),
                        criterion: Criterion::Quadratic(f.neg_hess.clone()),
                        observed: f.beta_hat.clone(),
                    })
                }
                Method::MarginalScore => {
                    let f = fit.ok_or_else(fit_err)?;
                    for k in 0..d {
                        let phi_k = f.marginal_phi_hat[k].ok_or_else(fit_err)?;
                        matchers.push(Matcher {
                            method,
                            target: Some(k),
                            stat: stat_of(StatKind::Marginal(k)),
                            criterion: Criterion::Absolute,
                            observed: vec![marginal_score(aux, y, k, phi_k, g.nuisance_points)?],
                        });
                    }
                }
                Method::Aukf | Method::Euler => {}
            }
        }

        let score_eval = fit.map(|f| ScoreEvaluator::new(aux, f.fitted.beta_hat.clone(), len));
        let scorers: Vec<Option<MarginalScorer<'_, f64, dyn AuxiliaryModel<f64>>>> = (0..d)
            .map(|k| {
                fit.and_then(|f| f.marginal_phi_hat[k])
                    .map(|phi| MarginalScorer::new(aux, k, phi, g.nuisance_points, len))
            })
            .collect();
        let starts = default_starts(aux.lower(), aux.upper());
        let statistics: Vec<Box<dyn Statistic + '_>> = kinds
            .iter()
            .map(|&kind| -> Box<dyn Statistic + '_> {
                match kind {
                    StatKind::Summary => Box::new(move |z: &[f64]| self.summary_stats(z)),
                    StatKind::Score => {
                        let ev = score_eval.as_ref();
                        Box::new(move |z: &[f64]| ev.ok_or_else(fit_err)?.eval(z))
                    }
                    StatKind::Mle => {
                        let starts = &starts;
                        Box::new(move |z: &[f64]| maximize(aux, z, starts).map(|m| m.0))
                    }
                    StatKind::Marginal(k) => {
                        let sc = scorers[k].as_ref();
                        Box::new(move |z: &[f64]| Ok(vec![sc.ok_or_else(fit_err)?.eval(z)?]))
                    }
                }
            })
            .collect();
        let statistics: Vec<&dyn Statistic> = statistics.iter().map(|s| s.as_ref()).collect();

        let two_stage = self.config.two_stage();
        let root = Streams::new(self.config.seed);
        let side: Mutex<BTreeMap<usize, (Vec<RunDetail>, Option<Vec<TargetRun>>)>> = Mutex::new(BTreeMap::new());
        let done = Mutex::new(0usize);
        let reports = replicate(engine, n_runs, &references.exact, |i| {
            let runs = if two_stage {
                self.two_stage_runs(engine, &root, i, &matchers, &statistics)?
            } else {
                self.single_stage_runs(engine, &root, i, &matchers, &statistics)?
            };
            let draws = self.method_draws(&runs);
            let details = runs
                .iter()
                .map(|(t, truncated)| RunDetail {
                    run: i,
                    method: t.method,
                    param_index: t.target.map(|k| self.config.unknown[k]),
                    epsilon: t.run.epsilon,
                    accepted: t.run.accepted.len(),
                    nonfinite: t.run.nonfinite,
                    warnings: t.run.warnings.clone(),
                    truncated_prior: truncated.as_ref().map(|p| BoxBounds { lower: p.lower.clone(), upper: p.upper.clone() }),
                })
                .collect();
            let keep = (i == 0).then(|| runs.into_iter().map(|(t, _)| t).collect());
            side.lock().map_err(|_| Error::Numerical("worker panicked".into()))?.insert(i, (details, keep));
            let mut n = done.lock().map_err(|_| Error::Numerical("worker panicked".into()))?;
            *n += 1;
            progress(&format!("ABC run {} of {n_runs} done", *n));
            Ok(draws)
        })?;
        let side = side.into_inner().map_err(|_| Error::Numerical("worker panicked".into()))?;
        let mut details = Vec::new();
        let mut first_run = Vec::new();
        for (_, (d, keep)) in side {
            details.extend(d);
            if let Some(k) = keep {
                first_run = k;
            }
        }
        Ok((reports, details, first_run))
    }

    /// One pool shared by every method.
    fn single_stage_runs(
        &self,
        engine: &Engine,
        root: &Streams,
        run: usize,
        matchers: &[Matcher],
        statistics: &[&dyn Statistic],
    ) -> Result<Vec<(TargetRun, Option<UniformPrior<f64>>)>> {
        let streams = root.child(domain::ABC_RUN, run as u64);
        let pool = simulate_pool(engine, &streams, self.config.abc.replications, &self.prior, self, statistics)?;
        matchers
            .iter()
            .map(|m| {
                let (dist, warnings) = m.criterion.distances(&m.observed, &pool.draws, &pool.stats[m.stat])?;
                let run = select(pool.draws.clone(), dist, self.config.abc.accept_quantile, warnings)?;
                Ok((TargetRun { method: m.method, target: m.target, run }, None))
            })
            .collect()
    }

    /// A pilot pass per method and target, then a final pass on the prior
    /// truncated to the pilot's accepted box.
    fn two_stage_runs(
        &self,
        engine: &Engine,
        root: &Streams,
        run: usize,
        matchers: &[Matcher],
        statistics: &[&dyn Statistic],
    ) -> Result<Vec<(TargetRun, Option<UniformPrior<f64>>)>> {
        let abc = &self.config.abc;
        let mut out = Vec::with_capacity(matchers.len());
        for m in matchers {
            let family = (m.method as u64, m.target.unwrap_or(0) as u64);
            let stat = [statistics[m.stat]];
            let pass = |streams: &Streams, prior: &UniformPrior<f64>, q: f64| -> Result<AbcRun> {
                let pool = simulate_pool(engine, streams, abc.replications, prior, self, &stat)?;
                let (dist, warnings) = m.criterion.distances(&m.observed, &pool.draws, &pool.stats[0])?;
                select(pool.draws, dist, q, warnings)
            };
            let pilot_streams = root.child(domain::PILOT, run as u64).child(family.0, family.1);
            let pilot = pass(&pilot_streams, &self.prior, abc.pilot_quantile)?;
            let truncated = self.prior.truncated_to(&pilot.accepted_draws(), abc.pilot_inflate);
            let final_streams = root.child(domain::ABC_RUN, run as u64).child(family.0, family.1);
            let mut result = pass(&final_streams, &truncated, abc.accept_quantile)?;
            result.warnings.splice(0..0, pilot.warnings.iter().map(|w| format!("pilot: {w}")));
            out.push((TargetRun { method: m.method, target: m.target, run: result }, Some(truncated)));
        }
        Ok(out)
    }

    /// Accepted values per method and parameter; marginal methods take
    /// coordinate `k` from the pass that targeted it.
    fn method_draws(&self, runs: &[(TargetRun, Option<UniformPrior<f64>>)]) -> Vec<MethodDraws> {
        let mut out: Vec<MethodDraws> = Vec::new();
        for (t, _) in runs {
            let name = t.method.name().to_string();
            let columns: Vec<(usize, Vec<f64>)> = match t.target {
                Some(k) => vec![(self.config.unknown[k], t.run.accepted_column(k))],
                None => (0..self.prior.dim()).map(|k| (self.config.unknown[k], t.run.accepted_column(k))).collect(),
            };
            match out.iter_mut().find(|m| m.method == name) {
                Some(m) => m.columns.extend(columns),
                None => out.push(MethodDraws { method: name, columns }),
            }
        }
        out
    }
}

impl Simulator for Setup {
    fn simulate(&self, phi: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let full = self.embed(phi);
        let len = self.sim_len();
        let series = match self.config.model {
            ModelKind::Lg => simulate_lg_with(&LgParams::from_phi(&full, self.sigma_e)?, len, rng)?,
            ModelKind::Heston => simulate_heston_with(&HestonParams::from_phi(&full)?, len, rng)?,
        };
        Ok(series.obs)
    }
}

/// Runs `config` end to end on its own observed series.
pub fn run_experiment(config: &ExperimentConfig, engine: &Engine, progress: Progress<'_>) -> Result<ExperimentOutcome> {
    let setup = Setup::new(config)?;
    let observed = simulate_observed(config)?;
    setup.run(engine, &observed.obs, config.runs, progress)
}
