//! Rejection ABC: draw from the prior, simulate, compare statistics, keep the
//! closest fraction.
//!
//! Simulation and statistic evaluation run in parallel, each replication on
//! its own random stream. Distances that need the whole pool (variance
//! weights, the regression summary) and the final selection are computed
//! afterwards in a single deterministic pass.

pub mod distance;
mod engine;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::UniformPrior;
use crate::rng::{StreamRng, Streams};

pub use distance::{
    dist_joint_score, dist_marginal_score, dist_mle, dist_summ_euclid, fp_distance, fp_fit, pool_variances, Criterion,
    FpRegression,
};
pub use engine::Engine;

/// How simulated statistics are compared with the observed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    SummEuclid,
    Fp,
    JointScore,
    MarginalScore,
    Mle,
}

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::SummEuclid => "summ-euclid",
            DistanceKind::Fp => "fp",
            DistanceKind::JointScore => "joint-score",
            DistanceKind::MarginalScore => "marginal-score",
            DistanceKind::Mle => "mle",
        }
    }

    /// Methods that select separately for each parameter.
    pub fn is_marginal(&self) -> bool {
        matches!(self, DistanceKind::Fp | DistanceKind::MarginalScore)
    }
}

impl std::fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            DistanceKind::SummEuclid,
            DistanceKind::Fp,
            DistanceKind::JointScore,
            DistanceKind::MarginalScore,
            DistanceKind::Mle,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown distance kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcConfig {
    pub replications: usize,
    pub accept_quantile: f64,
    pub seed: u64,
    pub distance: DistanceKind,
    /// Coordinate matched by marginal methods.
    pub target_param: Option<usize>,
    /// Simulated series are this many times the observed length.
    pub multiplier: usize,
    /// Fit the regression summary on the first half of the pool only.
    pub split_pilot: bool,
}

impl AbcConfig {
    pub fn new(replications: usize, accept_quantile: f64, seed: u64, distance: DistanceKind) -> Self {
        Self { replications, accept_quantile, seed, distance, target_param: None, multiplier: 1, split_pilot: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(Error::Config(format!("need at least 100 replications, got {}", self.replications)));
        }
        if !(self.accept_quantile > 0.0 && self.accept_quantile <= 1.0) {
            return Err(Error::Config(format!("accept quantile must be in (0, 1], got {}", self.accept_quantile)));
        }
        if self.multiplier == 0 {
            return Err(Error::Config("simulation length multiplier must be at least 1".into()));
        }
        if self.distance.is_marginal() && self.target_param.is_none() {
            return Err(Error::Config(format!("{} needs a target parameter", self.distance)));
        }
        Ok(())
    }

    pub fn accept_count(&self) -> usize {
        accept_count(self.accept_quantile, self.replications)
    }
}

/// `ceil(q R)`, ignoring round-off in the product.
pub fn accept_count(q: f64, r: usize) -> usize {
    let x = q * r as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * x.max(1.0) { nearest } else { x.ceil() };
    (k as usize).clamp(1, r)
}

/// Generates a simulated series at a parameter draw.
pub trait Simulator: Sync {
    fn simulate(&self, phi: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>>;
}

impl<G: Fn(&[f64], &mut StreamRng) -> Result<Vec<f64>> + Sync> Simulator for G {
    fn simulate(&self, phi: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        self(phi, rng)
    }
}

/// Maps a series to its matching statistic.
pub trait Statistic: Sync {
    fn compute(&self, z: &[f64]) -> Result<Vec<f64>>;
}

impl<G: Fn(&[f64]) -> Result<Vec<f64>> + Sync> Statistic for G {
    fn compute(&self, z: &[f64]) -> Result<Vec<f64>> {
        self(z)
    }
}

/// One replication: its prior draw and each statistic, `None` where the
/// statistic could not be computed or was not finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub phi: Vec<f64>,
    pub stats: Vec<Option<Vec<f64>>>,
}

/// Draws, simulates and evaluates replication `index` on its own stream.
pub fn simulate_replication(
    streams: &Streams,
    index: usize,
    prior: &UniformPrior<f64>,
    simulator: &dyn Simulator,
    statistics: &[&dyn Statistic],
) -> Result<Replication> {
    let mut rng = streams.stream(index as u64);
    let phi = prior.sample(&mut rng)?;
    let z = match simulator.simulate(&phi, &mut rng) {
        Ok(z) => Some(z),
        Err(e) if is_quarantined(&e) => None,
        Err(e) => return Err(e),
    };
    let mut stats = Vec::with_capacity(statistics.len());
    for s in statistics {
        let value = match &z {
            None => None,
            Some(z) => match s.compute(z) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => Some(v),
                Ok(_) => None,
                Err(e) if is_quarantined(&e) => None,
                Err(e) => return Err(e),
            },
        };
        stats.push(value);
    }
    Ok(Replication { phi, stats })
}

/// Numerical failures at a single draw are isolated; anything else aborts.
fn is_quarantined(e: &Error) -> bool {
    matches!(
        e,
        Error::Numerical(_) | Error::Support(_) | Error::Fit(_) | Error::Conditioning(_) | Error::NonFinite { .. }
    )
}

/// Prior draws with several statistics of the same simulated series.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub draws: Vec<Vec<f64>>,
    /// `stats[k][i]`: statistic `k` of replication `i`.
    pub stats: Vec<Vec<Option<Vec<f64>>>>,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Runs `replications` replications of the family `streams` on `engine`.
pub fn simulate_pool(
    engine: &Engine,
    streams: &Streams,
    replications: usize,
    prior: &UniformPrior<f64>,
    simulator: &dyn Simulator,
    statistics: &[&dyn Statistic],
) -> Result<Pool> {
    let reps = engine.map(replications, |i| simulate_replication(streams, i, prior, simulator, statistics))?;
    let mut draws = Vec::with_capacity(replications);
    let mut stats = vec![Vec::with_capacity(replications); statistics.len()];
    for rep in reps {
        draws.push(rep.phi);
        for (k, s) in rep.stats.into_iter().enumerate() {
            stats[k].push(s);
        }
    }
    Ok(Pool { draws, stats })
}

/// Full record of one rejection pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcRun {
    pub draws: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub epsilon: f64,
    /// Accepted replication indices, ascending.
    pub accepted: Vec<usize>,
    pub nonfinite: usize,
    pub warnings: Vec<String>,
}

impl AbcRun {
    pub fn accepted_draws(&self) -> Vec<Vec<f64>> {
        self.accepted.iter().map(|&i| self.draws[i].clone()).collect()
    }

    pub fn accepted_column(&self, j: usize) -> Vec<f64> {
        self.accepted.iter().map(|&i| self.draws[i][j]).collect()
    }
}

/// Keeps the `ceil(q R)` smallest distances, breaking ties by index.
/// Non-finite distances count as `+inf`; more than 10% of them is an error.
pub fn select(draws: Vec<Vec<f64>>, mut distances: Vec<f64>, q: f64, warnings: Vec<String>) -> Result<AbcRun> {
    let r = distances.len();
    if r == 0 || draws.len() != r {
        return Err(Error::Shape(format!("{} draws for {} distances", draws.len(), r)));
    }
    let mut nonfinite = 0;
    for d in distances.iter_mut() {
        if !d.is_finite() {
            *d = f64::INFINITY;
            nonfinite += 1;
        }
    }
    if nonfinite * 10 > r {
        return Err(Error::NonFinite { bad: nonfinite, total: r });
    }
    let k = accept_count(q, r);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut accepted = order[..k].to_vec();
    let epsilon = distances[order[k - 1]];
    accepted.sort_unstable();
    let mut warnings = warnings;
    if nonfinite > 0 {
        warnings.push(format!("{nonfinite} of {r} replications had non-finite distance"));
    }
    Ok(AbcRun { draws, distances, epsilon, accepted, nonfinite, warnings })
}

/// One complete rejection pass with a single statistic. Replication `i`
/// uses stream `i` of the family rooted at `config.seed`.
pub fn abc_rejection(
    engine: &Engine,
    config: &AbcConfig,
    prior: &UniformPrior<f64>,
    simulator: &dyn Simulator,
    statistic: &dyn Statistic,
    criterion: &Criterion,
    observed: &[f64],
) -> Result<AbcRun> {
    config.validate()?;
    let streams = Streams::new(config.seed);
    let pool = simulate_pool(engine, &streams, config.replications, prior, simulator, &[statistic])?;
    let Pool { draws, mut stats } = pool;
    let stats = stats.pop().unwrap_or_default();
    let (distances, warnings) = criterion.distances(observed, &draws, &stats)?;
    select(draws, distances, config.accept_quantile, warnings)
}

/// Jaccard index of two index sets.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    use std::collections::BTreeSet;
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}
