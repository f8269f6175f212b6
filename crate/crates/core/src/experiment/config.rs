use serde::{Deserialize, Serialize};

use crate::abc::DistanceKind;
use crate::error::{Error, Result};
use crate::models::{heston_default_prior, lg_default_prior, HestonParams, LgParams, UniformPrior};
use crate::rng::{domain, Streams};

pub const SCHEMA_VERSION: u32 = 1;
pub const PARAM_NAMES: [&str; 3] = ["rho", "delta", "sigma_v"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lg,
    Heston,
}

/// A way of estimating the marginal posteriors: an ABC distance, or a
/// normalized approximate likelihood (Heston only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MarginalScore,
    JointScore,
    SummEuclid,
    Fp,
    Mle,
    Aukf,
    Euler,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self.distance() {
            Some(d) => d.name(),
            None if *self == Method::Aukf => "aukf",
            None => "euler",
        }
    }

    pub fn distance(&self) -> Option<DistanceKind> {
        match self {
            Method::MarginalScore => Some(DistanceKind::MarginalScore),
            Method::JointScore => Some(DistanceKind::JointScore),
            Method::SummEuclid => Some(DistanceKind::SummEuclid),
            Method::Fp => Some(DistanceKind::Fp),
            Method::Mle => Some(DistanceKind::Mle),
            Method::Aukf | Method::Euler => None,
        }
    }

    pub fn is_abc(&self) -> bool {
        self.distance().is_some()
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcSettings {
    pub replications: usize,
    #[serde(default = "default_quantile")]
    pub accept_quantile: f64,
    #[serde(default = "one")]
    pub multiplier: usize,
    #[serde(default)]
    pub split_pilot: bool,
    /// Pilot run and prior truncation before the final run. Defaults to on
    /// for Heston runs with more than one unknown.
    #[serde(default)]
    pub two_stage: Option<bool>,
    #[serde(default = "default_quantile")]
    pub pilot_quantile: f64,
    #[serde(default = "default_inflate")]
    pub pilot_inflate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    /// Points per axis of the reference posterior grid.
    #[serde(default)]
    pub posterior_points: Option<usize>,
    /// Trapezoid points per nuisance axis of the marginal score.
    #[serde(default = "default_nuisance")]
    pub nuisance_points: usize,
    /// Candidate values when maximizing the observed integrated likelihood.
    #[serde(default = "default_marginal_mle")]
    pub marginal_mle_points: usize,
    /// Volatility nodes of the Heston grid filter.
    #[serde(default = "default_filter")]
    pub filter_points: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            posterior_points: None,
            nuisance_points: default_nuisance(),
            marginal_mle_points: default_marginal_mle(),
            filter_points: default_filter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Settings {
    #[serde(default = "default_panels")]
    pub panels: Vec<String>,
    #[serde(default = "default_runs_table")]
    pub runs: usize,
    #[serde(default = "default_runs_three")]
    pub runs_three_unknowns: usize,
}

impl Default for Table1Settings {
    fn default() -> Self {
        Self { panels: default_panels(), runs: default_runs_table(), runs_three_unknowns: default_runs_three() }
    }
}

fn default_quantile() -> f64 {
    0.05
}
fn default_inflate() -> f64 {
    0.2
}
fn one() -> usize {
    1
}
fn default_nuisance() -> usize {
    crate::auxiliary::DEFAULT_NUISANCE_POINTS
}
fn default_marginal_mle() -> usize {
    200
}
fn default_filter() -> usize {
    100
}
fn default_panels() -> Vec<String> {
    ["A", "B", "C", "D"].map(String::from).to_vec()
}
fn default_runs_table() -> usize {
    100
}
fn default_runs_three() -> usize {
    50
}
fn all_params() -> Vec<usize> {
    vec![0, 1, 2]
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelKind,
    /// `(rho, delta, sigma_v)`.
    pub true_params: [f64; 3],
    #[serde(rename = "T")]
    pub len: usize,
    /// `var(x) / sigma_e^2`, linear Gaussian model only.
    #[serde(default)]
    pub sn_ratio: Option<f64>,
    #[serde(default)]
    pub prior: Option<PriorBox>,
    /// Inferred coordinates; the others stay at their true values.
    #[serde(default = "all_params")]
    pub unknown: Vec<usize>,
    pub abc: AbcSettings,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub grids: GridSettings,
    #[serde(default = "one")]
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
    #[serde(default)]
    pub table1: Option<Table1Settings>,
}

impl ExperimentConfig {
    /// The LG setting of the simulation study: `T = 400`, SN ratio 20.
    pub fn lg_default(seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelKind::Lg,
            true_params: [0.7, 0.1, 1.0],
            len: 400,
            sn_ratio: Some(20.0),
            prior: None,
            unknown: all_params(),
            abc: AbcSettings {
                replications: 50_000,
                accept_quantile: 0.05,
                multiplier: 1,
                split_pilot: false,
                two_stage: None,
                pilot_quantile: 0.05,
                pilot_inflate: 0.2,
            },
            methods: vec![Method::MarginalScore, Method::JointScore, Method::SummEuclid, Method::Fp],
            grids: GridSettings::default(),
            runs: 1,
            seed,
            output_dir: None,
            table1: None,
        }
    }

    /// The Heston setting: `rho = 0.92`, `delta = 0.0024`, `sigma_v = 0.062`.
    pub fn heston_default(seed: u64) -> Self {
        Self {
            model: ModelKind::Heston,
            true_params: [0.92, 0.0024, 0.062],
            sn_ratio: None,
            methods: vec![
                Method::Aukf,
                Method::Euler,
                Method::JointScore,
                Method::MarginalScore,
                Method::SummEuclid,
                Method::Fp,
            ],
            ..Self::lg_default(seed)
        }
    }

    pub fn full_prior(&self) -> Result<UniformPrior<f64>> {
        let mut prior = match self.model {
            ModelKind::Lg => lg_default_prior(),
            ModelKind::Heston => heston_default_prior(),
        };
        if let Some(b) = &self.prior {
            prior.lower = b.lower.to_vec();
            prior.upper = b.upper.to_vec();
        }
        prior.validate()?;
        Ok(prior)
    }

    /// Prior over the unknown coordinates, others fixed at the truth.
    pub fn prior(&self) -> Result<UniformPrior<f64>> {
        Ok(self.full_prior()?.restrict(&self.unknown, &self.true_params))
    }

    pub fn sigma_e(&self) -> Result<f64> {
        let sn = self.sn_ratio.ok_or_else(|| Error::Config("the linear Gaussian model needs sn_ratio".into()))?;
        let [rho, delta, sigma_v] = self.true_params;
        Ok(LgParams::with_sn_ratio(rho, delta, sigma_v, sn)?.sigma_e)
    }

    pub fn two_stage(&self) -> bool {
        self.abc.two_stage.unwrap_or(self.model == ModelKind::Heston && self.unknown.len() > 1)
    }

    pub fn posterior_points(&self) -> usize {
        self.grids.posterior_points.unwrap_or(match (self.model, self.unknown.len()) {
            (ModelKind::Heston, d) if d > 1 => 40,
            _ => 100,
        })
    }

    pub fn abc_methods(&self) -> impl Iterator<Item = Method> + '_ {
        self.methods.iter().copied().filter(Method::is_abc)
    }

    /// Checks every field and cross-field constraint before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.len < 2 {
            return bad(format!("T must be at least 2, got {}", self.len));
        }
        let [rho, delta, sigma_v] = self.true_params;
        match self.model {
            ModelKind::Lg => {
                self.sigma_e().map_err(|e| Error::Config(e.to_string()))?;
            }
            ModelKind::Heston => {
                if self.sn_ratio.is_some() {
                    return bad("sn_ratio applies to the linear Gaussian model only".into());
                }
                HestonParams::new(rho, delta, sigma_v).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        let mut seen = [false; 3];
        if self.unknown.is_empty() {
            return bad("at least one parameter must be unknown".into());
        }
        for &j in &self.unknown {
            if j >= 3 || seen[j] {
                return bad(format!("unknown parameter indices must be distinct and < 3, got {:?}", self.unknown));
            }
            seen[j] = true;
        }
        if !self.unknown.windows(2).all(|w| w[0] < w[1]) {
            return bad("unknown parameter indices must be increasing".into());
        }
        let full = self.full_prior().map_err(|e| Error::Config(e.to_string()))?;
        if !full.contains(&self.true_params) {
            return bad(format!("true parameters {:?} lie outside the prior", self.true_params));
        }
        let prior = self.prior()?;
        prior
            .check_mass(&mut Streams::new(self.seed).child(domain::PRIOR, 0).stream(0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let a = &self.abc;
        if a.replications < 100 {
            return bad(format!("abc.replications must be at least 100, got {}", a.replications));
        }
        for (name, q) in [("accept_quantile", a.accept_quantile), ("pilot_quantile", a.pilot_quantile)] {
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!("abc.{name} must be in (0, 1], got {q}"));
            }
        }
        if !(a.pilot_inflate >= 0.0) {
            return bad(format!("abc.pilot_inflate must be non-negative, got {}", a.pilot_inflate));
        }
        if a.multiplier == 0 {
            return bad("abc.multiplier must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {m} is listed twice"));
            }
            if !m.is_abc() && self.model == ModelKind::Lg {
                return bad(format!("method {m} is only defined for the Heston model"));
            }
        }
        let g = &self.grids;
        if self.posterior_points() < 2 || g.nuisance_points < 2 || g.marginal_mle_points < 2 {
            return bad("grid resolutions must be at least 2".into());
        }
        if g.filter_points < 10 {
            return bad(format!("grids.filter_points must be at least 10, got {}", g.filter_points));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if let Some(t) = &self.table1 {
            if self.model != ModelKind::Heston {
                return bad("table1 settings apply to the Heston model only".into());
            }
            for p in &t.panels {
                if panel_unknowns(p).is_none() {
                    return bad(format!("unknown table panel `{p}`"));
                }
            }
            if t.runs == 0 || t.runs_three_unknowns == 0 {
                return bad("table1 run counts must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// Unknown coordinates of each table panel; panel `A` expands to three
/// single-parameter columns.
pub fn panel_unknowns(panel: &str) -> Option<Vec<Vec<usize>>> {
    match panel {
        "A" => Some(vec![vec![0], vec![1], vec![2]]),
        "B" => Some(vec![vec![0, 2]]),
        "C" => Some(vec![vec![0, 1]]),
        "D" => Some(vec![vec![0, 1, 2]]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::lg_default(1).validate().unwrap();
        ExperimentConfig::heston_default(1).validate().unwrap();
    }

    #[test]
    fn feller_violation_is_a_config_error() {
        let mut c = ExperimentConfig::heston_default(1);
        c.true_params = [0.92, 0.0010, 0.062];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn lg_needs_sn_ratio_and_no_filter_methods() {
        let mut c = ExperimentConfig::lg_default(1);
        c.sn_ratio = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::lg_default(1);
        c.methods.push(Method::Euler);
        assert!(c.validate().is_err());
    }

    #[test]
    fn truth_outside_prior_is_rejected() {
        let mut c = ExperimentConfig::lg_default(1);
        c.prior = Some(PriorBox { lower: [0.0, -0.5, 0.1], upper: [0.6, 0.7, 2.0] });
        assert!(c.validate().is_err());
    }

    #[test]
    fn restricted_prior_keeps_feller() {
        let mut c = ExperimentConfig::heston_default(1);
        c.unknown = vec![2];
        let p = c.prior().unwrap();
        assert_eq!(p.dim(), 1);
        assert!(!p.contains(&[0.08]));
        assert!(c.two_stage() == false);
        c.unknown = vec![0, 2];
        assert!(c.two_stage());
        assert_eq!(c.posterior_points(), 40);
    }
}
