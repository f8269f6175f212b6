use serde::{Deserialize, Serialize};
use ssm_abc::experiment::{AuxiliarySummary, BoxBounds, ExperimentConfig, ExperimentOutcome, ModelKind, PARAM_NAMES};

/// Contents of `report.json`. Everything except `timings` is a function of
/// the config and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub model: ModelKind,
    #[serde(rename = "T")]
    pub len: usize,
    pub seed: u64,
    pub true_params: [f64; 3],
    pub unknown: Vec<String>,
    pub replications: usize,
    pub accept_quantile: f64,
    pub two_stage: bool,
    pub runs: usize,
    /// One row per method and parameter.
    pub rmse: Vec<RmseRow>,
    pub exact_percentiles: Vec<ParamPercentiles>,
    pub auxiliary: Option<AuxiliarySummary>,
    /// Tolerance and non-finite count of every rejection pass.
    pub passes: Vec<PassRow>,
    pub timings: ReportTimings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmseRow {
    pub method: String,
    pub param: String,
    pub mean_rmse: f64,
    pub mean_rmse_mass: f64,
    pub rmse: Vec<f64>,
    pub rmse_mass: Vec<f64>,
    pub percentiles: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamPercentiles {
    pub param: String,
    pub percentiles: [f64; 5],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassRow {
    pub run: usize,
    pub method: String,
    pub param: Option<String>,
    pub epsilon: Option<f64>,
    pub accepted: usize,
    pub nonfinite: usize,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_prior: Option<BoxBounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportTimings {
    pub reference_seconds: f64,
    pub auxiliary_seconds: f64,
    pub abc_seconds: f64,
    pub total_seconds: f64,
}

pub fn name(j: usize) -> String {
    PARAM_NAMES[j].to_string()
}

impl Report {
    pub fn new(config: &ExperimentConfig, outcome: &ExperimentOutcome, runs: usize, total_seconds: f64) -> Self {
        let mut rmse = Vec::new();
        for a in &outcome.references.approximate {
            for p in &a.params {
                rmse.push(RmseRow {
                    method: a.method.name().into(),
                    param: name(p.param_index),
                    mean_rmse: p.rmse,
                    mean_rmse_mass: p.rmse_mass,
                    rmse: vec![p.rmse],
                    rmse_mass: vec![p.rmse_mass],
                    percentiles: vec![p.percentiles],
                });
            }
        }
        for r in &outcome.reports {
            for p in &r.params {
                rmse.push(RmseRow {
                    method: r.method.clone(),
                    param: name(p.param_index),
                    mean_rmse: p.mean_rmse,
                    mean_rmse_mass: p.mean_rmse_mass,
                    rmse: p.rmse.clone(),
                    rmse_mass: p.rmse_mass.clone(),
                    percentiles: p.percentiles.clone(),
                });
            }
        }
        let t = &outcome.timings;
        Self {
            schema_version: config.schema_version,
            model: config.model,
            len: config.len,
            seed: config.seed,
            true_params: config.true_params,
            unknown: config.unknown.iter().map(|&j| name(j)).collect(),
            replications: config.abc.replications,
            accept_quantile: config.abc.accept_quantile,
            two_stage: config.two_stage(),
            runs,
            rmse,
            exact_percentiles: outcome
                .references
                .exact
                .iter()
                .map(|g| ParamPercentiles { param: name(g.param_index), percentiles: g.percentiles() })
                .collect(),
            auxiliary: outcome.auxiliary.as_ref().map(|a| a.summary()),
            passes: outcome
                .details
                .iter()
                .map(|d| PassRow {
                    run: d.run,
                    method: d.method.name().into(),
                    param: d.param_index.map(name),
                    epsilon: d.epsilon.is_finite().then_some(d.epsilon),
                    accepted: d.accepted,
                    nonfinite: d.nonfinite,
                    warnings: d.warnings.clone(),
                    truncated_prior: d.truncated_prior.clone(),
                })
                .collect(),
            timings: ReportTimings {
                reference_seconds: t.reference_seconds,
                auxiliary_seconds: t.auxiliary_seconds,
                abc_seconds: t.abc_seconds,
                total_seconds,
            },
        }
    }
}
