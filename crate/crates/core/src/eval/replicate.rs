use serde::{Deserialize, Serialize};

use crate::abc::Engine;
use crate::error::{Error, Result};

use super::{kde, percentiles, rmse, rmse_mass, PosteriorGrid};

/// Accepted draws of one method in one run, per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodDraws {
    pub method: String,
    /// `(param_index, accepted values)`.
    pub columns: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub param_index: usize,
    pub rmse: Vec<f64>,
    pub mean_rmse: f64,
    /// RMSE between per-point probabilities, see [`rmse_mass`].
    pub rmse_mass: Vec<f64>,
    pub mean_rmse_mass: f64,
    pub percentiles: Vec<[f64; 5]>,
}

/// Accuracy of one method across repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub method: String,
    pub params: Vec<ParamSummary>,
}

impl ReplicationReport {
    pub fn param(&self, j: usize) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.param_index == j)
    }
}

/// Runs `run(0..n_runs)` and scores every method's draws against the
/// reference marginal of the same parameter. Aggregation follows run order.
pub fn replicate<G>(engine: &Engine, n_runs: usize, references: &[PosteriorGrid], run: G) -> Result<Vec<ReplicationReport>>
where
    G: Fn(usize) -> Result<Vec<MethodDraws>> + Sync,
{
    if n_runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let reference = |j: usize| {
        references
            .iter()
            .find(|r| r.param_index == j)
            .ok_or_else(|| Error::Shape(format!("no reference posterior for parameter {j}")))
    };
    let scored = engine.map(n_runs, |i| {
        run(i)?
            .into_iter()
            .map(|m| {
                let cols = m
                    .columns
                    .iter()
                    .map(|(j, draws)| {
                        let r = reference(*j)?;
                        let est = kde(draws, &r.abscissae)?;
                        Ok((*j, rmse(&est, r)?, rmse_mass(&est, r)?, percentiles(draws)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((m.method, cols))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut reports: Vec<ReplicationReport> = Vec::new();
    for run in scored {
        for (method, cols) in run {
            let pos = match reports.iter().position(|r| r.method == method) {
                Some(p) => p,
                None => {
                    reports.push(ReplicationReport { method, params: Vec::new() });
                    reports.len() - 1
                }
            };
            let report = &mut reports[pos];
            for (j, e, m, p) in cols {
                let pos = match report.params.iter().position(|s| s.param_index == j) {
                    Some(p) => p,
                    None => {
                        report.params.push(ParamSummary {
                            param_index: j,
                            rmse: vec![],
                            mean_rmse: 0.0,
                            rmse_mass: vec![],
                            mean_rmse_mass: 0.0,
                            percentiles: vec![],
                        });
                        report.params.len() - 1
                    }
                };
                report.params[pos].rmse.push(e);
                report.params[pos].rmse_mass.push(m);
                report.params[pos].percentiles.push(p);
            }
        }
    }
    for s in reports.iter_mut().flat_map(|r| r.params.iter_mut()) {
        s.mean_rmse = mean(&s.rmse);
        s.mean_rmse_mass = mean(&s.rmse_mass);
    }
    Ok(reports)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
