use serde::{Deserialize, Serialize};

use crate::abc::Engine;
use crate::error::{Error, Result};

use super::{panel_unknowns, simulate_observed, ExperimentConfig, Method, ModelKind, Progress, Setup};

/// Row order of the accuracy table.
pub const TABLE1_ROWS: [Method; 6] =
    [Method::Aukf, Method::Euler, Method::JointScore, Method::MarginalScore, Method::SummEuclid, Method::Fp];

fn row_label(m: Method) -> &'static str {
    match m {
        Method::Aukf => "AUKF",
        Method::Euler => "Euler",
        Method::JointScore => "ABC-Joint Score",
        Method::MarginalScore => "ABC-Marginal Score",
        Method::SummEuclid => "ABC-SS",
        Method::Fp => "ABC-FP",
        Method::Mle => "ABC-MLE",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Column {
    pub panel: String,
    pub unknown: Vec<usize>,
    pub param_index: usize,
    pub runs: usize,
    pub seconds: f64,
}

/// Mean RMSE per column, `None` where the method was not run. `mass` is on
/// the per-point probability scale, `density` on the ordinate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub method: Method,
    pub label: String,
    pub mass: Vec<Option<f64>>,
    pub density: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub columns: Vec<Table1Column>,
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    pub fn row(&self, m: Method) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.method == m)
    }

    pub fn column(&self, panel: &str, param_index: usize) -> Option<usize> {
        self.columns.iter().position(|c| c.panel == panel && c.param_index == param_index)
    }
}

/// Accuracy of every configured method on each panel of the Heston study,
/// averaged over the configured run counts. One observed series serves all
/// panels.
pub fn table1(config: &ExperimentConfig, engine: &Engine, progress: Progress<'_>) -> Result<Table1> {
    if config.model != ModelKind::Heston {
        return Err(Error::Config("the accuracy table is defined for the Heston model".into()));
    }
    config.validate()?;
    let settings = config.table1.clone().unwrap_or_default();
    let methods: Vec<Method> = TABLE1_ROWS.iter().copied().filter(|m| config.methods.contains(m)).collect();
    if methods.is_empty() {
        return Err(Error::Config("none of the configured methods appears in the table".into()));
    }
    let y = simulate_observed(config)?.obs;
    let mut columns = Vec::new();
    let mut rows: Vec<Table1Row> = methods
        .iter()
        .map(|&m| Table1Row { method: m, label: row_label(m).into(), mass: vec![], density: vec![] })
        .collect();
    for panel in &settings.panels {
        let sets = panel_unknowns(panel).ok_or_else(|| Error::Config(format!("unknown table panel `{panel}`")))?;
        for unknown in sets {
            let mut cfg = config.clone();
            cfg.runs = if unknown.len() == 3 { settings.runs_three_unknowns } else { settings.runs };
            cfg.unknown = unknown.clone();
            cfg.methods = methods.clone();
            progress(&format!("panel {panel}, unknown {unknown:?}: {} runs", cfg.runs));
            let clock = std::time::Instant::now();
            let outcome = Setup::new(&cfg)?.run(engine, &y, cfg.runs, progress)?;
            let seconds = clock.elapsed().as_secs_f64();
            for &j in &unknown {
                columns.push(Table1Column {
                    panel: panel.clone(),
                    unknown: unknown.clone(),
                    param_index: j,
                    runs: cfg.runs,
                    seconds,
                });
                for row in rows.iter_mut() {
                    let (mass, density) = if row.method.is_abc() {
                        outcome
                            .reports
                            .iter()
                            .find(|r| r.method == row.method.name())
                            .and_then(|r| r.param(j))
                            .map_or((None, None), |p| (Some(p.mean_rmse_mass), Some(p.mean_rmse)))
                    } else {
                        outcome
                            .references
                            .approximate
                            .iter()
                            .find(|a| a.method == row.method)
                            .and_then(|a| a.params.iter().find(|p| p.param_index == j))
                            .map_or((None, None), |p| (Some(p.rmse_mass), Some(p.rmse)))
                    };
                    row.mass.push(mass);
                    row.density.push(density);
                }
            }
        }
    }
    Ok(Table1 { columns, rows })
}
