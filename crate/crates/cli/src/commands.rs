use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use ssm_abc::abc::Engine;
use ssm_abc::eval::{kde, percentiles, rmse, rmse_mass};
use ssm_abc::experiment::{self, ExperimentConfig, ExperimentOutcome, ModelKind, Setup, Table1};

use crate::error::{CliError, CliResult};
use crate::files::{float, parse_float, read_csv, read_grid, write_grid, write_json, Csv};
use crate::report::{name, Report};
use crate::Common;

pub struct Context {
    config: ExperimentConfig,
    engine: Engine,
    out: PathBuf,
    observed: Option<PathBuf>,
    quiet: bool,
}

impl Context {
    pub fn new(args: &Common) -> CliResult<Self> {
        let text = fs::read_to_string(&args.config).map_err(CliError::io(&args.config))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        config.validate()?;
        let out = args.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out).map_err(CliError::io(&out))?;
        let engine = Engine::new(args.threads)?;
        Ok(Self { config, engine, out, observed: args.observed.clone(), quiet: args.quiet })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn progress(&self) -> impl Fn(&str) + Sync + '_ {
        let start = Instant::now();
        move |m: &str| {
            if !self.quiet {
                eprintln!("[{:>8.1}s] {m}", start.elapsed().as_secs_f64());
            }
        }
    }

    /// The observed series: read from `--observed`, or simulated and written
    /// to the output directory.
    fn observed(&self) -> CliResult<Vec<f64>> {
        match &self.observed {
            Some(path) => read_observed(path, self.config.len),
            None => {
                let series = experiment::simulate_observed(&self.config)?;
                write_observed(self, &series.obs, &series.states)?;
                Ok(series.obs)
            }
        }
    }
}

fn read_observed(path: &Path, len: usize) -> CliResult<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    let col = header
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| CliError::Read { path: path.into(), message: "no `y` column".into() })?;
    let y = rows.iter().map(|r| parse_float(path, &r[col])).collect::<CliResult<Vec<f64>>>()?;
    if y.len() != len {
        return Err(CliError::Config(format!("{} has {} rows but the config says T = {len}", path.display(), y.len())));
    }
    Ok(y)
}

#[derive(Serialize)]
struct Meta<'a> {
    schema_version: u32,
    model: ModelKind,
    true_params: [f64; 3],
    #[serde(rename = "T")]
    len: usize,
    sn_ratio: Option<f64>,
    sigma_e: Option<f64>,
    seed: u64,
    state_column: &'a str,
}

fn write_observed(ctx: &Context, y: &[f64], states: &[f64]) -> CliResult<()> {
    let c = &ctx.config;
    let state = match c.model {
        ModelKind::Lg => "x",
        ModelKind::Heston => "V",
    };
    let mut csv = Csv::new(ctx.path("observed.csv"), &["t", "y", state])?;
    for (t, (y, x)) in y.iter().zip(states).enumerate() {
        csv.row([(t + 1).to_string(), float(*y), float(*x)])?;
    }
    csv.finish()?;
    let meta = Meta {
        schema_version: c.schema_version,
        model: c.model,
        true_params: c.true_params,
        len: c.len,
        sn_ratio: c.sn_ratio,
        sigma_e: match c.model {
            ModelKind::Lg => Some(c.sigma_e()?),
            ModelKind::Heston => None,
        },
        seed: c.seed,
        state_column: state,
    };
    write_json(&ctx.path("meta.json"), &meta)
}

fn print_json<T: Serialize>(value: &T) {
    if let Ok(s) = serde_json::to_string(value) {
        println!("{s}");
    }
}

pub fn simulate(ctx: &Context) -> CliResult<()> {
    let series = experiment::simulate_observed(&ctx.config)?;
    write_observed(ctx, &series.obs, &series.states)?;
    print_json(&serde_json::json!({ "observed": ctx.path("observed.csv"), "rows": series.obs.len() }));
    Ok(())
}

pub fn fit(ctx: &Context) -> CliResult<()> {
    let setup = Setup::new(&ctx.config)?;
    let y = ctx.observed()?;
    (ctx.progress())("fitting the auxiliary model");
    let summary = setup.fit_auxiliary(&ctx.engine, &y)?.summary();
    let doc = serde_json::json!({
        "params": ctx.config.unknown.iter().map(|&j| name(j)).collect::<Vec<_>>(),
        "fit": summary,
    });
    write_json(&ctx.path("fit.json"), &doc)?;
    print_json(&doc);
    Ok(())
}

pub fn exact_posterior(ctx: &Context) -> CliResult<()> {
    let setup = Setup::new(&ctx.config)?;
    let y = ctx.observed()?;
    (ctx.progress())("computing reference posteriors");
    let refs = setup.references(&ctx.engine, &y)?;
    let mut summary = Vec::new();
    for g in &refs.exact {
        write_grid(ctx.path(&format!("posterior_exact_{}.csv", name(g.param_index))), g)?;
        summary.push(serde_json::json!({ "method": "exact", "param": name(g.param_index), "percentiles": g.percentiles() }));
    }
    for a in &refs.approximate {
        for (g, p) in a.grids.iter().zip(&a.params) {
            write_grid(ctx.path(&format!("posterior_{}_{}.csv", a.method, name(p.param_index))), g)?;
            summary.push(serde_json::json!({
                "method": a.method.name(),
                "param": name(p.param_index),
                "percentiles": p.percentiles,
                "rmse": p.rmse,
                "rmse_mass": p.rmse_mass,
            }));
        }
    }
    print_json(&summary);
    Ok(())
}

/// `run` (one pass) and `replicate` (`runs` passes, default from the config).
pub fn run(ctx: &Context, runs: Option<usize>) -> CliResult<()> {
    let clock = Instant::now();
    let n_runs = runs.unwrap_or(ctx.config.runs);
    let setup = Setup::new(&ctx.config)?;
    let y = ctx.observed()?;
    let progress = ctx.progress();
    let outcome = setup.run(&ctx.engine, &y, n_runs, &progress)?;
    write_outcome(ctx, &outcome)?;
    let report = Report::new(&ctx.config, &outcome, n_runs, clock.elapsed().as_secs_f64());
    write_json(&ctx.path("report.json"), &report)?;
    let table: Vec<_> = report
        .rmse
        .iter()
        .map(|r| serde_json::json!({ "method": r.method, "param": r.param, "mean_rmse": r.mean_rmse, "mean_rmse_mass": r.mean_rmse_mass }))
        .collect();
    print_json(&table);
    Ok(())
}

fn write_outcome(ctx: &Context, outcome: &ExperimentOutcome) -> CliResult<()> {
    let unknown = &ctx.config.unknown;
    for g in &outcome.references.exact {
        write_grid(ctx.path(&format!("posterior_exact_{}.csv", name(g.param_index))), g)?;
    }
    for a in &outcome.references.approximate {
        for g in &a.grids {
            write_grid(ctx.path(&format!("posterior_{}_{}.csv", a.method, name(g.param_index))), g)?;
        }
    }
    let mut header = vec!["target".to_string()];
    header.extend(unknown.iter().map(|&j| name(j)));
    header.push("distance".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for method in ctx.config.abc_methods() {
        let mut csv = Csv::new(ctx.path(&format!("draws_{method}.csv")), &header)?;
        for t in outcome.first_run.iter().filter(|t| t.method == method) {
            let target = t.target.map_or_else(|| "all".to_string(), |k| name(unknown[k]));
            for &i in &t.run.accepted {
                let mut row = vec![target.clone()];
                row.extend(t.run.draws[i].iter().map(|v| float(*v)));
                row.push(float(t.run.distances[i]));
                csv.row(&row)?;
            }
        }
        csv.finish()?;
        for (k, &j) in unknown.iter().enumerate() {
            let Some(t) = outcome.first_run.iter().find(|t| t.method == method && t.target.is_none_or(|x| x == k))
            else {
                continue;
            };
            let reference = outcome
                .references
                .exact(j)
                .ok_or_else(|| CliError::Config(format!("no reference posterior for {}", name(j))))?;
            let est = kde(&t.run.accepted_column(k), &reference.abscissae)?;
            write_grid(ctx.path(&format!("posterior_{method}_{}.csv", name(j))), &est)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Evaluation {
    method: String,
    param: String,
    accepted: usize,
    rmse: f64,
    rmse_mass: f64,
    percentiles: [f64; 5],
}

/// Scores `draws_<method>.csv` files in the output directory against the
/// `posterior_exact_<param>.csv` files next to them.
pub fn evaluate(ctx: &Context) -> CliResult<()> {
    let mut rows = Vec::new();
    for method in ctx.config.abc_methods() {
        let path = ctx.path(&format!("draws_{method}.csv"));
        let (header, data) = read_csv(&path)?;
        for &j in &ctx.config.unknown {
            let param = name(j);
            let col = header
                .iter()
                .position(|h| *h == param)
                .ok_or_else(|| CliError::Read { path: path.clone(), message: format!("no `{param}` column") })?;
            let wanted = if method.distance().is_some_and(|d| d.is_marginal()) { param.as_str() } else { "all" };
            let draws = data
                .iter()
                .filter(|r| r[0] == wanted)
                .map(|r| parse_float(&path, &r[col]))
                .collect::<CliResult<Vec<f64>>>()?;
            let reference = read_grid(&ctx.path(&format!("posterior_exact_{param}.csv")), j)?;
            let est = kde(&draws, &reference.abscissae)?;
            rows.push(Evaluation {
                method: method.name().into(),
                param,
                accepted: draws.len(),
                rmse: rmse(&est, &reference)?,
                rmse_mass: rmse_mass(&est, &reference)?,
                percentiles: percentiles(&draws)?,
            });
        }
    }
    write_json(&ctx.path("evaluation.json"), &rows)?;
    print_json(&rows);
    Ok(())
}

pub fn table1(ctx: &Context) -> CliResult<()> {
    let progress = ctx.progress();
    let table = experiment::table1(&ctx.config, &ctx.engine, &progress)?;
    let mass = write_table(ctx.path("table1.csv"), &table, |r| &r.mass)?;
    write_table(ctx.path("table1_density.csv"), &table, |r| &r.density)?;
    write_json(&ctx.path("table1.json"), &table)?;
    print!("{mass}");
    Ok(())
}

/// Writes one scale of the table and returns the CSV text.
fn write_table(
    path: PathBuf,
    table: &Table1,
    values: impl Fn(&experiment::Table1Row) -> &Vec<Option<f64>>,
) -> CliResult<String> {
    let mut header = vec!["method".to_string()];
    header.extend(table.columns.iter().map(|c| format!("{}:{}", c.panel, name(c.param_index))));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(path.clone(), &header)?;
    for row in &table.rows {
        let mut fields = vec![row.label.clone()];
        fields.extend(values(row).iter().map(|v| v.map_or_else(|| "-".to_string(), float)));
        csv.row(&fields)?;
    }
    csv.finish()?;
    fs::read_to_string(&path).map_err(CliError::io(path))
}
