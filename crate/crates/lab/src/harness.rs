//! The CLI verbs as library functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use coco_core::ScenarioFamily;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::engine::{execute, plot_series, prepare, summarize, Prepared, Row, Summary};
use crate::error::{LabError, Result};
use crate::output::{
    json_bytes, plotdata_csv, read_rounds, read_summary, rounds_csv, write_atomic, CONFIG_FILE,
    PLOTDATA_FILE, ROUNDS_FILE, SUMMARY_FILE, SWEEP_FILE,
};

pub const VERIFY_REL_TOL: f64 = 1e-6;
pub const THREADS_ENV: &str = "COCO_LAB_THREADS";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub rows: Vec<Row>,
    pub out_dir: Option<PathBuf>,
}

impl RunOutcome {
    pub fn all_bounds_ok(&self) -> bool {
        self.summary.get("all_bounds_ok") == Some(&Value::Bool(true))
    }
}

/// Runs without touching the filesystem.
pub fn run_in_memory(config: &RunConfig) -> Result<(Prepared, RunOutcome)> {
    let p = prepare(config)?;
    let start = Instant::now();
    let rows = execute(&p)?;
    let mut summary = summarize(&p, &rows)?;
    summary.insert(
        "wall_clock_secs".into(),
        serde_json::Number::from_f64(start.elapsed().as_secs_f64()).map_or(Value::Null, Value::Number),
    );
    let outcome = RunOutcome {
        summary,
        rows,
        out_dir: None,
    };
    Ok((p, outcome))
}

/// Runs and persists `config.json`, `rounds.csv`, `summary.json` (and `plotdata.csv`).
pub fn run(config: &RunConfig, emit_plotdata: bool) -> Result<RunOutcome> {
    let out_dir = config
        .out_dir
        .clone()
        .ok_or_else(|| LabError::Config("no output directory (set out_dir or --out)".into()))?;
    let (p, mut outcome) = run_in_memory(config)?;
    fs::create_dir_all(&out_dir).map_err(|e| LabError::io(&out_dir, e))?;
    write_atomic(&out_dir.join(CONFIG_FILE), &json_bytes(&p.config)?)?;
    write_atomic(
        &out_dir.join(ROUNDS_FILE),
        &rounds_csv(&outcome.rows, p.scenario.dim())?,
    )?;
    if emit_plotdata {
        let series = plot_series(&p, &outcome.rows)?;
        write_atomic(&out_dir.join(PLOTDATA_FILE), &plotdata_csv(&series)?)?;
    }
    write_atomic(&out_dir.join(SUMMARY_FILE), &json_bytes(&outcome.summary)?)?;
    outcome.out_dir = Some(out_dir);
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub summary: Summary,
    /// Empty unless verification was requested and found differences.
    pub mismatches: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= VERIFY_REL_TOL * a.abs().max(b.abs())
}

fn values_match(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => close(x, y),
        _ => a == b,
    }
}

/// Consistency of the rows with each other and with the regenerated oracles.
fn check_rows(p: &Prepared, rows: &[Row]) -> Result<Vec<String>> {
    use coco_core::ConvexOracle;
    let mut issues = Vec::new();
    if rows.len() != p.scenario.horizon() {
        issues.push(format!(
            "expected {} rows, found {}",
            p.scenario.horizon(),
            rows.len()
        ));
        return Ok(issues);
    }
    let mut q = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let t = i + 1;
        if r.t != t {
            issues.push(format!("row {t}: round index {}", r.t));
        }
        let (cost, constraint) = p.scenario.round(t).map_err(LabError::Evaluation)?;
        let f = cost.value(&r.x);
        let g = constraint.value(&r.x);
        if !close(f, r.f) {
            issues.push(format!("round {t}: f = {} but recomputed {f}", r.f));
        }
        if !close(g, r.g) {
            issues.push(format!("round {t}: g = {} but recomputed {g}", r.g));
        }
        if !close(r.gplus, r.g.max(0.0)) {
            issues.push(format!("round {t}: gplus = {} inconsistent with g", r.gplus));
        }
        q += r.gplus;
        if !close(q, r.q) {
            issues.push(format!("round {t}: Q = {} but cumulative gplus is {q}", r.q));
        }
    }
    Ok(issues)
}

/// Reads a run directory; with `verify`, rederives every summary entry from the CSV and
/// the stored config.
pub fn report(dir: &Path, verify: bool) -> Result<ReportOutcome> {
    let summary = read_summary(&dir.join(SUMMARY_FILE))?;
    let mut mismatches = Vec::new();
    if verify {
        let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
        let p = prepare(&config)?;
        let rows = read_rounds(&dir.join(ROUNDS_FILE), p.scenario.dim())?;
        mismatches.extend(check_rows(&p, &rows)?);
        if mismatches.is_empty() {
            let recomputed = summarize(&p, &rows)?;
            for (k, v) in &summary {
                if k == "wall_clock_secs" {
                    continue;
                }
                match recomputed.get(k) {
                    None => mismatches.push(format!("{k}: not derivable from the run")),
                    Some(r) if !values_match(v, r) => {
                        mismatches.push(format!("{k}: stored {v}, recomputed {r}"))
                    }
                    _ => {}
                }
            }
            for k in recomputed.keys() {
                if !summary.contains_key(k) {
                    mismatches.push(format!("{k}: missing from summary"));
                }
            }
        }
    }
    Ok(ReportOutcome {
        summary,
        mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ccv,
    Regret,
}

/// Least-squares slope of `log(metric)` against `log(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Horizons with metric > 1 that entered the fit.
    pub used: usize,
    /// Fewer than two usable horizons; slope reported as 0.
    pub degenerate: bool,
}

pub fn fit_slope(points: &[(f64, f64)]) -> SlopeFit {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, m)| *m > 1.0 && *t > 0.0)
        .map(|(t, m)| (t.ln(), m.ln()))
        .collect();
    if logs.len() < 2 {
        return SlopeFit {
            slope: 0.0,
            used: logs.len(),
            degenerate: true,
        };
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    SlopeFit {
        slope: sxy / sxx,
        used: logs.len(),
        degenerate: false,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub horizon: usize,
    pub value: f64,
    pub all_bounds_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub metric: Metric,
    /// Summary key the metric was read from.
    pub key: String,
    pub points: Vec<SweepPoint>,
    pub fit: SlopeFit,
}

impl SweepOutcome {
    pub fn all_bounds_ok(&self) -> bool {
        self.points.iter().all(|p| p.all_bounds_ok)
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| LabError::Config(format!("{THREADS_ENV}={v} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

/// Runs every horizon of the config (in parallel) and fits the growth exponent of `metric`.
/// With an output directory, each run is persisted under `T<horizon>/`.
pub fn sweep(config: &RunConfig, metric: Metric) -> Result<SweepOutcome> {
    config.validate()?;
    if config.horizons.len() < 3 {
        return Err(LabError::Config(format!(
            "sweep needs at least 3 horizons, got {}",
            config.horizons.len()
        )));
    }
    let key = match metric {
        Metric::Ccv => "ccv".to_string(),
        Metric::Regret => {
            let first = match &config.comparators {
                Some(names) => names[0].clone(),
                None => prepare(&config.at_horizon(config.horizons[0]))?.comparators[0]
                    .name
                    .clone(),
            };
            format!("regret_{first}")
        }
    };
    let pool = thread_pool()?;
    let results: Vec<RunOutcome> = pool.install(|| {
        config
            .horizons
            .par_iter()
            .map(|&h| {
                let mut cfg = config.at_horizon(h);
                cfg.horizons.clear();
                match &config.out_dir {
                    Some(dir) => {
                        cfg.out_dir = Some(dir.join(format!("T{h}")));
                        run(&cfg, false)
                    }
                    None => run_in_memory(&cfg).map(|(_, o)| o),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let points = config
        .horizons
        .iter()
        .zip(&results)
        .map(|(&horizon, o)| {
            let value = o.summary.get(&key).and_then(Value::as_f64).ok_or_else(|| {
                LabError::Config(format!("summary has no numeric '{key}'"))
            })?;
            Ok(SweepPoint {
                horizon,
                value,
                all_bounds_ok: o.all_bounds_ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_slope(
        &points
            .iter()
            .map(|p| (p.horizon as f64, p.value))
            .collect::<Vec<_>>(),
    );
    let outcome = SweepOutcome {
        metric,
        key,
        points,
        fit,
    };
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        write_atomic(&dir.join(SWEEP_FILE), &json_bytes(&outcome)?)?;
    }
    Ok(outcome)
}

pub fn sweep_slope(config: &RunConfig, metric: Metric) -> Result<f64> {
    Ok(sweep(config, metric)?.fit.slope)
}

pub fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    ScenarioFamily::ALL
        .iter()
        .map(|f| (f.name(), f.description()))
        .collect()
}
