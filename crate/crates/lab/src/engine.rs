//! Executes one configured run in memory and derives its summary from the trajectory.

use std::collections::BTreeMap;
use std::sync::Arc;

use coco_core::subroutines::{adagrad_bound_rhs, ahag_bound_rhs, num_experts};
use coco_core::{
    ccv_update, coco2_bound_rhs_for_horizon, coco2_default_v, g_plus, AdaGrad, Ahag, CocoError,
    Coco1, Coco2, Constraint, ConvexOracle, CostFn, GradientLearner, NamedComparator, Scenario,
    StepSchedule,
};
use serde_json::Value;

use crate::config::{Algorithm, RunConfig};
use crate::error::{LabError, Result};

/// One trajectory row, exactly the columns persisted in `rounds.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: f64,
    pub gplus: f64,
    pub q: f64,
    pub grad_norm: f64,
}

/// Flat summary object; sorted keys keep the JSON byte-stable.
pub type Summary = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    Adagrad(StepSchedule),
    Ahag { experts: usize },
    Coco1 { experts: usize },
    Coco2 { experts: usize, v: f64 },
}

/// A validated run: scenario instance, selected comparators and bound parameters.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Config with the effective seed written back, so it reproduces the run on its own.
    pub config: RunConfig,
    pub scenario: Scenario,
    pub lipschitz: f64,
    pub comparators: Vec<NamedComparator>,
    pub min_feasible_path: f64,
    pub min_feasible_path_exact: bool,
    pub bounds: BoundKind,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let spec = config.effective_scenario();
    let mut effective = config.clone();
    effective.seed = Some(spec.seed);
    let scenario = Scenario::new(spec).map_err(LabError::Scenario)?;

    let lipschitz = config.overrides.g.unwrap_or(scenario.lipschitz());
    if lipschitz < scenario.lipschitz() {
        return Err(LabError::Config(format!(
            "overrides.g = {lipschitz} is below the scenario's Lipschitz bound {}",
            scenario.lipschitz()
        )));
    }

    let registered = scenario.comparators().map_err(LabError::Scenario)?;
    let comparators = match &config.comparators {
        None => registered.clone(),
        Some(names) => names
            .iter()
            .map(|name| {
                registered
                    .iter()
                    .find(|c| &c.name == name)
                    .cloned()
                    .ok_or_else(|| {
                        let known: Vec<&str> = registered.iter().map(|c| c.name.as_str()).collect();
                        LabError::Config(format!(
                            "unknown comparator '{name}' for {} (available: {})",
                            scenario.family().name(),
                            known.join(", ")
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let (min_feasible_path, min_feasible_path_exact) = match scenario.min_feasible_path_length() {
        Some(p) => (p, true),
        None => {
            let best = registered
                .iter()
                .filter(|c| c.sequence.is_feasible())
                .map(|c| c.sequence.path_length())
                .fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Err(LabError::Config(
                    "scenario registers no feasible comparator".into(),
                ));
            }
            (best, false)
        }
    };

    let d = scenario.diameter();
    let horizon = scenario.horizon();
    let bounds = match config.algorithm {
        Algorithm::Adagrad => BoundKind::Adagrad(match config.overrides.known_path {
            Some(path_bound) => StepSchedule::KnownPath { path_bound },
            None => StepSchedule::PathFree,
        }),
        Algorithm::Ahag => BoundKind::Ahag {
            experts: num_experts(d, horizon),
        },
        Algorithm::Coco1 => BoundKind::Coco1 {
            experts: num_experts(d, horizon),
        },
        Algorithm::Coco2 => BoundKind::Coco2 {
            experts: num_experts(d, horizon),
            v: match config.overrides.v {
                Some(v) => v,
                None => coco2_default_v(lipschitz, d, horizon).map_err(LabError::Evaluation)?,
            },
        },
    };

    Ok(Prepared {
        config: effective,
        scenario,
        lipschitz,
        comparators,
        min_feasible_path,
        min_feasible_path_exact,
        bounds,
    })
}

fn numerical(round: usize) -> impl Fn(CocoError) -> LabError {
    move |source| LabError::Numerical { round, source }
}

/// Plays an unconstrained learner; the constraint is only measured.
fn plain_round<L: GradientLearner>(
    learner: &mut L,
    cost: &CostFn,
    constraint: &Constraint,
    t: usize,
    q_prev: f64,
) -> std::result::Result<Row, CocoError> {
    let x = learner.current_point().clone();
    let f = cost.value(&x);
    let g = constraint.value(&x);
    let q = ccv_update(q_prev, g)?;
    let grad = cost.subgradient(&x);
    learner.observe(&grad)?;
    Ok(Row {
        t,
        x: x.into_inner(),
        f,
        g,
        gplus: g_plus(g),
        q,
        grad_norm: coco_core::linalg::norm(&grad),
    })
}

enum Runner {
    Adagrad(AdaGrad),
    Ahag(Ahag),
    Coco1(Coco1),
    Coco2(Coco2),
}

/// Runs all rounds; the first oracle or numerical failure aborts with its round index.
pub fn execute(p: &Prepared) -> Result<Vec<Row>> {
    let set = Arc::clone(p.scenario.decision_set());
    let horizon = p.scenario.horizon();
    let mut runner = match p.bounds {
        BoundKind::Adagrad(schedule) => AdaGrad::new(set, schedule).map(Runner::Adagrad),
        BoundKind::Ahag { .. } => Ahag::new(set, horizon).map(Runner::Ahag),
        BoundKind::Coco1 { .. } => Coco1::new(set, horizon, p.lipschitz).map(Runner::Coco1),
        BoundKind::Coco2 { v, .. } => Coco2::new(set, horizon, v).map(Runner::Coco2),
    }
    .map_err(LabError::Evaluation)?;

    let mut rows = Vec::with_capacity(horizon);
    let mut q = 0.0;
    for t in 1..=horizon {
        let (cost, constraint) = p.scenario.round(t).map_err(numerical(t))?;
        let row = match &mut runner {
            Runner::Adagrad(l) => plain_round(l, &cost, &constraint, t, q),
            Runner::Ahag(l) => plain_round(l, &cost, &constraint, t, q),
            Runner::Coco1(c) => c.round(&cost, &constraint).map(from_core),
            Runner::Coco2(c) => c.round(&cost, &constraint).map(from_core),
        }
        .map_err(numerical(t))?;
        let finite = [row.f, row.g, row.q, row.grad_norm]
            .iter()
            .chain(&row.x)
            .all(|v| v.is_finite());
        if !finite {
            return Err(LabError::Numerical {
                round: t,
                source: CocoError::NonFinite("round output"),
            });
        }
        q = row.q;
        rows.push(row);
    }
    Ok(rows)
}

fn from_core(r: coco_core::RoundRow) -> Row {
    Row {
        t: r.t,
        x: r.x.into_inner(),
        f: r.f,
        g: r.g,
        gplus: r.gplus,
        q: r.q,
        grad_norm: r.grad_norm_surrogate,
    }
}

/// Per-comparator prefix statistics.
#[derive(Debug, Clone)]
pub struct ComparatorTrace {
    pub name: String,
    pub feasible: bool,
    /// `regret[t-1] = sum_{s<=t} f_s(x_s) - f_s(u_s)`.
    pub regret: Vec<f64>,
    /// Path length of `u_1..u_t`.
    pub path: Vec<f64>,
}

/// Prefix sums of everything the bounds depend on.
#[derive(Debug, Clone)]
pub struct Trace {
    pub grad_norm_sq: Vec<f64>,
    pub ccv: Vec<f64>,
    pub minimizer_path: Vec<f64>,
    pub comparators: Vec<ComparatorTrace>,
}

fn prefix_path(points: &[coco_core::Point]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(points.len());
    for (i, u) in points.iter().enumerate() {
        if i > 0 {
            acc += coco_core::linalg::distance(u, &points[i - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn trace(p: &Prepared, rows: &[Row]) -> Result<Trace> {
    let horizon = p.scenario.horizon();
    if rows.len() != horizon {
        return Err(LabError::Verify(format!(
            "expected {horizon} rows, found {}",
            rows.len()
        )));
    }
    let costs = p.scenario.costs().map_err(LabError::Evaluation)?;
    let mut grad_norm_sq = Vec::with_capacity(horizon);
    let mut ccv = Vec::with_capacity(horizon);
    let mut s = 0.0;
    for r in rows {
        s += r.grad_norm * r.grad_norm;
        grad_norm_sq.push(s);
        ccv.push(r.q);
    }
    let minimizers = (1..=horizon)
        .map(|t| p.scenario.minimizer(t))
        .collect::<coco_core::Result<Vec<_>>>()
        .map_err(LabError::Evaluation)?;
    let comparators = p
        .comparators
        .iter()
        .map(|c| {
            let mut acc = 0.0;
            let regret = rows
                .iter()
                .zip(&costs)
                .zip(c.sequence.points())
                .map(|((r, f), u)| {
                    acc += r.f - f.value(u);
                    acc
                })
                .collect();
            ComparatorTrace {
                name: c.name.clone(),
                feasible: c.sequence.is_feasible(),
                regret,
                path: prefix_path(c.sequence.points()),
            }
        })
        .collect();
    Ok(Trace {
        grad_norm_sq,
        ccv,
        minimizer_path: prefix_path(&minimizers),
        comparators,
    })
}

impl BoundKind {
    /// Regret budget after `t` rounds against a comparator of path length `path`, when the
    /// guarantee applies to that comparator. `anytime` restricts to bounds valid at every
    /// prefix.
    fn regret_bound(
        &self,
        p: &Prepared,
        t: usize,
        s: f64,
        path: f64,
        feasible: bool,
        anytime: bool,
    ) -> coco_core::Result<Option<f64>> {
        let d = p.scenario.diameter();
        Ok(match *self {
            BoundKind::Adagrad(schedule @ StepSchedule::KnownPath { path_bound }) => {
                if path <= path_bound {
                    Some(adagrad_bound_rhs(schedule, d, s, path_bound)?)
                } else {
                    None
                }
            }
            BoundKind::Adagrad(schedule) => Some(adagrad_bound_rhs(schedule, d, s, path)?),
            BoundKind::Ahag { experts } => Some(ahag_bound_rhs(d, experts, s, path)?),
            BoundKind::Coco1 { experts } if feasible => Some(ahag_bound_rhs(d, experts, s, path)?),
            BoundKind::Coco2 { v, .. } if feasible && !anytime => Some(
                coco2_bound_rhs_for_horizon(t, path, v, p.lipschitz, d)?.regret_rhs,
            ),
            _ => None,
        })
    }

    fn ccv_bound(
        &self,
        p: &Prepared,
        t: usize,
        s: f64,
        minimizer_path: f64,
        anytime: bool,
    ) -> coco_core::Result<Option<f64>> {
        let d = p.scenario.diameter();
        Ok(match *self {
            BoundKind::Coco1 { experts } => Some(ahag_bound_rhs(d, experts, s, minimizer_path)?),
            BoundKind::Coco2 { v, .. } if !anytime => Some(
                coco2_bound_rhs_for_horizon(t, p.min_feasible_path, v, p.lipschitz, d)?.ccv_rhs,
            ),
            _ => None,
        })
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Summary recomputable from the rows and the config alone (no wall clock).
pub fn summarize(p: &Prepared, rows: &[Row]) -> Result<Summary> {
    let tr = trace(p, rows)?;
    let horizon = p.scenario.horizon();
    let last = horizon - 1;
    let s = tr.grad_norm_sq[last];
    let q = tr.ccv[last];
    let mut out = Summary::new();
    let mut insert = |k: &str, v: Value| {
        out.insert(k.to_string(), v);
    };
    insert("algorithm", p.config.algorithm.name().into());
    insert("scenario", p.scenario.family().name().into());
    insert("seed", p.scenario.spec().seed.into());
    insert("horizon", horizon.into());
    insert("dim", p.scenario.dim().into());
    insert("diameter", num(p.scenario.diameter()));
    insert("lipschitz", num(p.lipschitz));
    insert("ccv", num(q));
    insert("grad_norm_sq_sum", num(s));
    match p.bounds {
        BoundKind::Adagrad(StepSchedule::PathFree) => insert("step_schedule", "path_free".into()),
        BoundKind::Adagrad(StepSchedule::KnownPath { path_bound }) => {
            insert("step_schedule", "known_path".into());
            insert("known_path_bound", num(path_bound));
        }
        BoundKind::Ahag { experts } | BoundKind::Coco1 { experts } => {
            insert("num_experts", experts.into())
        }
        BoundKind::Coco2 { experts, v } => {
            insert("num_experts", experts.into());
            insert("v", num(v));
        }
    }

    let mut all_ok = true;
    for c in &tr.comparators {
        let path = c.path[last];
        let regret = c.regret[last];
        insert(&format!("path_length_{}", c.name), num(path));
        insert(&format!("feasible_{}", c.name), c.feasible.into());
        insert(&format!("regret_{}", c.name), num(regret));
        let bound = p
            .bounds
            .regret_bound(p, horizon, s, path, c.feasible, false)
            .map_err(LabError::Evaluation)?;
        if let Some(b) = bound {
            let ok = regret <= b;
            all_ok &= ok;
            insert(&format!("bound_{}", c.name), num(b));
            insert(&format!("bound_ok_{}", c.name), ok.into());
        }
    }

    let ccv_bound = p
        .bounds
        .ccv_bound(p, horizon, s, tr.minimizer_path[last], false)
        .map_err(LabError::Evaluation)?;
    match p.bounds {
        BoundKind::Coco1 { .. } => insert("minimizer_path_length", num(tr.minimizer_path[last])),
        BoundKind::Coco2 { .. } => {
            insert("min_feasible_path_length", num(p.min_feasible_path));
            insert("min_feasible_path_exact", p.min_feasible_path_exact.into());
        }
        _ => {}
    }
    if let Some(b) = ccv_bound {
        let ok = q <= b;
        all_ok &= ok;
        insert("ccv_bound", num(b));
        insert("ccv_bound_ok", ok.into());
    }
    insert("all_bounds_ok", all_ok.into());
    Ok(out)
}

/// Long-format `(series, t, value)` trajectories: CCV, regret per comparator and every
/// bound that holds at each prefix.
pub fn plot_series(p: &Prepared, rows: &[Row]) -> Result<Vec<(String, usize, f64)>> {
    let tr = trace(p, rows)?;
    let mut out = Vec::new();
    for (i, q) in tr.ccv.iter().enumerate() {
        out.push(("ccv".to_string(), i + 1, *q));
    }
    for i in 0..tr.ccv.len() {
        let b = p
            .bounds
            .ccv_bound(p, i + 1, tr.grad_norm_sq[i], tr.minimizer_path[i], true)
            .map_err(LabError::Evaluation)?;
        if let Some(b) = b {
            out.push(("ccv_bound".to_string(), i + 1, b));
        }
    }
    for c in &tr.comparators {
        for (i, r) in c.regret.iter().enumerate() {
            out.push((format!("regret_{}", c.name), i + 1, *r));
        }
        for i in 0..c.regret.len() {
            let b = p
                .bounds
                .regret_bound(p, i + 1, tr.grad_norm_sq[i], c.path[i], c.feasible, true)
                .map_err(LabError::Evaluation)?;
            if let Some(b) = b {
                out.push((format!("bound_{}", c.name), i + 1, b));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use coco_core::{ScenarioFamily, ScenarioSpec};

    fn cfg(family: ScenarioFamily, alg: Algorithm, horizon: usize) -> RunConfig {
        RunConfig::new(ScenarioSpec::new(family, horizon, 5), alg)
    }

    #[test]
    fn trivial_scenario_is_inert() {
        for alg in [Algorithm::Adagrad, Algorithm::Ahag, Algorithm::Coco1, Algorithm::Coco2] {
            let p = prepare(&cfg(ScenarioFamily::Trivial, alg, 50)).unwrap();
            let rows = execute(&p).unwrap();
            assert_eq!(rows.len(), 50);
            let s = summarize(&p, &rows).unwrap();
            assert_eq!(s["ccv"], num(0.0), "{alg:?}");
            for (k, v) in &s {
                if k.starts_with("regret_") {
                    assert_eq!(v.as_f64(), Some(0.0), "{alg:?} {k}");
                }
            }
            assert_eq!(s["all_bounds_ok"], Value::Bool(true), "{alg:?}");
        }
    }

    #[test]
    fn q_column_is_non_decreasing() {
        let p = prepare(&cfg(ScenarioFamily::DisjointAlternating, Algorithm::Coco1, 200)).unwrap();
        let rows = execute(&p).unwrap();
        assert!(rows.windows(2).all(|w| w[1].q >= w[0].q));
        assert!(rows.iter().enumerate().all(|(i, r)| r.t == i + 1));
    }

    #[test]
    fn unknown_comparator_is_a_config_error() {
        let mut c = cfg(ScenarioFamily::Static, Algorithm::Coco2, 10);
        c.comparators = Some(vec!["nope".into()]);
        assert!(matches!(prepare(&c), Err(LabError::Config(_))));
    }

    #[test]
    fn g_override_below_scenario_bound_rejected() {
        let mut c = cfg(ScenarioFamily::Static, Algorithm::Coco1, 10);
        c.overrides.g = Some(0.5);
        assert!(matches!(prepare(&c), Err(LabError::Config(_))));
    }

    #[test]
    fn known_path_bound_only_covers_short_comparators() {
        let mut c = cfg(ScenarioFamily::RotatingLinear, Algorithm::Adagrad, 100);
        c.overrides.known_path = Some(0.0);
        let p = prepare(&c).unwrap();
        let s = summarize(&p, &execute(&p).unwrap()).unwrap();
        assert!(s.contains_key("bound_origin"));
        assert!(!s.contains_key("bound_minimizers"));
    }
}
