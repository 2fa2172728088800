//! Problem protocol types and performance metrics: points, cost and constraint oracles,
//! comparator sequences, per-round run records, regret and cumulative constraint violation.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{CocoError, Result};
use crate::geometry::GeometricSet;
use crate::linalg::{self, distance, dot, norm};

/// Tolerance for declaring a comparator point feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A point of the decision space `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Checked constructor: rejects empty or non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(CocoError::InvalidParameter("zero-dimensional point".into()));
        }
        if !linalg::all_finite(&coords) {
            return Err(CocoError::NonFinite("point coordinates"));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

/// The learner's decision set: a bounded convex set containing the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    geometry: GeometricSet,
    diameter: f64,
}

impl DecisionSet {
    pub fn new(geometry: GeometricSet) -> Result<Self> {
        let diameter = geometry.diameter_bound();
        if !diameter.is_finite() || diameter <= 0.0 {
            return Err(CocoError::InvalidSet(format!(
                "decision set must be bounded with positive diameter, got {diameter}"
            )));
        }
        if !geometry.contains(&vec![0.0; geometry.dim()]) {
            return Err(CocoError::InvalidSet("decision set must contain the origin".into()));
        }
        Ok(Self { geometry, diameter })
    }

    pub fn geometry(&self) -> &GeometricSet {
        &self.geometry
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn project(&self, x: &[f64]) -> Result<Point> {
        self.geometry.project(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.geometry.contains(x)
    }
}

/// First-order oracle for a convex function with a known Lipschitz bound.
pub trait ConvexOracle {
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    fn lipschitz_bound(&self) -> f64;
}

/// Per-round cost function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFn {
    /// `slope . x + intercept`
    Affine { slope: Vec<f64>, intercept: f64 },
    /// `scale * ||x - center||`
    NormOffset { center: Vec<f64>, scale: f64 },
}

impl CostFn {
    pub fn zero(dim: usize) -> Self {
        CostFn::Affine {
            slope: vec![0.0; dim],
            intercept: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CostFn::Affine { slope, .. } => slope.len(),
            CostFn::NormOffset { center, .. } => center.len(),
        }
    }
}

impl ConvexOracle for CostFn {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            CostFn::Affine { slope, intercept } => dot(slope, x) + intercept,
            CostFn::NormOffset { center, scale } => scale * distance(x, center),
        }
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CostFn::Affine { slope, .. } => slope.clone(),
            CostFn::NormOffset { center, scale } => {
                let diff = linalg::sub(x, center);
                let r = norm(&diff);
                if r > 0.0 {
                    linalg::scale(&diff, scale / r)
                } else {
                    vec![0.0; x.len()]
                }
            }
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        match self {
            CostFn::Affine { slope, .. } => norm(slope),
            CostFn::NormOffset { scale, .. } => scale.abs(),
        }
    }
}

/// Constraint function families whose sublevel set `{g <= 0}` has a closed-form projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintFn {
    /// `normal . x - offset`; sublevel set is a halfspace.
    Affine { normal: Vec<f64>, offset: f64 },
    /// `||x - center|| - radius`; sublevel set is a ball.
    BallDistance { center: Vec<f64>, radius: f64 },
    /// `max_i max(lower_i - x_i, x_i - upper_i)`; sublevel set is a box.
    BoxExcess { lower: Vec<f64>, upper: Vec<f64> },
    /// Constant negative value; never violated.
    Inactive { dim: usize, value: f64 },
}

impl ConstraintFn {
    pub fn dim(&self) -> usize {
        match self {
            ConstraintFn::Affine { normal, .. } => normal.len(),
            ConstraintFn::BallDistance { center, .. } => center.len(),
            ConstraintFn::BoxExcess { lower, .. } => lower.len(),
            ConstraintFn::Inactive { dim, .. } => *dim,
        }
    }

    /// The sublevel set `{x : g(x) <= 0}`, or `None` when it is all of `R^d`.
    pub fn sublevel_set(&self) -> Result<Option<GeometricSet>> {
        match self {
            ConstraintFn::Affine { normal, offset } => {
                GeometricSet::halfspace(normal.clone(), *offset).map(Some)
            }
            ConstraintFn::BallDistance { center, radius } => {
                GeometricSet::ball(center.clone(), *radius).map(Some)
            }
            ConstraintFn::BoxExcess { lower, upper } => {
                GeometricSet::boxed(lower.clone(), upper.clone()).map(Some)
            }
            ConstraintFn::Inactive { value, .. } => {
                if *value > 0.0 {
                    Err(CocoError::InvalidParameter(format!(
                        "inactive constraint value {value} must be non-positive"
                    )))
                } else {
                    Ok(None)
                }
            }
        }
    }
}

impl ConvexOracle for ConstraintFn {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            ConstraintFn::Affine { normal, offset } => dot(normal, x) - offset,
            ConstraintFn::BallDistance { center, radius } => distance(x, center) - radius,
            ConstraintFn::BoxExcess { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (l, u))| (l - xi).max(xi - u))
                .fold(f64::NEG_INFINITY, f64::max),
            ConstraintFn::Inactive { value, .. } => *value,
        }
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConstraintFn::Affine { normal, .. } => normal.clone(),
            ConstraintFn::BallDistance { center, .. } => {
                let diff = linalg::sub(x, center);
                let r = norm(&diff);
                if r > 0.0 {
                    linalg::scale(&diff, 1.0 / r)
                } else {
                    vec![0.0; x.len()]
                }
            }
            ConstraintFn::BoxExcess { lower, upper } => {
                // One active coordinate of the max; first index on ties.
                let mut grad = vec![0.0; x.len()];
                let mut best = f64::NEG_INFINITY;
                let mut arg = (0, 0.0);
                for (i, (xi, (l, u))) in x.iter().zip(lower.iter().zip(upper)).enumerate() {
                    if l - xi > best {
                        best = l - xi;
                        arg = (i, -1.0);
                    }
                    if xi - u > best {
                        best = xi - u;
                        arg = (i, 1.0);
                    }
                }
                grad[arg.0] = arg.1;
                grad
            }
            ConstraintFn::Inactive { dim, .. } => vec![0.0; *dim],
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        match self {
            ConstraintFn::Affine { normal, .. } => norm(normal),
            ConstraintFn::BallDistance { .. } | ConstraintFn::BoxExcess { .. } => 1.0,
            ConstraintFn::Inactive { .. } => 0.0,
        }
    }
}

/// A round's constraint together with its feasible region `{x in X : g(x) <= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    func: ConstraintFn,
    feasible_region: GeometricSet,
}

impl Constraint {
    /// Builds the feasible region as the intersection of the decision set with the
    /// constraint's sublevel set. Fails if that intersection is empty.
    pub fn new(func: ConstraintFn, decision_set: &DecisionSet) -> Result<Self> {
        if func.dim() != decision_set.dim() {
            return Err(CocoError::DimensionMismatch {
                expected: decision_set.dim(),
                found: func.dim(),
            });
        }
        let feasible_region = match func.sublevel_set()? {
            Some(sub) => GeometricSet::intersection(vec![decision_set.geometry().clone(), sub])?,
            None => decision_set.geometry().clone(),
        };
        Ok(Self {
            func,
            feasible_region,
        })
    }

    /// The always-satisfied constraint `g = -1`.
    pub fn inactive(decision_set: &DecisionSet) -> Self {
        Self {
            func: ConstraintFn::Inactive {
                dim: decision_set.dim(),
                value: -1.0,
            },
            feasible_region: decision_set.geometry().clone(),
        }
    }

    pub fn func(&self) -> &ConstraintFn {
        &self.func
    }

    pub fn feasible_region(&self) -> &GeometricSet {
        &self.feasible_region
    }

    pub fn is_satisfied(&self, x: &[f64]) -> bool {
        self.func.value(x) <= FEASIBILITY_TOL
    }
}

impl ConvexOracle for Constraint {
    fn value(&self, x: &[f64]) -> f64 {
        self.func.value(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.func.subgradient(x)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.func.lipschitz_bound()
    }
}

/// A benchmark action sequence `u_1..u_T` with its path length.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorSequence {
    points: Vec<Point>,
    path_length: f64,
    feasible: bool,
}

impl ComparatorSequence {
    /// Builds an unvalidated (not known to be feasible) comparator.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let path_length = path_length(&points)?;
        Ok(Self {
            points,
            path_length,
            feasible: false,
        })
    }

    /// Builds a comparator and marks it feasible iff `g_t(u_t) <= 1e-9` for every round.
    pub fn with_constraints(points: Vec<Point>, constraints: &[Constraint]) -> Result<Self> {
        let mut seq = Self::new(points)?;
        if constraints.len() != seq.points.len() {
            return Err(CocoError::LengthMismatch {
                expected: seq.points.len(),
                found: constraints.len(),
            });
        }
        seq.feasible = seq
            .points
            .iter()
            .zip(constraints)
            .all(|(u, c)| c.is_satisfied(u));
        Ok(seq)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn path_length(&self) -> f64 {
        self.path_length
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One row of a run trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    /// 1-based round index.
    pub t: usize,
    pub x: Point,
    pub f: f64,
    pub g: f64,
    pub gplus: f64,
    /// Cumulative constraint violation after this round.
    pub q: f64,
    /// Norm of the (sub)gradient fed to the inner learner this round.
    pub grad_norm_surrogate: f64,
    /// Value of the surrogate cost at `x` (equals `f` for unconstrained learners).
    pub surrogate_value: f64,
}

/// Per-round trajectory of a finished or in-progress run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    rows: Vec<RoundRow>,
}

impl RunRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(horizon: usize) -> Self {
        Self {
            rows: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, row: RoundRow) {
        debug_assert!(row.q >= self.final_q(), "Q must be non-decreasing");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[RoundRow] {
        &self.rows
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn final_q(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.q)
    }

    pub fn actions(&self) -> Vec<Point> {
        self.rows.iter().map(|r| r.x.clone()).collect()
    }

    /// `sum_t ||grad_t||^2` of the gradients fed to the inner learner.
    pub fn surrogate_grad_norm_sq(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.grad_norm_surrogate * r.grad_norm_surrogate)
            .sum()
    }
}

/// Positive part of a constraint value.
pub fn g_plus(g_value: f64) -> f64 {
    g_value.max(0.0)
}

/// `sum_{t=2}^T ||u_t - u_{t-1}||`; the first round contributes nothing.
pub fn path_length(points: &[Point]) -> Result<f64> {
    let first = points.first().ok_or(CocoError::EmptyComparator)?;
    let dim = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(CocoError::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        });
    }
    Ok(points.windows(2).map(|w| distance(&w[1], &w[0])).sum())
}

/// `sum_t [f_t(x_t) - f_t(u_t)]`.
pub fn ud_regret<C: ConvexOracle>(
    costs: &[C],
    actions: &[Point],
    comparators: &ComparatorSequence,
) -> Result<f64> {
    if actions.len() != costs.len() {
        return Err(CocoError::LengthMismatch {
            expected: costs.len(),
            found: actions.len(),
        });
    }
    if comparators.len() != costs.len() {
        return Err(CocoError::LengthMismatch {
            expected: costs.len(),
            found: comparators.len(),
        });
    }
    Ok(costs
        .iter()
        .zip(actions)
        .zip(comparators.points())
        .map(|((f, x), u)| f.value(x) - f.value(u))
        .sum())
}

/// `Q(t) = Q(t-1) + max(0, g_t(x_t))`.
pub fn ccv_update(q_prev: f64, g_value: f64) -> Result<f64> {
    if q_prev < 0.0 {
        return Err(CocoError::NegativeCcvState(q_prev));
    }
    if !q_prev.is_finite() || !g_value.is_finite() {
        return Err(CocoError::NonFinite("CCV update"));
    }
    Ok(q_prev + g_plus(g_value))
}
