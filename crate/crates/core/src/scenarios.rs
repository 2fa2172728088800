//! Seeded adversarial instance generators.
//!
//! Randomness enters only through a handful of scenario parameters (phases, directions)
//! drawn once from the seed; every round is then a closed-form function of `t`, so a run
//! is a deterministic function of its `ScenarioSpec`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CocoError, Result};
use crate::geometry::GeometricSet;
use crate::linalg;
use crate::problem::{
    ComparatorSequence, Constraint, ConstraintFn, ConvexOracle, CostFn, DecisionSet, Point,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioFamily {
    /// `f = 0`, `g = -1` on a cube.
    Trivial,
    /// Time-invariant linear cost pushing against a fixed halfspace, d = 2.
    Static,
    /// `f = |x|`, constraints `x <= 1` and `x >= -1` alternating; 0 is always feasible.
    Alternating,
    /// Feasible intervals `[0, 1]` and `[2, 3]` alternating; no common feasible point.
    DisjointAlternating,
    /// Unit ball whose centre orbits slowly, linear costs with a rotating direction, d = 2.
    TrackingBall,
    /// Unconstrained, linear costs rotating in the first coordinate plane.
    RotatingLinear,
    /// Unconstrained, `G ||x - c_t||` with a Lissajous target.
    MovingTarget,
}

impl ScenarioFamily {
    pub const ALL: [ScenarioFamily; 7] = [
        ScenarioFamily::Trivial,
        ScenarioFamily::Static,
        ScenarioFamily::Alternating,
        ScenarioFamily::DisjointAlternating,
        ScenarioFamily::TrackingBall,
        ScenarioFamily::RotatingLinear,
        ScenarioFamily::MovingTarget,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioFamily::Trivial => "trivial",
            ScenarioFamily::Static => "static",
            ScenarioFamily::Alternating => "alternating",
            ScenarioFamily::DisjointAlternating => "disjoint-alternating",
            ScenarioFamily::TrackingBall => "tracking-ball",
            ScenarioFamily::RotatingLinear => "rotating-linear",
            ScenarioFamily::MovingTarget => "moving-target",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ScenarioFamily::Trivial => "f = 0, g = -1 on [-1,1]^d; nothing to learn",
            ScenarioFamily::Static => {
                "d=2 unit ball, fixed linear cost pushing against a fixed halfspace"
            }
            ScenarioFamily::Alternating => {
                "d=1 on [-3,3], f=|x|, g alternates x-1 / -x-1; common feasible point 0"
            }
            ScenarioFamily::DisjointAlternating => {
                "d=1 on [-3,3], f=|x-1.5|, feasible sets [0,1] / [2,3] alternate; min feasible path T-1"
            }
            ScenarioFamily::TrackingBall => {
                "d=2 ball of radius 3, unit feasible ball orbiting at radius 1.5, rotating linear cost"
            }
            ScenarioFamily::RotatingLinear => "unconstrained unit ball, linear cost rotating in a plane",
            ScenarioFamily::MovingTarget => "unconstrained unit ball, G||x - c_t|| with a Lissajous target",
        }
    }

    fn fixed_dim(&self) -> Option<usize> {
        match self {
            ScenarioFamily::Static | ScenarioFamily::TrackingBall => Some(2),
            ScenarioFamily::Alternating | ScenarioFamily::DisjointAlternating => Some(1),
            _ => None,
        }
    }

    fn default_speed(&self) -> f64 {
        match self {
            ScenarioFamily::TrackingBall => 0.01,
            ScenarioFamily::RotatingLinear => 0.05,
            ScenarioFamily::MovingTarget => 0.02,
            _ => 0.0,
        }
    }
}

/// Declarative scenario description; loadable from the harness config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: ScenarioFamily,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// Dimension for families that allow a choice (default 2; 1 for `trivial`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Declared Lipschitz bound `G`; must dominate every generated oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Per-round angular speed of the moving part (orbit, rotation or target).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    /// Per-round angular speed of the cost direction (tracking-ball only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_speed: Option<f64>,
}

impl ScenarioSpec {
    pub fn new(family: ScenarioFamily, horizon: usize, seed: u64) -> Self {
        Self {
            family,
            horizon,
            seed,
            dim: None,
            lipschitz: None,
            speed: None,
            cost_speed: None,
        }
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }
}

/// A named comparator sequence registered by a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedComparator {
    pub name: String,
    pub sequence: ComparatorSequence,
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    Trivial,
    Static { cost: CostFn, constraint: ConstraintFn, minimizer: Vec<f64> },
    Alternating,
    DisjointAlternating,
    TrackingBall { orbit_phase: f64, cost_phase: f64, speed: f64, cost_speed: f64 },
    RotatingLinear { phase: f64, speed: f64, scale: f64 },
    MovingTarget { phases: [f64; 2], speed: f64, scale: f64 },
}

pub const TRACKING_ORBIT_RADIUS: f64 = 1.5;
const TARGET_AMPLITUDE: f64 = 0.6;

/// A validated scenario instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    decision_set: Arc<DecisionSet>,
    dim: usize,
    g_lip: f64,
    params: Params,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        if spec.horizon == 0 {
            return Err(CocoError::InvalidScenario("horizon must be positive".into()));
        }
        let family = spec.family;
        let dim = match (family.fixed_dim(), spec.dim) {
            (Some(fixed), Some(d)) if d != fixed => {
                return Err(CocoError::InvalidScenario(format!(
                    "{} is {fixed}-dimensional, got dim = {d}",
                    family.name()
                )))
            }
            (Some(fixed), _) => fixed,
            (None, Some(0)) => return Err(CocoError::InvalidScenario("dim must be positive".into())),
            (None, Some(d)) => d,
            (None, None) if family == ScenarioFamily::Trivial => 1,
            (None, None) => 2,
        };
        if matches!(family, ScenarioFamily::RotatingLinear) && dim < 2 {
            return Err(CocoError::InvalidScenario("rotating-linear needs dim >= 2".into()));
        }
        let speed = spec.speed.unwrap_or_else(|| family.default_speed());
        if !speed.is_finite() || speed < 0.0 {
            return Err(CocoError::InvalidScenario(format!("speed {speed} must be non-negative")));
        }
        let cost_speed = spec.cost_speed.unwrap_or(0.01);
        if !cost_speed.is_finite() || cost_speed < 0.0 {
            return Err(CocoError::InvalidScenario(format!(
                "cost_speed {cost_speed} must be non-negative"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let geometry = match family {
            ScenarioFamily::Trivial => GeometricSet::cube(dim, 1.0)?,
            ScenarioFamily::Alternating | ScenarioFamily::DisjointAlternating => {
                GeometricSet::cube(1, 3.0)?
            }
            ScenarioFamily::TrackingBall => GeometricSet::ball(vec![0.0; 2], 3.0)?,
            _ => GeometricSet::ball(vec![0.0; dim], 1.0)?,
        };
        let decision_set = Arc::new(DecisionSet::new(geometry)?);

        let scale = spec.lipschitz.unwrap_or(1.0);
        let params = match family {
            ScenarioFamily::Trivial => Params::Trivial,
            ScenarioFamily::Alternating => Params::Alternating,
            ScenarioFamily::DisjointAlternating => Params::DisjointAlternating,
            ScenarioFamily::Static => {
                let theta = rng.gen_range(0.0..TAU);
                let tilt = rng.gen_range(-PI / 6.0..=PI / 6.0);
                let a = vec![theta.cos(), theta.sin()];
                let b = vec![(theta + tilt).cos(), (theta + tilt).sin()];
                // feasible: <b, x> >= -1/4
                let offset = 0.25;
                let minimizer = static_minimizer(&a, &b, offset);
                Params::Static {
                    cost: CostFn::Affine { slope: a, intercept: 0.0 },
                    constraint: ConstraintFn::Affine {
                        normal: linalg::scale(&b, -1.0),
                        offset,
                    },
                    minimizer,
                }
            }
            ScenarioFamily::TrackingBall => Params::TrackingBall {
                orbit_phase: rng.gen_range(0.0..TAU),
                cost_phase: rng.gen_range(0.0..TAU),
                speed,
                cost_speed,
            },
            ScenarioFamily::RotatingLinear => Params::RotatingLinear {
                phase: rng.gen_range(0.0..TAU),
                speed,
                scale,
            },
            ScenarioFamily::MovingTarget => Params::MovingTarget {
                phases: [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)],
                speed,
                scale,
            },
        };

        let g_lip = spec.lipschitz.unwrap_or(1.0);
        if !(g_lip.is_finite() && g_lip > 0.0) {
            return Err(CocoError::InvalidScenario(format!(
                "declared Lipschitz bound {g_lip} must be positive"
            )));
        }
        let scenario = Self {
            spec,
            decision_set,
            dim,
            g_lip,
            params,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Generates every round once: non-empty feasible sets and declared `G` dominating
    /// every oracle's Lipschitz bound.
    fn validate(&self) -> Result<()> {
        for t in 1..=self.horizon() {
            let (cost, constraint) = self.round(t)?;
            let lip = cost.lipschitz_bound().max(constraint.lipschitz_bound());
            if lip > self.g_lip * (1.0 + 1e-12) {
                return Err(CocoError::InvalidScenario(format!(
                    "round {t}: oracle Lipschitz bound {lip} exceeds declared G = {}",
                    self.g_lip
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn family(&self) -> ScenarioFamily {
        self.spec.family
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.g_lip
    }

    pub fn decision_set(&self) -> &Arc<DecisionSet> {
        &self.decision_set
    }

    pub fn diameter(&self) -> f64 {
        self.decision_set.diameter()
    }

    /// Same scenario (same seed and parameters) over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.spec.with_horizon(horizon))
    }

    fn check_round(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon() {
            return Err(CocoError::InvalidParameter(format!(
                "round {t} outside 1..={}",
                self.horizon()
            )));
        }
        Ok(())
    }

    pub fn cost(&self, t: usize) -> Result<CostFn> {
        self.check_round(t)?;
        let s = t as f64;
        Ok(match &self.params {
            Params::Trivial => CostFn::zero(self.dim),
            Params::Static { cost, .. } => cost.clone(),
            Params::Alternating => CostFn::NormOffset {
                center: vec![0.0],
                scale: 1.0,
            },
            Params::DisjointAlternating => CostFn::NormOffset {
                center: vec![1.5],
                scale: 1.0,
            },
            Params::TrackingBall {
                cost_phase,
                cost_speed,
                ..
            } => {
                let ang = cost_phase + cost_speed * s;
                CostFn::Affine {
                    slope: vec![ang.cos(), ang.sin()],
                    intercept: 0.0,
                }
            }
            Params::RotatingLinear { phase, speed, scale } => {
                let ang = phase + speed * s;
                let mut slope = vec![0.0; self.dim];
                slope[0] = scale * ang.cos();
                slope[1] = scale * ang.sin();
                CostFn::Affine { slope, intercept: 0.0 }
            }
            Params::MovingTarget { scale, .. } => CostFn::NormOffset {
                center: self.target(t),
                scale: *scale,
            },
        })
    }

    pub fn constraint_fn(&self, t: usize) -> Result<ConstraintFn> {
        self.check_round(t)?;
        let odd = t % 2 == 1;
        Ok(match &self.params {
            Params::Static { constraint, .. } => constraint.clone(),
            Params::Alternating => ConstraintFn::Affine {
                normal: vec![if odd { 1.0 } else { -1.0 }],
                offset: 1.0,
            },
            Params::DisjointAlternating => {
                let (lo, hi) = if odd { (0.0, 1.0) } else { (2.0, 3.0) };
                ConstraintFn::BoxExcess {
                    lower: vec![lo],
                    upper: vec![hi],
                }
            }
            Params::TrackingBall { .. } => ConstraintFn::BallDistance {
                center: self.orbit_center(t),
                radius: 1.0,
            },
            Params::Trivial | Params::RotatingLinear { .. } | Params::MovingTarget { .. } => {
                ConstraintFn::Inactive {
                    dim: self.dim,
                    value: -1.0,
                }
            }
        })
    }

    pub fn constraint(&self, t: usize) -> Result<Constraint> {
        let func = self.constraint_fn(t)?;
        if let ConstraintFn::Inactive { .. } = func {
            return Ok(Constraint::inactive(&self.decision_set));
        }
        Constraint::new(func, &self.decision_set)
    }

    pub fn round(&self, t: usize) -> Result<(CostFn, Constraint)> {
        Ok((self.cost(t)?, self.constraint(t)?))
    }

    pub fn costs(&self) -> Result<Vec<CostFn>> {
        (1..=self.horizon()).map(|t| self.cost(t)).collect()
    }

    pub fn constraints(&self) -> Result<Vec<Constraint>> {
        (1..=self.horizon()).map(|t| self.constraint(t)).collect()
    }

    fn orbit_center(&self, t: usize) -> Vec<f64> {
        match &self.params {
            Params::TrackingBall {
                orbit_phase, speed, ..
            } => {
                let ang = orbit_phase + speed * t as f64;
                vec![TRACKING_ORBIT_RADIUS * ang.cos(), TRACKING_ORBIT_RADIUS * ang.sin()]
            }
            _ => unreachable!("orbit centre only exists for tracking-ball"),
        }
    }

    fn target(&self, t: usize) -> Vec<f64> {
        match &self.params {
            Params::MovingTarget { phases, speed, .. } => {
                let s = t as f64;
                let mut c = vec![0.0; self.dim];
                c[0] = TARGET_AMPLITUDE * (phases[0] + speed * s).cos();
                if self.dim > 1 {
                    c[1] = TARGET_AMPLITUDE * (phases[1] + 2.0 * speed * s).sin();
                }
                c
            }
            _ => unreachable!("target only exists for moving-target"),
        }
    }

    /// Closed-form `argmin_{x in X*_t} f_t(x)`.
    pub fn minimizer(&self, t: usize) -> Result<Point> {
        self.check_round(t)?;
        Ok(Point::from(match &self.params {
            Params::Trivial | Params::Alternating => vec![0.0; self.dim],
            Params::Static { minimizer, .. } => minimizer.clone(),
            Params::DisjointAlternating => vec![if t % 2 == 1 { 1.0 } else { 2.0 }],
            Params::TrackingBall { .. } => {
                let cost = self.cost(t)?;
                let a = cost.subgradient(&[0.0, 0.0]);
                linalg::sub(&self.orbit_center(t), &a)
            }
            Params::RotatingLinear { .. } => {
                let a = self.cost(t)?.subgradient(&vec![0.0; self.dim]);
                let n = linalg::norm(&a);
                linalg::scale(&a, -1.0 / n)
            }
            Params::MovingTarget { .. } => self.target(t),
        }))
    }

    /// Path length of the constrained-minimiser sequence.
    pub fn minimizer_path_length(&self) -> Result<f64> {
        let pts = (1..=self.horizon())
            .map(|t| self.minimizer(t))
            .collect::<Result<Vec<_>>>()?;
        crate::problem::path_length(&pts)
    }

    /// Exact minimum feasible path length when the family admits a closed form.
    pub fn min_feasible_path_length(&self) -> Option<f64> {
        match self.family() {
            ScenarioFamily::DisjointAlternating => Some(self.horizon() as f64 - 1.0),
            ScenarioFamily::TrackingBall => None,
            _ => Some(0.0),
        }
    }

    /// Whether one point is feasible in every round.
    pub fn has_common_feasible_point(&self) -> bool {
        match self.family() {
            ScenarioFamily::DisjointAlternating => false,
            ScenarioFamily::TrackingBall => self.horizon() == 1,
            _ => true,
        }
    }

    fn constant(&self, p: Vec<f64>) -> Vec<Point> {
        vec![Point::from(p); self.horizon()]
    }

    fn blocks(&self) -> Result<Vec<Point>> {
        let block = (self.horizon() as f64).sqrt().ceil() as usize;
        (1..=self.horizon())
            .map(|t| self.minimizer(((t - 1) / block) * block + 1))
            .collect()
    }

    /// Comparator constructions registered for this family, with feasibility checked
    /// against every round's constraint.
    pub fn comparators(&self) -> Result<Vec<NamedComparator>> {
        let minimizers = (1..=self.horizon())
            .map(|t| self.minimizer(t))
            .collect::<Result<Vec<_>>>()?;
        let mut raw: Vec<(&str, Vec<Point>)> = Vec::new();
        match self.family() {
            ScenarioFamily::Trivial | ScenarioFamily::Alternating => {
                raw.push(("origin", self.constant(vec![0.0; self.dim])));
                raw.push(("minimizers", minimizers));
            }
            ScenarioFamily::Static => {
                raw.push(("origin", self.constant(vec![0.0; self.dim])));
                raw.push(("minimizers", minimizers));
            }
            ScenarioFamily::DisjointAlternating => {
                let far = (1..=self.horizon())
                    .map(|t| Point::from(vec![if t % 2 == 1 { 0.0 } else { 3.0 }]))
                    .collect();
                raw.push(("minimizers", minimizers));
                raw.push(("far", far));
            }
            ScenarioFamily::TrackingBall => {
                let centers = (1..=self.horizon())
                    .map(|t| Point::from(self.orbit_center(t)))
                    .collect();
                let shrink = (TRACKING_ORBIT_RADIUS - 1.0) / TRACKING_ORBIT_RADIUS;
                let inner = (1..=self.horizon())
                    .map(|t| Point::from(linalg::scale(&self.orbit_center(t), shrink)))
                    .collect();
                raw.push(("minimizers", minimizers));
                raw.push(("centers", centers));
                raw.push(("inner", inner));
            }
            ScenarioFamily::RotatingLinear | ScenarioFamily::MovingTarget => {
                raw.push(("origin", self.constant(vec![0.0; self.dim])));
                raw.push(("blocks", self.blocks()?));
                raw.push(("minimizers", minimizers));
            }
        }
        let constraints = self.constraints()?;
        raw.into_iter()
            .map(|(name, pts)| {
                Ok(NamedComparator {
                    name: name.to_string(),
                    sequence: ComparatorSequence::with_constraints(pts, &constraints)?,
                })
            })
            .collect()
    }
}

/// Minimiser of `<a, x>` over `{||x|| <= 1, <b, x> >= -offset}` when the unconstrained
/// minimiser `-a` is cut off: the better endpoint of the chord `<b, x> = -offset`.
fn static_minimizer(a: &[f64], b: &[f64], offset: f64) -> Vec<f64> {
    let unconstrained = linalg::scale(a, -1.0);
    if linalg::dot(b, &unconstrained) >= -offset {
        return unconstrained;
    }
    let perp = [-b[1], b[0]];
    let half_chord = (1.0 - offset * offset).sqrt();
    let base = linalg::scale(b, -offset);
    let candidates = [1.0, -1.0].map(|s| {
        let mut p = base.clone();
        linalg::axpy(s * half_chord, &perp, &mut p);
        p
    });
    if linalg::dot(a, &candidates[0]) <= linalg::dot(a, &candidates[1]) {
        candidates[0].clone()
    } else {
        candidates[1].clone()
    }
}

/// Sum of chord lengths for a point moving on a circle of radius `r` by `speed` radians
/// per round over `horizon` rounds.
pub fn orbit_path_length(radius: f64, speed: f64, horizon: usize) -> f64 {
    horizon.saturating_sub(1) as f64 * 2.0 * radius * (speed / 2.0).sin().abs()
}
