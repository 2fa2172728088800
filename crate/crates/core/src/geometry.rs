//! Convex sets with exact Euclidean projection, distance and distance-subgradient oracles.
//!
//! Primitive sets (box, ball, halfspace) project in closed form. Intersections are
//! projected with Dykstra's alternating projection over their primitive components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CocoError, Result};
use crate::linalg::{self, distance, dot, norm};
use crate::problem::Point;

/// Tolerance used by [`GeometricSet::contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance a projected point must satisfy to count as a member.
pub const PROJECTION_TOL: f64 = 1e-8;
/// Distances at or below this are treated as zero by the distance subgradient.
pub const DIST_ZERO_TOL: f64 = 1e-8;
pub const DYKSTRA_MAX_ITER: usize = 10_000;
pub const DYKSTRA_STEP_TOL: f64 = 1e-10;
/// Residual above which an intersection is declared empty.
pub const PROBE_RESIDUAL_TOL: f64 = 1e-6;
const PROBE_STARTS: usize = 3;
const PROBE_SEED: u64 = 0x5eed_c0c0;

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    /// `lower <= x <= upper` coordinatewise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `||x - center|| <= radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `normal . x <= offset`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// Flattened list of primitive sets; never nested, always at least two members.
    Intersection(Vec<GeometricSet>),
}

/// A closed convex subset of `R^d`. Only constructible through validating constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricSet {
    kind: SetKind,
    dim: usize,
}

impl GeometricSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(CocoError::InvalidSet(format!(
                "box bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if !linalg::all_finite(&lower) || !linalg::all_finite(&upper) {
            return Err(CocoError::NonFinite("box bounds"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(CocoError::InvalidSet("box lower bound exceeds upper bound".into()));
        }
        let dim = lower.len();
        Ok(Self {
            kind: SetKind::Box { lower, upper },
            dim,
        })
    }

    /// Symmetric box `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::boxed(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(CocoError::InvalidSet("zero-dimensional ball".into()));
        }
        if !linalg::all_finite(&center) || !radius.is_finite() {
            return Err(CocoError::NonFinite("ball parameters"));
        }
        if radius <= 0.0 {
            return Err(CocoError::InvalidSet(format!("ball radius {radius} must be positive")));
        }
        let dim = center.len();
        Ok(Self {
            kind: SetKind::Ball { center, radius },
            dim,
        })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(CocoError::InvalidSet("zero-dimensional halfspace".into()));
        }
        if !linalg::all_finite(&normal) || !offset.is_finite() {
            return Err(CocoError::NonFinite("halfspace parameters"));
        }
        if norm(&normal) <= 0.0 {
            return Err(CocoError::InvalidSet("halfspace normal must be non-zero".into()));
        }
        let dim = normal.len();
        Ok(Self {
            kind: SetKind::Halfspace { normal, offset },
            dim,
        })
    }

    /// Intersection of convex sets. Nested intersections are flattened and emptiness is
    /// probed with alternating projections from a few seeded starting points.
    pub fn intersection(sets: Vec<GeometricSet>) -> Result<Self> {
        let Some(first) = sets.first() else {
            return Err(CocoError::InvalidSet("intersection of zero sets".into()));
        };
        let dim = first.dim;
        let mut parts = Vec::with_capacity(sets.len());
        for s in sets {
            if s.dim != dim {
                return Err(CocoError::DimensionMismatch {
                    expected: dim,
                    found: s.dim,
                });
            }
            match s.kind {
                SetKind::Intersection(inner) => parts.extend(inner),
                _ => parts.push(s),
            }
        }
        if parts.len() == 1 {
            return Ok(parts.pop().expect("one element"));
        }
        probe_nonempty(&parts)?;
        Ok(Self {
            kind: SetKind::Intersection(parts),
            dim,
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the diameter; infinite for unbounded sets.
    pub fn diameter_bound(&self) -> f64 {
        match &self.kind {
            SetKind::Box { lower, upper } => distance(lower, upper),
            SetKind::Ball { radius, .. } => 2.0 * radius,
            SetKind::Halfspace { .. } => f64::INFINITY,
            SetKind::Intersection(parts) => parts
                .iter()
                .map(GeometricSet::diameter_bound)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// True iff `x` satisfies every defining inequality within [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_within(x, MEMBERSHIP_TOL)
    }

    pub fn contains_within(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match &self.kind {
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol),
            SetKind::Ball { center, radius } => distance(x, center) <= radius + tol,
            SetKind::Halfspace { normal, offset } => dot(normal, x) - offset <= tol * norm(normal),
            SetKind::Intersection(parts) => parts.iter().all(|p| p.contains_within(x, tol)),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Point> {
        self.check_input(x)?;
        self.project_raw(x).map(Point::from)
    }

    /// Euclidean distance to the set.
    pub fn dist(&self, x: &[f64]) -> Result<f64> {
        let p = self.project(x)?;
        Ok(distance(x, &p))
    }

    /// Unit vector from the projection towards `x`, or zero when `x` is (numerically) inside.
    pub fn dist_subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.project(x)?;
        let diff = linalg::sub(x, &p);
        let d = norm(&diff);
        if d > DIST_ZERO_TOL {
            Ok(linalg::scale(&diff, 1.0 / d))
        } else {
            Ok(vec![0.0; x.len()])
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(CocoError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !linalg::all_finite(x) {
            return Err(CocoError::NonFinite("projection input"));
        }
        Ok(())
    }

    fn project_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (l, u))| xi.clamp(*l, *u))
                .collect()),
            SetKind::Ball { center, radius } => {
                let r = distance(x, center);
                if r <= *radius {
                    Ok(x.to_vec())
                } else {
                    let s = radius / r;
                    Ok(center
                        .iter()
                        .zip(x)
                        .map(|(c, xi)| c + s * (xi - c))
                        .collect())
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let excess = (dot(normal, x) - offset) / dot(normal, normal);
                let mut y = x.to_vec();
                if excess > 0.0 {
                    linalg::axpy(-excess, normal, &mut y);
                }
                Ok(y)
            }
            SetKind::Intersection(parts) => dykstra(x, parts),
        }
    }
}

fn max_component_residual(x: &[f64], parts: &[GeometricSet]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for p in parts {
        let y = p.project_raw(x)?;
        worst = worst.max(distance(x, &y));
    }
    Ok(worst)
}

fn dykstra(x: &[f64], parts: &[GeometricSet]) -> Result<Vec<f64>> {
    if parts.iter().all(|p| p.contains(x)) {
        return Ok(x.to_vec());
    }
    // If projecting onto a single component already lands in all others, that point is
    // the projection onto the intersection.
    for p in parts {
        let y = p.project_raw(x)?;
        if parts.iter().all(|q| q.contains(&y)) {
            return Ok(y);
        }
    }

    let mut current = x.to_vec();
    let mut increments = vec![vec![0.0; x.len()]; parts.len()];
    for _ in 0..DYKSTRA_MAX_ITER {
        let previous = current.clone();
        // The iterate can sit still for whole sweeps while the increments keep moving, so
        // both must settle.
        let mut incr_change = 0.0_f64;
        for (part, incr) in parts.iter().zip(increments.iter_mut()) {
            let shifted = linalg::add(&current, incr);
            let y = part.project_raw(&shifted)?;
            let next = linalg::sub(&shifted, &y);
            incr_change = incr_change.max(distance(incr, &next));
            *incr = next;
            current = y;
        }
        if distance(&previous, &current) < DYKSTRA_STEP_TOL
            && incr_change < DYKSTRA_STEP_TOL
            && parts
                .iter()
                .all(|p| p.contains_within(&current, PROJECTION_TOL))
        {
            return Ok(current);
        }
    }
    Err(CocoError::ProjectionNotConverged {
        residual: max_component_residual(&current, parts)?,
    })
}

/// Alternating projections from seeded random starts; fails if none of them reaches a
/// point within [`PROBE_RESIDUAL_TOL`] of every component.
fn probe_nonempty(parts: &[GeometricSet]) -> Result<()> {
    let dim = parts[0].dim;
    let spread = 1.0
        + parts
            .iter()
            .map(|p| match &p.kind {
                SetKind::Box { lower, upper } => linalg::norm_inf(lower).max(linalg::norm_inf(upper)),
                SetKind::Ball { center, radius } => linalg::norm_inf(center) + radius,
                SetKind::Halfspace { normal, offset } => offset.abs() / norm(normal),
                SetKind::Intersection(_) => 0.0,
            })
            .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut best = f64::INFINITY;
    for _ in 0..PROBE_STARTS {
        let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spread..=spread)).collect();
        for _ in 0..DYKSTRA_MAX_ITER {
            let previous = z.clone();
            for p in parts {
                z = p.project_raw(&z)?;
            }
            let residual = max_component_residual(&z, parts)?;
            if residual <= PROBE_RESIDUAL_TOL {
                return Ok(());
            }
            best = best.min(residual);
            if distance(&previous, &z) < 1e-14 {
                break;
            }
        }
    }
    Err(CocoError::EmptyIntersection { residual: best })
}
