//! Brute-force ground truth on regular grids in one or two dimensions: constrained
//! minimiser paths and the minimum-movement feasible path.

use crate::error::{CocoError, Result};
use crate::geometry::GeometricSet;
use crate::linalg::distance;
use crate::problem::{path_length, Constraint, ConvexOracle, Point};

pub const MAX_GRID_POINTS: usize = 10_000_000;
pub const MAX_DP_POINTS_PER_ROUND: usize = 500;
pub const MAX_DP_HORIZON: usize = 200;

/// Regular grid `lower + k h` per coordinate, `d <= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Vec<f64>,
    counts: Vec<usize>,
    h: f64,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() > 2 || lower.len() != upper.len() {
            return Err(CocoError::InvalidGrid(format!(
                "grid dimension must be 1 or 2 (got bounds of lengths {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(CocoError::InvalidGrid(format!("mesh size {h} must be positive")));
        }
        let mut counts = Vec::with_capacity(lower.len());
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(CocoError::InvalidGrid(format!("bad interval [{l}, {u}]")));
            }
            counts.push(((u - l) / h + 1e-9).floor() as usize + 1);
        }
        let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
        match total {
            Some(n) if n <= MAX_GRID_POINTS => Ok(Self { lower, counts, h }),
            _ => Err(CocoError::InvalidGrid("more than 1e7 grid points".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn mesh(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic coordinate order.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let inner = if self.dim() == 2 { self.counts[1] } else { 1 };
        (0..self.len()).map(move |k| {
            let idx = [k / inner, k % inner];
            self.lower
                .iter()
                .zip(idx)
                .map(|(l, i)| l + i as f64 * self.h)
                .collect()
        })
    }
}

/// Grid point of `region` minimising `f`; ties go to the lexicographically first point.
pub fn grid_argmin<F>(f: F, region: &GeometricSet, grid: &GridSpec) -> Result<Point>
where
    F: Fn(&[f64]) -> f64,
{
    if region.dim() != grid.dim() {
        return Err(CocoError::DimensionMismatch {
            expected: grid.dim(),
            found: region.dim(),
        });
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in grid.points().filter(|p| region.contains(p)) {
        let v = f(&p);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, p));
        }
    }
    best.map(|(_, p)| Point::from(p))
        .ok_or(CocoError::EmptyGridRegion)
}

/// Per-round grid minimisers of `f_t` over `X*_t` and their path length.
pub fn constrained_minimizer_path<C: ConvexOracle>(
    costs: &[C],
    constraints: &[Constraint],
    grid: &GridSpec,
) -> Result<(Vec<Point>, f64)> {
    if costs.len() != constraints.len() {
        return Err(CocoError::LengthMismatch {
            expected: costs.len(),
            found: constraints.len(),
        });
    }
    let points = costs
        .iter()
        .zip(constraints)
        .map(|(f, c)| grid_argmin(|x| f.value(x), c.feasible_region(), grid))
        .collect::<Result<Vec<_>>>()?;
    let p_star = path_length(&points)?;
    Ok((points, p_star))
}

fn feasible_grid_points(region: &GeometricSet, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let all: Vec<Vec<f64>> = grid.points().filter(|p| region.contains(p)).collect();
    if all.is_empty() {
        return Err(CocoError::EmptyGridRegion);
    }
    if all.len() <= MAX_DP_POINTS_PER_ROUND {
        return Ok(all);
    }
    let stride = all.len().div_ceil(MAX_DP_POINTS_PER_ROUND);
    Ok(all.into_iter().step_by(stride).collect())
}

/// Shortest sequence `y_t in X*_t` (over grid points) by total Euclidean movement.
pub fn min_feasible_path(constraints: &[Constraint], grid: &GridSpec) -> Result<(Vec<Point>, f64)> {
    if constraints.is_empty() {
        return Err(CocoError::EmptyComparator);
    }
    if constraints.len() > MAX_DP_HORIZON {
        return Err(CocoError::InvalidParameter(format!(
            "horizon {} exceeds the DP limit {MAX_DP_HORIZON}",
            constraints.len()
        )));
    }
    let layers = constraints
        .iter()
        .map(|c| feasible_grid_points(c.feasible_region(), grid))
        .collect::<Result<Vec<_>>>()?;

    let mut cost = vec![0.0; layers[0].len()];
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    for w in layers.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let mut next_cost = Vec::with_capacity(next.len());
        let mut parent = Vec::with_capacity(next.len());
        for q in next {
            let (arg, best) = prev
                .iter()
                .zip(&cost)
                .map(|(p, c)| c + distance(p, q))
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            next_cost.push(best);
            parent.push(arg);
        }
        cost = next_cost;
        parents.push(parent);
    }

    let (mut idx, best) = cost
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let mut path = vec![Point::from(layers[layers.len() - 1][idx].clone())];
    for (layer, parent) in layers.iter().rev().skip(1).zip(parents.iter().rev()) {
        idx = parent[idx];
        path.push(Point::from(layer[idx].clone()));
    }
    path.reverse();
    Ok((path, best))
}
