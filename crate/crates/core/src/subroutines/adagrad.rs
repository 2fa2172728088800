use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::GradientLearner;
use crate::error::{CocoError, Result};
use crate::linalg::{self, dot};
use crate::problem::{DecisionSet, Point};

/// Step-size schedule `eta_t = (D + 1) * scale / sqrt(2 * S_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepSchedule {
    /// The comparator path length is known to be at most `path_bound`; `scale = sqrt(1 + path_bound)`.
    KnownPath { path_bound: f64 },
    /// No path-length knowledge; `scale = 1`.
    PathFree,
}

impl StepSchedule {
    /// Schedule whose scale equals `rho`, i.e. `path_bound = rho^2 - 1`.
    pub fn with_scale(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 1.0 {
            return Err(CocoError::InvalidParameter(format!(
                "step scale {rho} must be finite and at least 1"
            )));
        }
        Ok(StepSchedule::KnownPath {
            path_bound: rho * rho - 1.0,
        })
    }

    pub fn scale(&self) -> f64 {
        match self {
            StepSchedule::KnownPath { path_bound } => (1.0 + path_bound).sqrt(),
            StepSchedule::PathFree => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            StepSchedule::KnownPath { path_bound } if path_bound.is_nan() || *path_bound < 0.0 => Err(
                CocoError::InvalidParameter(format!("path bound {path_bound} must be non-negative")),
            ),
            _ => Ok(()),
        }
    }
}

/// Projected online gradient descent with adaptive step sizes.
#[derive(Debug, Clone)]
pub struct AdaGrad {
    point: Point,
    grad_norm_sq: f64,
    schedule: StepSchedule,
    decision_set: Arc<DecisionSet>,
}

impl AdaGrad {
    /// Starts at the origin.
    pub fn new(decision_set: Arc<DecisionSet>, schedule: StepSchedule) -> Result<Self> {
        let start = Point::origin(decision_set.dim());
        Self::with_start(decision_set, schedule, start)
    }

    pub fn with_start(
        decision_set: Arc<DecisionSet>,
        schedule: StepSchedule,
        start: Point,
    ) -> Result<Self> {
        schedule.validate()?;
        if start.dim() != decision_set.dim() {
            return Err(CocoError::DimensionMismatch {
                expected: decision_set.dim(),
                found: start.dim(),
            });
        }
        if !decision_set.contains(&start) {
            return Err(CocoError::InvalidParameter(
                "starting point outside the decision set".into(),
            ));
        }
        Ok(Self {
            point: start,
            grad_norm_sq: 0.0,
            schedule,
            decision_set,
        })
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn schedule(&self) -> StepSchedule {
        self.schedule
    }

    pub fn diameter(&self) -> f64 {
        self.decision_set.diameter()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_norm_sq
    }

    /// Step size for the current accumulator, `None` while no gradient mass has been seen.
    pub fn step_size(&self) -> Option<f64> {
        (self.grad_norm_sq > 0.0).then(|| {
            (self.diameter() + 1.0) * self.schedule.scale() / (2.0 * self.grad_norm_sq).sqrt()
        })
    }

    /// One round: accumulate `||grad||^2`, step against `grad` and project back onto the set.
    pub fn step(&mut self, gradient: &[f64]) -> Result<&Point> {
        if gradient.len() != self.point.dim() {
            return Err(CocoError::DimensionMismatch {
                expected: self.point.dim(),
                found: gradient.len(),
            });
        }
        if !linalg::all_finite(gradient) {
            return Err(CocoError::NonFinite("gradient"));
        }
        self.grad_norm_sq += dot(gradient, gradient);
        if let Some(eta) = self.step_size() {
            let mut raw = self.point.coords().to_vec();
            linalg::axpy(-eta, gradient, &mut raw);
            self.point = self.decision_set.project(&raw)?;
        }
        Ok(&self.point)
    }

    pub fn bound_rhs(&self, path_length: f64) -> Result<f64> {
        adagrad_bound_rhs(self.schedule, self.diameter(), self.grad_norm_sq, path_length)
    }
}

impl GradientLearner for AdaGrad {
    fn current_point(&self) -> &Point {
        &self.point
    }

    fn observe(&mut self, gradient: &[f64]) -> Result<()> {
        self.step(gradient).map(|_| ())
    }

    fn grad_norm_sq_accum(&self) -> f64 {
        self.grad_norm_sq
    }
}

/// Dynamic regret budget after a run with accumulator `grad_norm_sq`.
///
/// Known-path mode: `(D+1) sqrt(2(1+P)) sqrt(S)`, valid for comparators whose path length is
/// at most the `P` passed here (normally the schedule's own bound). Path-free mode:
/// `sqrt(2) (D+1) (1+P) sqrt(S)` for a comparator of path length `P`.
pub fn adagrad_bound_rhs(
    schedule: StepSchedule,
    diameter: f64,
    grad_norm_sq: f64,
    path_length: f64,
) -> Result<f64> {
    if path_length < 0.0 {
        return Err(CocoError::NegativePathLength(path_length));
    }
    let root_s = grad_norm_sq.sqrt();
    Ok(match schedule {
        StepSchedule::KnownPath { .. } => {
            (diameter + 1.0) * (2.0 * (1.0 + path_length)).sqrt() * root_s
        }
        StepSchedule::PathFree => {
            std::f64::consts::SQRT_2 * (diameter + 1.0) * (1.0 + path_length) * root_s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometricSet;

    fn interval(half: f64) -> Arc<DecisionSet> {
        Arc::new(DecisionSet::new(GeometricSet::cube(1, half).unwrap()).unwrap())
    }

    #[test]
    fn zero_gradient_keeps_point() {
        let mut a = AdaGrad::new(interval(0.5), StepSchedule::PathFree).unwrap();
        a.step(&[0.0]).unwrap();
        assert_eq!(a.point().coords(), &[0.0]);
        assert_eq!(a.step_size(), None);
    }

    #[test]
    fn first_step_is_clamped() {
        // D = 1, rho = 0: eta_1 = 2 / sqrt(2) = sqrt(2); raw step -sqrt(2) clamps to -0.5.
        let mut a = AdaGrad::new(interval(0.5), StepSchedule::KnownPath { path_bound: 0.0 }).unwrap();
        a.step(&[1.0]).unwrap();
        assert!((a.step_size().unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.point().coords(), &[-0.5]);
    }

    #[test]
    fn accumulator_drives_second_step_size() {
        let mut a = AdaGrad::new(interval(0.5), StepSchedule::KnownPath { path_bound: 0.0 }).unwrap();
        a.step(&[1.0]).unwrap();
        a.step(&[-1.0]).unwrap();
        assert_eq!(a.grad_norm_sq(), 2.0);
        assert!((a.step_size().unwrap() - 1.0).abs() < 1e-15);
        // -0.5 + 1 * 1 = 0.5 stays on the boundary.
        assert_eq!(a.point().coords(), &[0.5]);
    }

    #[test]
    fn bound_rhs_examples() {
        let known = StepSchedule::KnownPath { path_bound: 0.0 };
        assert_eq!(adagrad_bound_rhs(known, 1.0, 0.0, 0.0).unwrap(), 0.0);
        let v = adagrad_bound_rhs(known, 1.0, 4.0, 0.0).unwrap();
        assert!((v - 4.0 * 2.0_f64.sqrt()).abs() < 1e-12);
        let v = adagrad_bound_rhs(StepSchedule::PathFree, 1.0, 1.0, 3.0).unwrap();
        assert!((v - 8.0 * 2.0_f64.sqrt()).abs() < 1e-12);
        assert!(adagrad_bound_rhs(known, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn scale_schedule_round_trips_powers_of_two() {
        for k in 0..20 {
            let rho = 2.0_f64.powi(k);
            assert_eq!(StepSchedule::with_scale(rho).unwrap().scale(), rho);
        }
        assert!(StepSchedule::with_scale(0.5).is_err());
    }

    #[test]
    fn rejects_bad_gradients() {
        let mut a = AdaGrad::new(interval(1.0), StepSchedule::PathFree).unwrap();
        assert!(matches!(a.step(&[1.0, 2.0]), Err(CocoError::DimensionMismatch { .. })));
        assert!(matches!(a.step(&[f64::NAN]), Err(CocoError::NonFinite(_))));
    }
}
