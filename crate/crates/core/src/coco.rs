//! Constrained meta-algorithms that reduce COCO to unconstrained OCO on surrogate costs.
//!
//! [`Coco1`] feeds `f + g^+ + 2G dist(., X*_t)` to the inner learner; the surrogate is
//! `4G`-Lipschitz regardless of the trajectory. [`Coco2`] feeds `V f + 2 Q(t) g^+` (the
//! quadratic potential `Q^2` differentiated at the running violation) and only needs
//! first-order information, at the price of an a-priori unbounded gradient scale.

use std::sync::Arc;

use crate::error::{CocoError, Result};
use crate::linalg::{self, norm};
use crate::problem::{g_plus, ccv_update, Constraint, ConvexOracle, DecisionSet, RoundRow, RunRecord};
use crate::subroutines::{ahag_bound_constant, ahag_bound_rhs, num_experts, Ahag, GradientLearner};

/// `f(x) + 2G dist(x, S)`.
pub fn auxiliary_value<C: ConvexOracle + ?Sized>(
    cost: &C,
    feasible_set: &crate::geometry::GeometricSet,
    g_lip: f64,
    x: &[f64],
) -> Result<f64> {
    Ok(cost.value(x) + 2.0 * g_lip * feasible_set.dist(x)?)
}

/// `g^+(x) + f(x) + 2G dist(x, X*_t)`.
pub fn coco1_surrogate_value<C: ConvexOracle + ?Sized>(
    cost: &C,
    constraint: &Constraint,
    g_lip: f64,
    x: &[f64],
) -> Result<f64> {
    Ok(g_plus(constraint.value(x)) + auxiliary_value(cost, constraint.feasible_region(), g_lip, x)?)
}

/// `grad f(x) + [grad g(x) if g(x) > 0] + 2G * unit(x - proj(x))`.
pub fn coco1_surrogate_subgradient<C: ConvexOracle + ?Sized>(
    cost: &C,
    constraint: &Constraint,
    g_lip: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut grad = cost.subgradient(x);
    if constraint.value(x) > 0.0 {
        linalg::axpy(1.0, &constraint.subgradient(x), &mut grad);
    }
    let dist_grad = constraint.feasible_region().dist_subgradient(x)?;
    linalg::axpy(2.0 * g_lip, &dist_grad, &mut grad);
    Ok(grad)
}

/// `V grad f(x) + 2 Q [grad g(x) if g(x) > 0]`.
pub fn coco2_surrogate_subgradient<C: ConvexOracle + ?Sized>(
    v: f64,
    q: f64,
    cost: &C,
    constraint: &Constraint,
    x: &[f64],
) -> Vec<f64> {
    let mut grad = linalg::scale(&cost.subgradient(x), v);
    if constraint.value(x) > 0.0 {
        linalg::axpy(2.0 * q, &constraint.subgradient(x), &mut grad);
    }
    grad
}

fn check_lipschitz(g_lip: f64) -> Result<()> {
    if g_lip.is_finite() && g_lip > 0.0 {
        Ok(())
    } else {
        Err(CocoError::InvalidParameter(format!(
            "Lipschitz bound {g_lip} must be positive and finite"
        )))
    }
}

/// Surrogate = cost + violation + distance penalty, minimised by a universal
/// dynamic-regret learner (AHAG by default).
#[derive(Debug, Clone)]
pub struct Coco1<L = Ahag> {
    learner: L,
    g_lip: f64,
    q: f64,
    t: usize,
}

impl Coco1<Ahag> {
    pub fn new(decision_set: Arc<DecisionSet>, horizon: usize, g_lip: f64) -> Result<Self> {
        Self::with_learner(Ahag::new(decision_set, horizon)?, g_lip)
    }
}

impl<L: GradientLearner> Coco1<L> {
    pub fn with_learner(learner: L, g_lip: f64) -> Result<Self> {
        check_lipschitz(g_lip)?;
        Ok(Self {
            learner,
            g_lip,
            q: 0.0,
            t: 0,
        })
    }

    pub fn learner(&self) -> &L {
        &self.learner
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.g_lip
    }

    /// Play, observe `(f_t, g_t)`, update `Q` and advance the learner on the surrogate.
    pub fn round<C: ConvexOracle + ?Sized>(
        &mut self,
        cost: &C,
        constraint: &Constraint,
    ) -> Result<RoundRow> {
        let x = self.learner.current_point().clone();
        let f = cost.value(&x);
        let g = constraint.value(&x);
        if !f.is_finite() || !g.is_finite() {
            return Err(CocoError::NonFinite("oracle value"));
        }
        self.q = ccv_update(self.q, g)?;
        let grad = coco1_surrogate_subgradient(cost, constraint, self.g_lip, &x)?;
        let surrogate_value = coco1_surrogate_value(cost, constraint, self.g_lip, &x)?;
        self.learner.observe(&grad)?;
        self.t += 1;
        Ok(RoundRow {
            t: self.t,
            x,
            f,
            g,
            gplus: g_plus(g),
            q: self.q,
            grad_norm_surrogate: norm(&grad),
            surrogate_value,
        })
    }
}

/// Lyapunov-weighted surrogate `V f + Phi'(Q(t)) g^+` with `Phi(q) = q^2`.
#[derive(Debug, Clone)]
pub struct Coco2<L = Ahag> {
    learner: L,
    v: f64,
    q: f64,
    t: usize,
}

impl Coco2<Ahag> {
    pub fn new(decision_set: Arc<DecisionSet>, horizon: usize, v: f64) -> Result<Self> {
        Self::with_learner(Ahag::new(decision_set, horizon)?, v)
    }
}

impl<L: GradientLearner> Coco2<L> {
    pub fn with_learner(learner: L, v: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(CocoError::InvalidParameter(format!("V = {v} must be positive")));
        }
        Ok(Self {
            learner,
            v,
            q: 0.0,
            t: 0,
        })
    }

    pub fn learner(&self) -> &L {
        &self.learner
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Surrogate subgradient at `x` with the current `Q`.
    pub fn surrogate_subgradient<C: ConvexOracle + ?Sized>(
        &self,
        cost: &C,
        constraint: &Constraint,
        x: &[f64],
    ) -> Vec<f64> {
        coco2_surrogate_subgradient(self.v, self.q, cost, constraint, x)
    }

    /// `Q` is updated with this round's violation before the surrogate is formed.
    pub fn round<C: ConvexOracle + ?Sized>(
        &mut self,
        cost: &C,
        constraint: &Constraint,
    ) -> Result<RoundRow> {
        let x = self.learner.current_point().clone();
        let f = cost.value(&x);
        let g = constraint.value(&x);
        if !f.is_finite() || !g.is_finite() {
            return Err(CocoError::NonFinite("oracle value"));
        }
        self.q = ccv_update(self.q, g)?;
        let grad = self.surrogate_subgradient(cost, constraint, &x);
        let gplus = g_plus(g);
        self.learner.observe(&grad)?;
        self.t += 1;
        Ok(RoundRow {
            t: self.t,
            x,
            f,
            g,
            gplus,
            q: self.q,
            grad_norm_surrogate: norm(&grad),
            surrogate_value: self.v * f + 2.0 * self.q * gplus,
        })
    }
}

/// `gamma = sqrt(2) G [2 sqrt(2) (D+1) + 2 D sqrt(4 + ln N)]` with `N = num_experts(D, T)`.
pub fn coco2_gamma(g_lip: f64, diameter: f64, horizon: usize) -> Result<f64> {
    check_lipschitz(g_lip)?;
    if diameter.is_nan() || diameter <= 0.0 || horizon == 0 {
        return Err(CocoError::InvalidParameter(format!(
            "need D > 0 and T >= 1, got D = {diameter}, T = {horizon}"
        )));
    }
    let n = num_experts(diameter, horizon);
    Ok(std::f64::consts::SQRT_2 * g_lip * ahag_bound_constant(diameter, n))
}

/// `V = gamma sqrt(T)`.
pub fn coco2_default_v(g_lip: f64, diameter: f64, horizon: usize) -> Result<f64> {
    Ok(coco2_gamma(g_lip, diameter, horizon)? * (horizon as f64).sqrt())
}

/// Upper bound on `Q(T) + regret(f~; u)` for any feasible `u` of path length `path_length`,
/// from the surrogate gradients the learner actually received.
pub fn coco1_bound_rhs(run: &RunRecord, path_length: f64, diameter: f64) -> Result<f64> {
    let horizon = run.horizon();
    if horizon == 0 {
        return Err(CocoError::EmptyRun);
    }
    ahag_bound_rhs(
        diameter,
        num_experts(diameter, horizon),
        run.surrogate_grad_norm_sq(),
        path_length,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coco2Bounds {
    pub regret_rhs: f64,
    pub ccv_rhs: f64,
}

/// Regret and CCV budgets for a finished run against a feasible comparator of the given
/// path length.
pub fn coco2_bound_rhs(
    run: &RunRecord,
    path_length: f64,
    v: f64,
    g_lip: f64,
    diameter: f64,
) -> Result<Coco2Bounds> {
    let horizon = run.horizon();
    if horizon == 0 {
        return Err(CocoError::EmptyRun);
    }
    coco2_bound_rhs_for_horizon(horizon, path_length, v, g_lip, diameter)
}

pub fn coco2_bound_rhs_for_horizon(
    horizon: usize,
    path_length: f64,
    v: f64,
    g_lip: f64,
    diameter: f64,
) -> Result<Coco2Bounds> {
    if horizon == 0 {
        return Err(CocoError::EmptyRun);
    }
    if path_length < 0.0 {
        return Err(CocoError::NegativePathLength(path_length));
    }
    if v.is_nan() || v <= 0.0 {
        return Err(CocoError::InvalidParameter(format!("V = {v} must be positive")));
    }
    let gamma = coco2_gamma(g_lip, diameter, horizon)?;
    let t = horizon as f64;
    let one_p = 1.0 + path_length;
    let regret_rhs = (gamma * gamma * one_p * t + gamma * one_p.sqrt() * v * t.sqrt()) / v;
    let ccv_rhs = 2.0 * gamma * (t * one_p).sqrt()
        + 0.5 * (4.0 * gamma * v * (t * one_p).sqrt()).sqrt()
        + 0.5 * (4.0 * v * g_lip * diameter * t).sqrt();
    Ok(Coco2Bounds {
        regret_rhs,
        ccv_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometricSet;
    use crate::problem::{ConstraintFn, CostFn, Point};

    fn interval(half: f64) -> Arc<DecisionSet> {
        Arc::new(DecisionSet::new(GeometricSet::cube(1, half).unwrap()).unwrap())
    }

    fn identity() -> CostFn {
        CostFn::Affine {
            slope: vec![1.0],
            intercept: 0.0,
        }
    }

    fn x_minus_one(x: &DecisionSet) -> Constraint {
        Constraint::new(
            ConstraintFn::Affine {
                normal: vec![1.0],
                offset: 1.0,
            },
            x,
        )
        .unwrap()
    }

    #[test]
    fn auxiliary_value_examples() {
        let f = CostFn::NormOffset {
            center: vec![3.0],
            scale: 1.0,
        };
        let s = GeometricSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(auxiliary_value(&f, &s, 1.0, &[0.5]).unwrap(), 2.5);
        assert_eq!(auxiliary_value(&f, &s, 1.0, &[1.0]).unwrap(), 2.0);
        assert_eq!(auxiliary_value(&f, &s, 1.0, &[3.0]).unwrap(), 4.0);
    }

    #[test]
    fn coco1_gradient_examples() {
        let x = interval(3.0);
        let c = x_minus_one(&x);
        // x = 2: 1 + 1 + 2 * 1 = 4
        assert_eq!(coco1_surrogate_subgradient(&identity(), &c, 1.0, &[2.0]).unwrap(), vec![4.0]);
        // strictly feasible: just grad f
        assert_eq!(coco1_surrogate_subgradient(&identity(), &c, 1.0, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn coco2_gradient_examples() {
        let x = interval(3.0);
        let c = x_minus_one(&x);
        assert_eq!(coco2_surrogate_subgradient(2.0, 3.0, &identity(), &c, &[2.0]), vec![8.0]);
        assert_eq!(coco2_surrogate_subgradient(2.0, 0.0, &identity(), &c, &[2.0]), vec![2.0]);
        assert_eq!(coco2_surrogate_subgradient(2.0, 5.0, &identity(), &c, &[0.0]), vec![2.0]);
    }

    #[test]
    fn default_v_examples() {
        let v = coco2_default_v(1.0, 1.0, 1).unwrap();
        let expected =
            2.0_f64.sqrt() * (4.0 * 2.0_f64.sqrt() + 2.0 * (4.0 + 2.0_f64.ln()).sqrt());
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 14.128).abs() < 1e-3);
        assert!(coco2_default_v(0.0, 1.0, 1).is_err());
        // Quadrupling T doubles V up to the change in gamma through N.
        let ratio = coco2_default_v(1.0, 1.0, 8).unwrap() / coco2_default_v(1.0, 1.0, 2).unwrap();
        let gamma_ratio = coco2_gamma(1.0, 1.0, 8).unwrap() / coco2_gamma(1.0, 1.0, 2).unwrap();
        assert!((ratio - 2.0 * gamma_ratio).abs() < 1e-12);
        assert_eq!((num_experts(1.0, 2), num_experts(1.0, 8)), (2, 3));
    }

    #[test]
    fn coco2_bounds_examples() {
        let t = 10_000;
        let gamma = coco2_gamma(1.0, 1.0, t).unwrap();
        let v = gamma * (t as f64).sqrt();
        let b = coco2_bound_rhs_for_horizon(t, 0.0, v, 1.0, 1.0).unwrap();
        assert!((b.regret_rhs - 2.0 * gamma * 100.0).abs() < 1e-9 * b.regret_rhs);
        // 2 gamma sqrt(T) + 1/2 sqrt(4 gamma^2 T) + 1/2 sqrt(4 gamma T^{3/2})
        let expected = 2.0 * gamma * 100.0 + gamma * 100.0 + (gamma * 1e6).sqrt();
        assert!((b.ccv_rhs - expected).abs() < 1e-9 * expected);
        assert_eq!(
            coco2_bound_rhs(&RunRecord::new(), 0.0, v, 1.0, 1.0),
            Err(CocoError::EmptyRun)
        );
    }

    #[test]
    fn coco1_bound_examples() {
        assert_eq!(coco1_bound_rhs(&RunRecord::new(), 0.0, 1.0), Err(CocoError::EmptyRun));
        let mut run = RunRecord::new();
        run.push(RoundRow {
            t: 1,
            x: Point::origin(1),
            f: 0.0,
            g: -1.0,
            gplus: 0.0,
            q: 0.0,
            grad_norm_surrogate: 0.0,
            surrogate_value: 0.0,
        });
        assert_eq!(coco1_bound_rhs(&run, 5.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn coco2_records_updated_q_in_surrogate() {
        let x = interval(3.0);
        let c = x_minus_one(&x);
        // Every expert starts at 0, so the first round plays 0 and is feasible.
        let mut alg = Coco2::new(Arc::clone(&x), 5, 2.0).unwrap();
        let row = alg.round(&identity(), &c).unwrap();
        assert_eq!(row.q, 0.0);
        assert_eq!(row.grad_norm_surrogate, 2.0);
        assert_eq!(row.surrogate_value, 0.0);
    }
}
