use std::sync::Arc;

use super::hedge::loss_inf_sq;
use super::{AdaGrad, AdaHedge, GradientLearner, StepSchedule};
use crate::error::{CocoError, Result};
use crate::linalg::{self, dot};
use crate::problem::{ConvexOracle, DecisionSet, Point};

/// `ceil(log2(1 + D T) / 2) + 1`.
pub fn num_experts(diameter: f64, horizon: usize) -> usize {
    let half_log = 0.5 * (1.0 + diameter * horizon as f64).log2();
    half_log.ceil() as usize + 1
}

/// `2 sqrt(2) (D+1) + 2 D sqrt(4 + ln N)`: expert term plus meta term.
pub fn ahag_bound_constant(diameter: f64, num_experts: usize) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (diameter + 1.0)
        + 2.0 * diameter * (4.0 + (num_experts as f64).ln()).sqrt()
}

/// `[2 sqrt(2) (D+1) + 2 D sqrt(4 + ln N)] sqrt(1 + P) sqrt(S)`.
pub fn ahag_bound_rhs(
    diameter: f64,
    num_experts: usize,
    grad_norm_sq: f64,
    path_length: f64,
) -> Result<f64> {
    if path_length < 0.0 {
        return Err(CocoError::NegativePathLength(path_length));
    }
    Ok(ahag_bound_constant(diameter, num_experts)
        * (1.0 + path_length).sqrt()
        * grad_norm_sq.sqrt())
}

/// AdaHedge over AdaGrad experts; expert `i` (1-based) uses step scale `2^(i-1)`.
#[derive(Debug, Clone)]
pub struct Ahag {
    experts: Vec<AdaGrad>,
    hedge: AdaHedge,
    combined: Point,
    grad_norm_sq: f64,
    loss_inf_sq_sum: f64,
    diameter: f64,
}

/// Bookkeeping of one AHAG round.
#[derive(Debug, Clone, PartialEq)]
pub struct AhagRound {
    pub played: Point,
    /// `l_i = <grad, x_i>` at the experts' pre-update points.
    pub losses: Vec<f64>,
    pub weights: Vec<f64>,
    pub grad_norm: f64,
}

impl Ahag {
    /// Ensemble sized for horizon `T` over the given set.
    pub fn new(decision_set: Arc<DecisionSet>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(CocoError::InvalidParameter("horizon must be positive".into()));
        }
        let n = num_experts(decision_set.diameter(), horizon);
        Self::with_experts(decision_set, n)
    }

    /// Ensemble with an explicit number of experts, all starting at the origin.
    pub fn with_experts(decision_set: Arc<DecisionSet>, num_experts: usize) -> Result<Self> {
        if num_experts == 0 || num_experts > 60 {
            return Err(CocoError::InvalidParameter(format!(
                "number of experts {num_experts} out of range"
            )));
        }
        let experts = (0..num_experts)
            .map(|i| {
                let rho = 2.0_f64.powi(i as i32);
                AdaGrad::new(Arc::clone(&decision_set), StepSchedule::with_scale(rho)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let hedge = AdaHedge::new(num_experts)?;
        let diameter = decision_set.diameter();
        let mut ahag = Self {
            experts,
            hedge,
            combined: Point::origin(decision_set.dim()),
            grad_norm_sq: 0.0,
            loss_inf_sq_sum: 0.0,
            diameter,
        };
        ahag.combined = ahag.combine();
        Ok(ahag)
    }

    pub fn num_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn experts(&self) -> &[AdaGrad] {
        &self.experts
    }

    pub fn hedge(&self) -> &AdaHedge {
        &self.hedge
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `sum_t ||l_t||_inf^2` of the losses fed to AdaHedge.
    pub fn loss_inf_sq_sum(&self) -> f64 {
        self.loss_inf_sq_sum
    }

    fn combine(&self) -> Point {
        let dim = self.combined.dim();
        let mut x = vec![0.0; dim];
        for (w, e) in self.hedge.weights().iter().zip(&self.experts) {
            linalg::axpy(*w, e.point(), &mut x);
        }
        Point::from(x)
    }

    /// Advances the ensemble with the gradient evaluated at the combined point.
    pub fn step(&mut self, gradient: &[f64]) -> Result<AhagRound> {
        let dim = self.combined.dim();
        if gradient.len() != dim {
            return Err(CocoError::DimensionMismatch {
                expected: dim,
                found: gradient.len(),
            });
        }
        if !linalg::all_finite(gradient) {
            return Err(CocoError::NonFinite("gradient"));
        }
        let played = self.combined.clone();
        let losses: Vec<f64> = self.experts.iter().map(|e| dot(gradient, e.point())).collect();
        let weights = self.hedge.weights().to_vec();
        for e in &mut self.experts {
            e.step(gradient)?;
        }
        self.hedge.step(&losses)?;
        let g2 = dot(gradient, gradient);
        self.grad_norm_sq += g2;
        self.loss_inf_sq_sum += loss_inf_sq(&losses);
        self.combined = self.combine();
        Ok(AhagRound {
            played,
            losses,
            weights,
            grad_norm: g2.sqrt(),
        })
    }

    /// Plays the combined point, queries the cost's subgradient there and advances.
    pub fn round<C: ConvexOracle + ?Sized>(&mut self, cost: &C) -> Result<Point> {
        let gradient = cost.subgradient(&self.combined);
        Ok(self.step(&gradient)?.played)
    }

    pub fn bound_rhs(&self, path_length: f64) -> Result<f64> {
        ahag_bound_rhs(self.diameter, self.num_experts(), self.grad_norm_sq, path_length)
    }
}

impl GradientLearner for Ahag {
    fn current_point(&self) -> &Point {
        &self.combined
    }

    fn observe(&mut self, gradient: &[f64]) -> Result<()> {
        self.step(gradient).map(|_| ())
    }

    fn grad_norm_sq_accum(&self) -> f64 {
        self.grad_norm_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometricSet;
    use crate::problem::CostFn;

    fn set(dim: usize, half: f64) -> Arc<DecisionSet> {
        Arc::new(DecisionSet::new(GeometricSet::cube(dim, half).unwrap()).unwrap())
    }

    #[test]
    fn num_experts_examples() {
        assert_eq!(num_experts(1.0, 1), 2);
        assert_eq!(num_experts(1.0, 1000), 6);
        assert_eq!(num_experts(3.0, 1), 2);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(ahag_bound_rhs(1.0, 2, 0.0, 0.0).unwrap(), 0.0);
        let v = ahag_bound_rhs(1.0, 2, 1.0, 0.0).unwrap();
        let expected = 4.0 * 2.0_f64.sqrt() + 2.0 * (4.0 + 2.0_f64.ln()).sqrt();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 9.990).abs() < 5e-4);
        let doubled = ahag_bound_rhs(1.0, 2, 1.0, 3.0).unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-12);
    }

    #[test]
    fn single_expert_matches_adagrad() {
        let x = set(2, 1.0);
        let mut ahag = Ahag::with_experts(Arc::clone(&x), 1).unwrap();
        let mut single = AdaGrad::new(x, StepSchedule::with_scale(1.0).unwrap()).unwrap();
        for t in 0..50 {
            let s = t as f64;
            let cost = CostFn::NormOffset {
                center: vec![(0.3 * s).sin(), (0.2 * s).cos()],
                scale: 1.5,
            };
            assert_eq!(ahag.current_point(), single.point());
            let played = ahag.round(&cost).unwrap();
            let g = cost.subgradient(&played);
            single.step(&g).unwrap();
        }
        assert_eq!(ahag.current_point(), single.point());
    }

    #[test]
    fn common_expert_point_is_played_regardless_of_weights() {
        let x = set(1, 2.0);
        let mut ahag = Ahag::with_experts(x, 4).unwrap();
        // All experts start at the origin.
        assert_eq!(ahag.current_point().coords(), &[0.0]);
        // Zero gradient moves nobody, weights may change but the point may not.
        ahag.step(&[0.0]).unwrap();
        assert_eq!(ahag.current_point().coords(), &[0.0]);
    }

    /// Step-by-step reference for a d = 1 toy run with linear costs.
    #[test]
    fn toy_run_matches_hand_stepped_reference() {
        let x = set(1, 1.0); // D = 2
        let horizon = 3;
        let mut ahag = Ahag::new(Arc::clone(&x), horizon).unwrap();
        // N = ceil(log2(7)/2) + 1 = 3
        assert_eq!(ahag.num_experts(), 3);
        let slopes = [1.0, -2.0, 0.5];

        // Reference state.
        let n = 3;
        let mut xs = vec![0.0_f64; n];
        let mut s_acc = 0.0_f64;
        let mut cum = vec![0.0_f64; n];
        let mut delta = 0.0_f64;
        let mut w = vec![1.0 / 3.0; n];
        for (t, &a) in slopes.iter().enumerate() {
            let played_ref: f64 = w.iter().zip(&xs).map(|(wi, xi)| wi * xi).sum();
            let played = ahag
                .round(&CostFn::Affine {
                    slope: vec![a],
                    intercept: 0.0,
                })
                .unwrap();
            assert!((played[0] - played_ref).abs() < 1e-14, "round {t}");

            let losses: Vec<f64> = xs.iter().map(|xi| a * xi).collect();
            s_acc += a * a;
            for (i, xi) in xs.iter_mut().enumerate() {
                let rho = 2.0_f64.powi(i as i32);
                let eta = 3.0 * rho / (2.0 * s_acc).sqrt();
                *xi = (*xi - eta * a).clamp(-1.0, 1.0);
            }
            let eta_h = if delta > 0.0 { (n as f64).ln() / delta } else { f64::INFINITY };
            let expected: f64 = w.iter().zip(&losses).map(|(wi, l)| wi * l).sum();
            let mix = if eta_h.is_infinite() {
                losses.iter().zip(&w).filter(|(_, wi)| **wi > 0.0).map(|(l, _)| *l).fold(f64::INFINITY, f64::min)
            } else {
                -(w.iter().zip(&losses).map(|(wi, l)| wi * (-eta_h * l).exp()).sum::<f64>()).ln() / eta_h
            };
            delta += (expected - mix).max(0.0);
            for (c, l) in cum.iter_mut().zip(&losses) {
                *c += l;
            }
            let min = cum.iter().copied().fold(f64::INFINITY, f64::min);
            let raw: Vec<f64> = if delta > 0.0 {
                let eta = (n as f64).ln() / delta;
                cum.iter().map(|c| (-eta * (c - min)).exp()).collect()
            } else {
                cum.iter().map(|c| if *c == min { 1.0 } else { 0.0 }).collect()
            };
            let tot: f64 = raw.iter().sum();
            w = raw.iter().map(|r| r / tot).collect();
        }
        for (e, xi) in ahag.experts().iter().zip(&xs) {
            assert!((e.point()[0] - xi).abs() < 1e-14);
        }
        for (a, b) in ahag.hedge().weights().iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
