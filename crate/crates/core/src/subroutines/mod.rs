//! Unconstrained online convex optimization engines.
//!
//! * [`AdaGrad`]: projected online gradient descent with adaptive step sizes.
//! * [`AdaHedge`]: experts algorithm with a mixability-gap driven learning rate.
//! * [`Ahag`]: AdaHedge over a geometric grid of AdaGrad experts, adaptive to both
//!   the comparator path length and the gradient scale.

mod adagrad;
mod ahag;
mod hedge;

pub use adagrad::{adagrad_bound_rhs, AdaGrad, StepSchedule};
pub use ahag::{ahag_bound_constant, ahag_bound_rhs, num_experts, Ahag, AhagRound};
pub use hedge::{adahedge_regret_bound, AdaHedge, HedgeRound};

use crate::error::Result;
use crate::problem::Point;

/// An online learner driven by one (sub)gradient per round.
///
/// The learner plays [`current_point`](Self::current_point); the environment then
/// evaluates a subgradient there and passes it to [`observe`](Self::observe).
pub trait GradientLearner {
    fn current_point(&self) -> &Point;

    fn observe(&mut self, gradient: &[f64]) -> Result<()>;

    /// `sum_t ||grad_t||^2` over all observed gradients.
    fn grad_norm_sq_accum(&self) -> f64;
}
