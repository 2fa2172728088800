//! Online convex optimisation with adversarial, time-varying constraints.
//!
//! The learner plays `x_t`, then sees a convex cost `f_t` and a convex constraint `g_t`.
//! Two reductions turn the constrained problem into unconstrained online learning on
//! a surrogate, solved by an AdaHedge ensemble of AdaGrad experts. Performance is
//! measured by regret against time-varying comparators and by cumulative constraint
//! violation.

pub mod coco;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod problem;
pub mod scenarios;
pub mod subroutines;

pub use coco::{
    coco1_bound_rhs, coco2_bound_rhs, coco2_bound_rhs_for_horizon, coco2_default_v, coco2_gamma,
    Coco1, Coco2, Coco2Bounds,
};
pub use error::{CocoError, Result};
pub use geometry::{GeometricSet, SetKind};
pub use oracles::{constrained_minimizer_path, grid_argmin, min_feasible_path, GridSpec};
pub use problem::{
    ccv_update, g_plus, path_length, ud_regret, ComparatorSequence, Constraint, ConstraintFn,
    ConvexOracle, CostFn, DecisionSet, Point, RoundRow, RunRecord,
};
pub use scenarios::{NamedComparator, Scenario, ScenarioFamily, ScenarioSpec};
pub use subroutines::{AdaGrad, AdaHedge, Ahag, GradientLearner, StepSchedule};
