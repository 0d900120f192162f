//! Deterministic validation of robot task plans against safety-augmented
//! symbolic planning problems.
//!
//! A task bundle pairs a classical (basic) planning problem with a danger
//! specification. Compilation injects each danger rule as a conditional
//! effect that increments a reserved integer `danger` counter, and extends
//! the goal with `danger <= d_max`. Plan validation then classifies every
//! plan as infeasible, feasible-but-unsafe, or safe, with no judge in the
//! loop: verdicts are pure functions of the plan and the bundle.
//!
//! The crate also carries the evaluation machinery built on top of those
//! verdicts: relaxed execution for safety intention, an exhaustive
//! breadth-first oracle planner for reference plans and safety effort,
//! metric aggregation with exact rational arithmetic, scaling regressions
//! with bootstrap confidence intervals, and redundant-action injection.

pub mod analysis;
pub mod bundle;
pub mod domain;
pub mod executor;
pub mod gen;
pub mod ident;
pub mod metrics;
pub mod noise;
pub mod oracle;
pub mod parser;
pub mod relaxed;
pub mod span;

pub use bundle::TaskBundle;
pub use domain::{AugmentedProblem, BasicProblem, DangerRule, Domain, GroundAction, State};
pub use executor::{run_plan, Verdict};
pub use parser::{parse_plan, render_prompt, Plan, RawPlanText};
pub use relaxed::relaxed_run;
