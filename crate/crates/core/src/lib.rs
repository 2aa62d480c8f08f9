//! Online convex optimization with long-term constraints and periodic
//! decision updates.
//!
//! Decisions are held fixed over update periods of varying length. At every
//! period boundary the solver aggregates the gradient feedback that arrived
//! during the period, takes a number of projected descent steps, and solves a
//! doubly regularized subproblem whose constraint penalty is driven by a
//! periodic virtual queue.
//!
//! The crate also provides the clairvoyant benchmarks and baseline policies,
//! closed-form regret and violation bounds, a synthetic test problem, and a
//! massive-MIMO network virtualization application with closed-form updates.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod mimo;
pub mod oracles;
pub mod pqga;
pub mod problem;
pub mod rng;
pub mod schedule;
pub mod synthetic;

pub use error::SolverError;
pub use metrics::{PeriodRecord, RunTrace};
pub use pqga::{pqga_step, run_pqga, PqgaParams, PqgaState, QueueState};
pub use problem::{Problem, ProblemConstants};
pub use schedule::{DelayModel, FeedbackPattern, PeriodSchedule};
