//! Linear and mixed-binary programming kernels.
//!
//! A bounded revised simplex with an explicit basis inverse, a dual simplex
//! for warm starts, cut management for outer-approximation loops and a
//! best-first branch and bound. Sized for desk-scale models of a few
//! thousand rows.
//!
//! ```
//! use regcap_solver::{solve_lp, Direction, LinearProgram, LpOutcome, RowSense};
//!
//! let mut lp = LinearProgram::new(Direction::Maximize);
//! let x = lp.add_col("x", 3.0, 0.0, 4.0);
//! let y = lp.add_col("y", 2.0, 0.0, f64::INFINITY);
//! lp.add_row("cap", &[(x, 1.0), (y, 1.0)], RowSense::Le, 5.0);
//! let LpOutcome::Optimal(sol) = solve_lp(&lp).unwrap() else { panic!() };
//! assert!((sol.objective - 14.0).abs() < 1e-9);
//! ```

mod error;
mod lp;
mod milp;
mod model;
mod simplex;
pub mod tolerances;

pub use error::SolverError;
pub use lp::{certificate_gap, solve_lp, LpOutcome, LpSession, LpSolution};
pub use milp::{solve_milp, MilpOptions, MilpResult, MilpStatus};
pub use model::{Direction, LinearProgram, MixedIntegerProgram, RowSense};
pub use simplex::VarState;
