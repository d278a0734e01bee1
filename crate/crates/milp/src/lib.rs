//! Small mixed-integer linear programming toolkit for maximization models with
//! binary and continuous columns.
//!
//! - [`MilpModel`]: sparse model container with named columns and rows.
//! - [`solve_lp`]: LP relaxation on the `microlp` simplex kernel.
//! - [`solve_milp`]: deterministic branch and bound with time, node and gap limits,
//!   after activity-based bound tightening ([`tighten_bounds`]).
//! - [`brute_force`]: exhaustive oracle for models with at most 25 free binaries.
//! - [`write_lp`] / [`parse_lp`]: CPLEX LP text export and re-import.
//! - [`write_solution`] / [`parse_solution`]: `name value` solution files.

mod bnb;
mod brute;
mod error;
mod lp;
mod lp_format;
mod model;
mod presolve;
mod solution_file;

pub use bnb::{
    complete_with_binaries, solve_milp, solve_milp_with_start, IncumbentUpdate, MilpSolution,
    MilpStatus, NodeRecord, SolveLimits,
};
pub use brute::{brute_force, brute_force_with, BruteForceResult, MAX_BRUTE_FORCE_BINARIES};
pub use error::MilpError;
pub use lp::{solve_lp, LpSolution, LpStatus};
pub use lp_format::{parse_lp, write_lp};
pub use model::{
    Column, Infeasibility, MilpModel, Row, Sense, VarKind, FEASIBILITY_TOL, INTEGRALITY_TOL,
};
pub use presolve::{tighten_bounds, Presolve};
pub use solution_file::{parse_solution, write_solution, SolutionFile};
