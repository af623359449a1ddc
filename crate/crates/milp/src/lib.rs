//! A small, deterministic MILP solver: bounded-variable revised simplex for
//! LP relaxations plus best-bound branch-and-bound over binary/integer
//! variables. Problems are stored sparse (row-major triplets) because the
//! intended workloads are mostly zero blocks.

mod branch_bound;
mod io;
mod problem;
mod simplex;

pub use branch_bound::{solve_milp, SolverConfig};
pub use io::{load_problem, parse_problem, write_problem};
pub use problem::{MilpError, MilpProblem, MilpSolution, SparseMatrix, Status};
pub use simplex::solve_lp;

/// Feasibility tolerance on returned solutions (max constraint violation).
pub const TOL_FEAS: f64 = 1e-7;
/// Integrality tolerance for integer variables.
pub const TOL_INT: f64 = 1e-6;
/// Pruning tolerance on objective bounds.
pub const TOL_GAP: f64 = 1e-9;
