//! A small self-contained LP/MILP solver: bounded-variable simplex and
//! best-first branch and bound with lazy constraints.

mod bnb;
mod lu;
mod model;
mod simplex;

pub use bnb::{solve_milp, solve_milp_with, LazyOutcome, MilpOptions, MilpResult, MilpStatus, NodeInfo};
pub use model::{Model, Relation, Row, Sense, VarKind, Variable};
pub use simplex::{solve_lp, LpSolution, LpStatus};
