//! Two-stage capacitated facility location where opening decisions shift the
//! demand distribution.

pub mod compare;
pub mod demand;
pub mod error;
pub mod extensive;
pub mod instgen;
pub mod lshaped;
pub mod milp;
pub mod problem;
pub mod rng;
pub mod subproblem;
pub mod types;

pub use error::{Error, Result};
pub use problem::Problem;
pub use types::*;
