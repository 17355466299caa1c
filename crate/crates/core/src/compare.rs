//! Value of modelling decision-dependent demand: the plan chosen when every
//! facility shares one zone, evaluated under the true model, against the
//! decision-dependent optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lshaped::{self, LShapedOptions};
use crate::problem::Problem;
use crate::types::{Instance, SolveReport};

pub const DOMINANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub simplified: SolveReport,
    pub simplified_x: Vec<bool>,
    /// Objective of `simplified_x` under the decision-dependent model.
    pub eval_fixed: f64,
    pub ddu: SolveReport,
    /// Profit increase of the decision-dependent plan, in percent.
    pub uplift_percent: f64,
}

/// The same instance with all facilities merged into a single zone.
pub fn simplified_instance(instance: &Instance) -> Result<Instance> {
    let mut data = instance.data().clone();
    for f in &mut data.facilities {
        f.zone = 0;
    }
    for c in &mut data.customers {
        c.zone_rank = vec![0];
    }
    Instance::try_from(data)
}

pub fn uplift_percent(eval_fixed: f64, ddu: f64) -> f64 {
    100.0 * (eval_fixed - ddu) / (1e-10 + eval_fixed.abs())
}

pub fn compare(instance: &Instance, options: &LShapedOptions) -> Result<Comparison> {
    let truth = Problem::new(instance.clone());
    let simple = Problem::new(simplified_instance(instance)?);
    compare_problems(&truth, &simple, options)
}

pub fn compare_problems(truth: &Problem, simplified: &Problem, options: &LShapedOptions) -> Result<Comparison> {
    let simple = lshaped::solve(simplified, &LShapedOptions { initial_x: None, ..options.clone() })?.report;
    let simplified_x =
        simple.incumbent_x.clone().ok_or_else(|| Error::Solver("simplified model returned no decision".into()))?;
    let eval_fixed = lshaped::evaluate_fixed(truth, &simplified_x)?;
    let ddu = lshaped::solve(truth, &LShapedOptions { initial_x: Some(simplified_x.clone()), ..options.clone() })?.report;
    let uplift = uplift_percent(eval_fixed, ddu.objective);
    if ddu.objective > eval_fixed + DOMINANCE_TOL * (1.0 + eval_fixed.abs()) {
        return Err(Error::Solver(format!(
            "decision-dependent objective {} is worse than the simplified plan's {}",
            ddu.objective, eval_fixed
        )));
    }
    Ok(Comparison { simplified: simple, simplified_x, eval_fixed, ddu, uplift_percent: uplift })
}
