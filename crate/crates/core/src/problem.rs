use std::sync::Arc;

use crate::demand::{identify_distribution, SampledScenarios, ScenarioProvider};
use crate::error::{Error, Result};
use crate::subproblem::expected_second_stage;
use crate::types::{DistributionId, Instance};

/// An instance together with the scenario sets of its distributions.
#[derive(Clone)]
pub struct Problem {
    instance: Instance,
    scenarios: Arc<dyn ScenarioProvider>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("instance", &self.instance).finish_non_exhaustive()
    }
}

impl Problem {
    /// Scenarios sampled from the instance's own demand model.
    pub fn new(instance: Instance) -> Self {
        let scenarios = Arc::new(SampledScenarios::new(&instance));
        Problem { instance, scenarios }
    }

    pub fn with_scenarios(instance: Instance, scenarios: Arc<dyn ScenarioProvider>) -> Result<Self> {
        if scenarios.n_customers() != instance.n_customers() || scenarios.n_zones() != instance.n_zones() {
            return Err(Error::DimensionMismatch(format!(
                "scenarios cover {} customers and {} zones, instance has {} and {}",
                scenarios.n_customers(),
                scenarios.n_zones(),
                instance.n_customers(),
                instance.n_zones()
            )));
        }
        Ok(Problem { instance, scenarios })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn scenarios(&self) -> &Arc<dyn ScenarioProvider> {
        &self.scenarios
    }

    pub fn distribution(&self, x: &[bool]) -> DistributionId {
        identify_distribution(&self.instance, x)
    }

    /// Expected second-stage revenue of `x` under the distribution it enforces.
    pub fn expected_revenue(&self, x: &[bool]) -> Result<f64> {
        self.check_len(x)?;
        let set = self.scenarios.scenarios(self.distribution(x));
        expected_second_stage(&self.instance, x, &set)
    }

    /// Opening cost minus expected revenue.
    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        Ok(self.instance.opening_cost(x) - self.expected_revenue(x)?)
    }

    pub(crate) fn check_len(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.instance.n_facilities() {
            return Err(Error::DimensionMismatch(format!(
                "decision has {} entries, instance has {} facilities",
                x.len(),
                self.instance.n_facilities()
            )));
        }
        Ok(())
    }
}

/// Decision vector of a facility bitmask (bit `i` opens facility `i`).
pub fn decision_from_mask(mask: u64, n_facilities: usize) -> Vec<bool> {
    (0..n_facilities).map(|i| mask >> i & 1 == 1).collect()
}

pub fn decision_mask(x: &[bool]) -> u64 {
    x.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| 1u64 << i).sum()
}
