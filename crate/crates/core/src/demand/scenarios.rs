use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use lru::LruCache;
use rayon::prelude::*;

use super::{dist_params, truncated_normal_quantile};
use crate::error::{Error, Result};
use crate::rng::ScenarioUniforms;
use crate::types::{CustomerSpec, DemandType, DistributionId, Instance};

pub const DEFAULT_CACHE_CAPACITY: usize = 4096;

/// Largest zone count for which every distribution is enumerated when bounding
/// the expected demand of types A and D.
const EXACT_ENUMERATION_ZONES: usize = 12;

/// Equiprobable demand realizations of one distribution, stored scenario-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    n_customers: usize,
    xi: Vec<f64>,
}

impl ScenarioSet {
    /// `xi[s * n_customers + j]` is the demand of customer `j` in scenario `s`.
    pub fn new(n_customers: usize, xi: Vec<f64>) -> Result<Self> {
        if n_customers == 0 || xi.is_empty() || !xi.len().is_multiple_of(n_customers) {
            return Err(Error::DimensionMismatch(format!(
                "{} realizations cannot be split among {n_customers} customers",
                xi.len()
            )));
        }
        if let Some(v) = xi.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::DimensionMismatch(format!("demand realization {v} is not a nonnegative number")));
        }
        Ok(ScenarioSet { n_customers, xi })
    }

    /// The same demand vector in every one of `n_scenarios` scenarios.
    pub fn constant(demand: &[f64], n_scenarios: usize) -> Result<Self> {
        let xi = demand.iter().copied().cycle().take(demand.len() * n_scenarios).collect();
        ScenarioSet::new(demand.len(), xi)
    }

    pub fn n_customers(&self) -> usize {
        self.n_customers
    }

    pub fn n_scenarios(&self) -> usize {
        self.xi.len() / self.n_customers
    }

    pub fn probability(&self) -> f64 {
        1.0 / self.n_scenarios() as f64
    }

    pub fn scenario(&self, s: usize) -> &[f64] {
        &self.xi[s * self.n_customers..(s + 1) * self.n_customers]
    }

    pub fn xi(&self, j: usize, s: usize) -> f64 {
        self.xi[s * self.n_customers + j]
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &[f64]> {
        self.xi.chunks_exact(self.n_customers)
    }

    /// Sample mean of customer `j`'s demand.
    pub fn mean(&self, j: usize) -> f64 {
        self.scenarios().map(|sc| sc[j]).sum::<f64>() / self.n_scenarios() as f64
    }
}

/// Source of the scenario set of every distribution.
pub trait ScenarioProvider: Send + Sync {
    fn n_customers(&self) -> usize;

    fn n_zones(&self) -> usize;

    fn scenarios(&self, d: DistributionId) -> Arc<ScenarioSet>;

    /// For every customer, an upper bound on its sample-mean demand over all
    /// distributions; exact whenever the distributions can be enumerated.
    fn max_empirical_mean(&self) -> &[f64];

    fn empirical_mean(&self, d: DistributionId, j: usize) -> f64 {
        self.scenarios(d).mean(j)
    }
}

/// Scenario sets sampled from truncated normals with common random numbers.
pub struct SampledScenarios {
    demand_type: DemandType,
    n_zones: usize,
    customers: Vec<CustomerSpec>,
    n_scenarios: usize,
    /// `uniforms[s * n_customers + j]`
    uniforms: Vec<f64>,
    cache: Mutex<LruCache<u32, Arc<ScenarioSet>>>,
    max_means: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for SampledScenarios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledScenarios")
            .field("demand_type", &self.demand_type)
            .field("n_zones", &self.n_zones)
            .field("n_customers", &self.customers.len())
            .field("n_scenarios", &self.n_scenarios)
            .finish_non_exhaustive()
    }
}

impl SampledScenarios {
    pub fn new(instance: &Instance) -> Self {
        Self::with_capacity(instance, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(instance: &Instance, cache_capacity: usize) -> Self {
        let n_scenarios = instance.scenarios_per_distribution();
        let cap = NonZeroUsize::new(cache_capacity.max(1)).unwrap();
        SampledScenarios {
            demand_type: instance.demand_type(),
            n_zones: instance.n_zones(),
            customers: instance.customers().to_vec(),
            n_scenarios,
            uniforms: ScenarioUniforms::table(instance.seed(), instance.n_customers(), n_scenarios),
            cache: Mutex::new(LruCache::new(cap)),
            max_means: OnceLock::new(),
        }
    }

    fn params(&self, j: usize, d: DistributionId) -> (f64, f64) {
        let c = &self.customers[j];
        dist_params(self.demand_type, c.mu, c.sigma, &c.zone_rank, d)
    }

    fn uniform(&self, j: usize, s: usize) -> f64 {
        self.uniforms[s * self.customers.len() + j]
    }

    fn sample_mean(&self, j: usize, mu: f64, sigma: f64) -> f64 {
        (0..self.n_scenarios)
            .map(|s| quantile(mu, sigma, self.uniform(j, s)))
            .sum::<f64>()
            / self.n_scenarios as f64
    }

    fn generate(&self, d: DistributionId) -> ScenarioSet {
        let n = self.customers.len();
        let params: Vec<(f64, f64)> = (0..n).map(|j| self.params(j, d)).collect();
        let xi = (0..self.n_scenarios * n)
            .map(|k| {
                let (mu, sigma) = params[k % n];
                quantile(mu, sigma, self.uniforms[k])
            })
            .collect();
        ScenarioSet { n_customers: n, xi }
    }

    /// Largest sample mean of customer `j` over distinct parameter pairs.
    fn max_mean_exact(&self, j: usize, masks: impl Iterator<Item = u32>) -> f64 {
        let mut seen = std::collections::HashSet::new();
        let mut best = 0.0f64;
        for mask in masks {
            let (mu, sigma) = self.params(j, DistributionId(mask));
            if seen.insert((mu.to_bits(), sigma.to_bits())) {
                best = best.max(self.sample_mean(j, mu, sigma));
            }
        }
        best
    }

    /// Valid over every distribution without enumerating them: the truncated
    /// normal quantile is `sigma * g(mu / sigma)` with `g` nonnegative and
    /// increasing, so the extreme parameters dominate.
    fn max_mean_bound(&self, j: usize) -> f64 {
        let c = &self.customers[j];
        let (mut m_hi, mut s_lo, mut s_hi) = (1.0f64, 1.0f64, 1.0f64);
        for n in 1..=self.n_zones {
            let a = 0.5f64.powi(n as i32);
            let b = 0.4f64.powi(n as i32);
            let sign = match (self.demand_type, n) {
                (DemandType::D, k) if k >= 2 => -1.0,
                _ => 1.0,
            };
            if sign > 0.0 {
                m_hi += a;
                s_lo -= b;
            } else {
                s_hi += b;
            }
        }
        let (mu_hi, sig_lo, sig_hi) = (c.mu * m_hi, c.sigma * s_lo, c.sigma * s_hi);
        (0..self.n_scenarios)
            .map(|s| sig_hi * quantile(mu_hi / sig_lo, 1.0, self.uniform(j, s)))
            .sum::<f64>()
            / self.n_scenarios as f64
    }

    fn compute_max_means(&self) -> Vec<f64> {
        let nz = self.n_zones;
        (0..self.customers.len())
            .into_par_iter()
            .map(|j| {
                let rank = &self.customers[j].zone_rank;
                match self.demand_type {
                    _ if nz <= EXACT_ENUMERATION_ZONES => self.max_mean_exact(j, 0..1u32 << nz),
                    // Only the closest zone matters.
                    DemandType::B => self.max_mean_exact(j, [0, 1 << rank[0]].into_iter()),
                    // Only the closest open zone matters.
                    DemandType::C => {
                        self.max_mean_exact(j, std::iter::once(0).chain(rank.iter().map(|&z| 1u32 << z)))
                    }
                    DemandType::A | DemandType::D => self.max_mean_bound(j),
                }
            })
            .collect()
    }
}

fn quantile(mu: f64, sigma: f64, u: f64) -> f64 {
    truncated_normal_quantile(mu, sigma, u).expect("common uniforms lie in (0, 1)")
}

impl ScenarioProvider for SampledScenarios {
    fn n_customers(&self) -> usize {
        self.customers.len()
    }

    fn n_zones(&self) -> usize {
        self.n_zones
    }

    fn scenarios(&self, d: DistributionId) -> Arc<ScenarioSet> {
        if let Some(hit) = self.cache.lock().unwrap().get(&d.mask()) {
            return Arc::clone(hit);
        }
        let set = Arc::new(self.generate(d));
        let mut cache = self.cache.lock().unwrap();
        Arc::clone(cache.get_or_insert(d.mask(), || set))
    }

    fn max_empirical_mean(&self) -> &[f64] {
        self.max_means.get_or_init(|| self.compute_max_means())
    }
}

/// Explicit scenario sets, one per distribution mask.
#[derive(Debug, Clone)]
pub struct FixedScenarios {
    n_zones: usize,
    sets: Vec<Arc<ScenarioSet>>,
    max_means: Vec<f64>,
}

impl FixedScenarios {
    /// `sets[mask]` for every mask of `n_zones` zones.
    pub fn new(n_zones: usize, sets: Vec<ScenarioSet>) -> Result<Self> {
        if sets.len() != 1usize << n_zones {
            return Err(Error::DimensionMismatch(format!(
                "{} zones need {} scenario sets, got {}",
                n_zones,
                1usize << n_zones,
                sets.len()
            )));
        }
        let n_customers = sets[0].n_customers();
        if sets.iter().any(|s| s.n_customers() != n_customers) {
            return Err(Error::DimensionMismatch("scenario sets disagree on the customer count".into()));
        }
        let max_means = (0..n_customers)
            .map(|j| sets.iter().map(|s| s.mean(j)).fold(0.0, f64::max))
            .collect();
        Ok(FixedScenarios { n_zones, sets: sets.into_iter().map(Arc::new).collect(), max_means })
    }

    pub fn from_fn(n_zones: usize, mut f: impl FnMut(DistributionId) -> ScenarioSet) -> Result<Self> {
        let sets = (0..1u32 << n_zones).map(|m| f(DistributionId(m))).collect();
        FixedScenarios::new(n_zones, sets)
    }
}

impl ScenarioProvider for FixedScenarios {
    fn n_customers(&self) -> usize {
        self.sets[0].n_customers()
    }

    fn n_zones(&self) -> usize {
        self.n_zones
    }

    fn scenarios(&self, d: DistributionId) -> Arc<ScenarioSet> {
        Arc::clone(&self.sets[d.mask() as usize])
    }

    fn max_empirical_mean(&self) -> &[f64] {
        &self.max_means
    }
}
