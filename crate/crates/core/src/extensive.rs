//! Reference solvers: the extensive linearized MILP over all distributions and
//! brute-force enumeration of every opening pattern.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::milp::{solve_milp, MilpOptions, MilpStatus, Model, Relation, Row, Sense, VarKind};
use crate::problem::{decision_from_mask, Problem};
use crate::types::{gap_percent, DistributionId, SolveReport, SolveStatus};

pub const DEFAULT_NNZ_LIMIT: u128 = 5_000_000;
pub const ORACLE_MAX_FACILITIES: usize = 20;

/// Number of rows of each family in the extensive model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RowCounts {
    pub distribution_linking: usize,
    pub zone_linking: usize,
    pub flow: usize,
    pub linearization: usize,
}

impl RowCounts {
    /// Closed-form counts for an instance.
    pub fn expected(problem: &Problem) -> Self {
        let inst = problem.instance();
        let (ni, nj) = (inst.n_facilities(), inst.n_customers());
        let n_dist = 1usize << inst.n_zones();
        let total_scenarios: usize =
            (0..n_dist).map(|d| problem.scenarios().scenarios(DistributionId(d as u32)).n_scenarios()).sum();
        RowCounts {
            distribution_linking: 2 * n_dist,
            zone_linking: 2 * inst.n_zones(),
            flow: (nj + ni) * total_scenarios,
            linearization: 3 * ni * nj * total_scenarios,
        }
    }

    pub fn total(&self) -> usize {
        self.distribution_linking + self.zone_linking + self.flow + self.linearization
    }
}

/// The extensive model and where its variables live.
#[derive(Debug, Clone)]
pub struct ExtensiveModel {
    pub model: Model,
    pub counts: RowCounts,
    n_facilities: usize,
    n_customers: usize,
    n_zones: usize,
    /// First `w` column of each `(d, s)` block; the matching `h` block follows it.
    blocks: Vec<(DistributionId, usize, usize)>,
}

impl ExtensiveModel {
    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, z: usize) -> usize {
        self.n_facilities + z
    }

    pub fn delta(&self, d: DistributionId) -> usize {
        self.n_facilities + self.n_zones + d.mask() as usize
    }

    /// `(distribution, scenario, first w column)` of every scenario block.
    pub fn blocks(&self) -> &[(DistributionId, usize, usize)] {
        &self.blocks
    }

    pub fn w(&self, block_start: usize, i: usize, j: usize) -> usize {
        block_start + i * self.n_customers + j
    }

    pub fn h(&self, block_start: usize, i: usize, j: usize) -> usize {
        block_start + self.n_facilities * self.n_customers + i * self.n_customers + j
    }
}

/// Nonzero count of the extensive model, computed without building it.
pub fn extensive_nnz(problem: &Problem) -> u128 {
    let inst = problem.instance();
    let (ni, nj, nz) = (inst.n_facilities() as u128, inst.n_customers() as u128, inst.n_zones() as u128);
    let n_dist = 1u128 << nz;
    let scenarios: u128 = (0..n_dist)
        .map(|d| problem.scenarios().scenarios(DistributionId(d as u32)).n_scenarios() as u128)
        .sum();
    2 * n_dist * (nz + 1) + 2 * (ni + nz) + scenarios * (9 * ni * nj + ni)
}

pub fn build_extensive(problem: &Problem) -> Result<ExtensiveModel> {
    build_extensive_with_limit(problem, DEFAULT_NNZ_LIMIT)
}

pub fn build_extensive_with_limit(problem: &Problem, nnz_limit: u128) -> Result<ExtensiveModel> {
    let inst = problem.instance();
    if inst.n_zones() > 20 {
        return Err(Error::SizeGuard { what: "extensive model distributions", size: 1u128 << inst.n_zones(), limit: 1 << 20 });
    }
    let nnz = extensive_nnz(problem);
    if nnz > nnz_limit {
        return Err(Error::SizeGuard { what: "extensive model nonzeros", size: nnz, limit: nnz_limit });
    }
    let (ni, nj, nz) = (inst.n_facilities(), inst.n_customers(), inst.n_zones());
    let n_dist = 1u32 << nz;
    let mut model = Model::new(Sense::Minimize);
    let mut counts = RowCounts::default();

    for i in 0..ni {
        model.add_named_var(format!("x{i}"), 0.0, 1.0, inst.fixed_cost()[i], VarKind::Binary);
    }
    for z in 0..nz {
        model.add_named_var(format!("y{z}"), 0.0, 1.0, 0.0, VarKind::Binary);
    }
    for d in 0..n_dist {
        model.add_named_var(format!("delta{d}"), 0.0, 1.0, 0.0, VarKind::Binary);
    }
    let delta = |d: u32| ni + nz + d as usize;

    for d in (0..n_dist).map(DistributionId) {
        let active = d.active_count() as f64;
        let inactive = (nz - d.active_count()) as f64;
        let signature: Vec<(usize, f64)> =
            (0..nz).map(|z| (ni + z, if d.is_active(z) { 1.0 } else { -1.0 })).collect();
        let mut ge = signature.clone();
        ge.push((delta(d.mask()), -(active + inactive)));
        model.push_row(Row::new(ge, Relation::Ge, -inactive).named(format!("dist_lo_{}", d.mask())));
        let mut le = signature;
        le.push((delta(d.mask()), -1.0));
        model.push_row(Row::new(le, Relation::Le, active - 1.0).named(format!("dist_hi_{}", d.mask())));
        counts.distribution_linking += 2;
    }
    for (z, members) in inst.zones().iter().enumerate() {
        let mut upper: Vec<(usize, f64)> = members.iter().map(|&i| (i, 1.0)).collect();
        let mut lower = upper.clone();
        upper.push((ni + z, -(members.len() as f64)));
        lower.push((ni + z, -1.0));
        model.push_row(Row::new(upper, Relation::Le, 0.0).named(format!("open_{z}")));
        model.push_row(Row::new(lower, Relation::Ge, 0.0).named(format!("active_{z}")));
        counts.zone_linking += 2;
    }

    let mut blocks = Vec::new();
    for d in (0..n_dist).map(DistributionId) {
        let set = problem.scenarios().scenarios(d);
        let p = set.probability();
        for s in 0..set.n_scenarios() {
            let w0 = model.n_vars();
            for i in 0..ni {
                for j in 0..nj {
                    model.add_named_var(format!("w_{}_{s}_{i}_{j}", d.mask()), 0.0, f64::INFINITY, 0.0, VarKind::Continuous);
                }
            }
            for i in 0..ni {
                for j in 0..nj {
                    let obj = -p * inst.revenue()[i][j];
                    model.add_named_var(format!("h_{}_{s}_{i}_{j}", d.mask()), 0.0, f64::INFINITY, obj, VarKind::Continuous);
                }
            }
            let w = |i: usize, j: usize| w0 + i * nj + j;
            let h = |i: usize, j: usize| w0 + ni * nj + i * nj + j;
            let xi = set.scenario(s);
            for (j, &demand) in xi.iter().enumerate() {
                model.add_row((0..ni).map(|i| (w(i, j), 1.0)).collect(), Relation::Le, demand);
            }
            for i in 0..ni {
                let mut coeffs: Vec<(usize, f64)> = (0..nj).map(|j| (w(i, j), 1.0)).collect();
                coeffs.push((i, -inst.capacity()[i]));
                model.add_row(coeffs, Relation::Le, 0.0);
            }
            counts.flow += nj + ni;
            for i in 0..ni {
                for (j, &demand) in xi.iter().enumerate() {
                    let m = demand.min(inst.capacity()[i]);
                    let dl = delta(d.mask());
                    model.add_row(vec![(h(i, j), 1.0), (w(i, j), -1.0)], Relation::Le, 0.0);
                    model.add_row(vec![(h(i, j), 1.0), (dl, -m)], Relation::Le, 0.0);
                    model.add_row(vec![(w(i, j), 1.0), (h(i, j), -1.0), (dl, m)], Relation::Le, m);
                    counts.linearization += 3;
                }
            }
            blocks.push((d, s, w0));
        }
    }
    Ok(ExtensiveModel { model, counts, n_facilities: ni, n_customers: nj, n_zones: nz, blocks })
}

#[derive(Debug, Clone)]
pub struct ExtensiveOptions {
    pub time_limit: Option<Duration>,
    pub gap_tol: f64,
    pub nnz_limit: u128,
}

impl Default for ExtensiveOptions {
    fn default() -> Self {
        ExtensiveOptions { time_limit: None, gap_tol: 1e-4, nnz_limit: DEFAULT_NNZ_LIMIT }
    }
}

pub fn solve_extensive(problem: &Problem, options: &ExtensiveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let ext = build_extensive_with_limit(problem, options.nnz_limit)?;
    let res = solve_milp(
        &ext.model,
        &MilpOptions { time_limit: options.time_limit, gap_tol: options.gap_tol, initial_incumbent: None },
    )?;
    let status = match res.status {
        MilpStatus::Optimal => SolveStatus::Optimal,
        MilpStatus::TimeLimit => SolveStatus::TimeLimit,
        MilpStatus::Infeasible | MilpStatus::Unbounded => SolveStatus::Infeasible,
    };
    let x = res.x.as_ref().map(|p| (0..ext.n_facilities).map(|i| p[ext.x(i)] > 0.5).collect());
    Ok(SolveReport {
        incumbent_x: x,
        objective: res.objective,
        best_bound: res.best_bound,
        gap_percent: gap_percent(res.best_bound, res.objective),
        wall_time: start.elapsed().as_secs_f64(),
        iterations: res.lp_iterations,
        cuts_total: 0,
        cuts_per_distribution: Default::default(),
        bnb_nodes: res.nodes,
        status,
    })
}

/// Evaluates every opening pattern and returns the best, preferring the
/// smallest facility bitmask among equal objectives.
pub fn exhaustive_oracle(problem: &Problem) -> Result<SolveReport> {
    let start = Instant::now();
    let ni = problem.instance().n_facilities();
    if ni > ORACLE_MAX_FACILITIES {
        return Err(Error::SizeGuard {
            what: "oracle enumeration points",
            size: 1u128 << ni,
            limit: 1u128 << ORACLE_MAX_FACILITIES,
        });
    }
    let count = 1u64 << ni;
    let best = (0..count)
        .into_par_iter()
        .map(|mask| problem.evaluate(&decision_from_mask(mask, ni)).map(|obj| (obj, mask)))
        .try_reduce(|| (f64::INFINITY, u64::MAX), |a, b| Ok(if better(b, a) { b } else { a }))?;
    let (objective, mask) = best;
    Ok(SolveReport {
        incumbent_x: Some(decision_from_mask(mask, ni)),
        objective,
        best_bound: objective,
        gap_percent: 0.0,
        wall_time: start.elapsed().as_secs_f64(),
        iterations: count as usize,
        cuts_total: 0,
        cuts_per_distribution: Default::default(),
        bnb_nodes: 0,
        status: SolveStatus::Optimal,
    })
}

fn better(a: (f64, u64), b: (f64, u64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{FixedScenarios, ScenarioSet};
    use crate::types::{CustomerSpec, DemandType, FacilitySpec, Instance, InstanceData};
    use std::sync::Arc;

    fn toy() -> Problem {
        let data = InstanceData {
            facilities: vec![FacilitySpec { x: 0.0, y: 0.0, zone: 0 }, FacilitySpec { x: 1.0, y: 0.0, zone: 0 }],
            customers: vec![CustomerSpec { x: 0.0, y: 0.0, mu: 60.0, sigma: 1.0, zone_rank: vec![0] }],
            fixed_cost: vec![1000.0; 2],
            capacity: vec![100.0; 2],
            revenue: vec![vec![400.0]; 2],
            demand_type: DemandType::A,
            scenarios_per_distribution: 1,
            seed: 0,
            config: 1,
        };
        let scen = FixedScenarios::from_fn(1, |_| ScenarioSet::constant(&[60.0], 1).unwrap()).unwrap();
        Problem::with_scenarios(Instance::try_from(data).unwrap(), Arc::new(scen)).unwrap()
    }

    #[test]
    fn oracle_breaks_ties_by_smallest_mask() {
        let r = exhaustive_oracle(&toy()).unwrap();
        assert_eq!(r.objective, -23000.0);
        assert_eq!(r.incumbent_x, Some(vec![true, false]));
        assert_eq!(r.iterations, 4);
    }

    #[test]
    fn extensive_solves_toy() {
        let p = toy();
        let r = solve_extensive(&p, &ExtensiveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 23000.0).abs() < 1e-6);
    }

    #[test]
    fn single_cell_row_counts() {
        let data = InstanceData {
            facilities: vec![FacilitySpec { x: 0.0, y: 0.0, zone: 0 }],
            customers: vec![CustomerSpec { x: 0.0, y: 0.0, mu: 60.0, sigma: 1.0, zone_rank: vec![0] }],
            fixed_cost: vec![1000.0],
            capacity: vec![100.0],
            revenue: vec![vec![400.0]],
            demand_type: DemandType::A,
            scenarios_per_distribution: 1,
            seed: 0,
            config: 1,
        };
        let scen = FixedScenarios::from_fn(1, |_| ScenarioSet::constant(&[60.0], 1).unwrap()).unwrap();
        let p = Problem::with_scenarios(Instance::try_from(data).unwrap(), Arc::new(scen)).unwrap();
        let ext = build_extensive(&p).unwrap();
        // Two distributions with one scenario each.
        assert_eq!(ext.counts, RowCounts { distribution_linking: 4, zone_linking: 2, flow: 4, linearization: 6 });
        assert_eq!(ext.counts, RowCounts::expected(&p));
        assert_eq!(ext.model.n_rows(), ext.counts.total());
        assert_eq!(ext.model.nnz() as u128, extensive_nnz(&p));
    }

    #[test]
    fn closed_decision_has_zero_objective() {
        let p = toy();
        let ext = build_extensive(&p).unwrap();
        let mut point = vec![0.0; ext.model.n_vars()];
        point[ext.delta(DistributionId(0))] = 1.0;
        assert!(ext.model.max_violation(&point) < 1e-12);
        assert_eq!(ext.model.objective_value(&point), 0.0);
    }

    #[test]
    fn size_guard_refuses_large_models() {
        let err = build_extensive_with_limit(&toy(), 10).unwrap_err();
        assert!(matches!(err, Error::SizeGuard { .. }));
    }
}
