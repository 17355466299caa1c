//! Decision-dependent L-shaped method.
//!
//! The recourse here maximizes revenue, so every optimality cut is an upper
//! cut on the revenue estimate `mu`:
//!
//! ```text
//! mu <= a0 + sum_i a_i x_i + U * (|Z_d| - sum_{z in Z_d} y_z + sum_{z not in Z_d} y_z)
//! ```
//!
//! with `a0 = sum_s p_s sum_j u_sj xi_sj` and `a_i = sum_s p_s v_si C_i` built
//! from optimal transportation duals `(u, v)` under distribution `d`. The
//! bracket is the Hamming distance between `y` and the zone signature of `d`.
//!
//! * At the generating point the bracket is zero and the dual value equals the
//!   expected revenue by strong duality, so a point with a larger `mu` is cut off.
//! * At any other `x'` enforcing the same `d`, the duals stay feasible for the
//!   dual of the revenue maximization, and weak duality gives
//!   `a0 + a x' >= E_d[Q(x')]`.
//! * At any `x'` enforcing `d' != d` the bracket is at least one, the dual part
//!   is nonnegative and `U` bounds every expected revenue, so the cut is slack.
//!
//! The master problem minimizes `sum F_i x_i - mu`.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::milp::{solve_milp, solve_milp_with, LazyOutcome, MilpOptions, MilpResult, MilpStatus, Model, Relation, Row, Sense, VarKind};
use crate::problem::Problem;
use crate::subproblem::solve_scenarios;
use crate::types::{gap_percent, DistributionId, Instance, SolveReport, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One branch-and-bound tree with cuts added at integral nodes.
    #[default]
    SingleTree,
    /// Re-solve the master problem from scratch after every cut.
    Iterative,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::SingleTree => "single-tree",
            Mode::Iterative => "iterative",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "single-tree" => Ok(Mode::SingleTree),
            "iterative" => Ok(Mode::Iterative),
            other => Err(format!("unknown mode '{other}', expected single-tree or iterative")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LShapedOptions {
    pub vi: bool,
    pub mode: Mode,
    pub time_limit: Option<Duration>,
    pub gap_tol: f64,
    /// A starting decision; its true objective becomes the first incumbent.
    pub initial_x: Option<Vec<bool>>,
}

impl Default for LShapedOptions {
    fn default() -> Self {
        LShapedOptions { vi: false, mode: Mode::SingleTree, time_limit: None, gap_tol: 1e-4, initial_x: None }
    }
}

/// One separation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iteration: usize,
    pub d_mask: u32,
    #[serde(rename = "E")]
    pub expected: f64,
    pub mu: f64,
    pub bound: f64,
}

/// Column positions of the master problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmpLayout {
    pub n_facilities: usize,
    pub n_zones: usize,
}

impl RmpLayout {
    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, z: usize) -> usize {
        self.n_facilities + z
    }

    pub fn mu(&self) -> usize {
        self.n_facilities + self.n_zones
    }

    pub fn n_vars(&self) -> usize {
        self.n_facilities + self.n_zones + 1
    }

    pub fn decision(&self, point: &[f64]) -> Vec<bool> {
        point[..self.n_facilities].iter().map(|&v| v > 0.5).collect()
    }

    /// Master-problem point of decision `x` with revenue estimate `mu`.
    pub fn point(&self, instance: &Instance, x: &[bool], mu: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.n_vars()];
        for (i, &open) in x.iter().enumerate() {
            if open {
                p[self.x(i)] = 1.0;
                p[self.y(instance.zone_of(i))] = 1.0;
            }
        }
        p[self.mu()] = mu;
        p
    }
}

/// The relaxed master problem before any optimality cut.
#[derive(Debug, Clone)]
pub struct Rmp {
    pub model: Model,
    pub layout: RmpLayout,
    pub u: f64,
}

/// Upper bound on the expected revenue of any decision under any distribution.
pub fn compute_u(problem: &Problem) -> f64 {
    let inst = problem.instance();
    let means = problem.scenarios().max_empirical_mean();
    (0..inst.n_customers()).map(|j| inst.max_revenue(j) * means[j]).sum()
}

/// Coefficients of the valid inequality `mu <= sum_i b_i x_i`.
pub fn valid_inequality_coeffs(problem: &Problem) -> Vec<f64> {
    let inst = problem.instance();
    let means = problem.scenarios().max_empirical_mean();
    (0..inst.n_facilities())
        .map(|i| {
            let c = inst.capacity()[i];
            (0..inst.n_customers()).map(|j| inst.revenue()[i][j] * c.min(means[j])).sum()
        })
        .collect()
}

pub fn build_rmp(problem: &Problem, vi: bool) -> Rmp {
    let inst = problem.instance();
    let layout = RmpLayout { n_facilities: inst.n_facilities(), n_zones: inst.n_zones() };
    let u = compute_u(problem);
    let mut model = Model::new(Sense::Minimize);
    for i in 0..layout.n_facilities {
        model.add_named_var(format!("x{i}"), 0.0, 1.0, inst.fixed_cost()[i], VarKind::Binary);
    }
    for z in 0..layout.n_zones {
        model.add_named_var(format!("y{z}"), 0.0, 1.0, 0.0, VarKind::Binary);
    }
    model.add_named_var("mu", 0.0, u, -1.0, VarKind::Continuous);
    for (z, members) in inst.zones().iter().enumerate() {
        let mut upper: Vec<(usize, f64)> = members.iter().map(|&i| (layout.x(i), 1.0)).collect();
        let mut lower = upper.clone();
        upper.push((layout.y(z), -(members.len() as f64)));
        lower.push((layout.y(z), -1.0));
        model.push_row(Row::new(upper, Relation::Le, 0.0).named(format!("open_{z}")));
        model.push_row(Row::new(lower, Relation::Ge, 0.0).named(format!("active_{z}")));
    }
    if vi {
        let mut coeffs = vec![(layout.mu(), 1.0)];
        coeffs.extend(valid_inequality_coeffs(problem).iter().enumerate().map(|(i, &b)| (layout.x(i), -b)));
        model.push_row(Row::new(coeffs, Relation::Le, 0.0).named("vi"));
    }
    Rmp { model, layout, u }
}

/// An optimality cut generated under one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub distribution: DistributionId,
    pub intercept: f64,
    /// One coefficient per facility.
    pub coeffs: Vec<f64>,
    pub slack_coeff: f64,
}

impl Cut {
    /// Number of zones whose activity in `y` differs from the cut's distribution.
    pub fn slack(&self, y: &[bool]) -> usize {
        y.iter().enumerate().filter(|&(z, &a)| a != self.distribution.is_active(z)).count()
    }

    /// Right-hand side at a linking-consistent `(x, y)`.
    pub fn rhs(&self, x: &[bool], y: &[bool]) -> f64 {
        let dual: f64 = self.coeffs.iter().zip(x).filter(|(_, &o)| o).map(|(a, _)| a).sum();
        self.intercept + dual + self.slack_coeff * self.slack(y) as f64
    }

    /// Right-hand side at decision `x` with `y` implied by `x`.
    pub fn rhs_at(&self, instance: &Instance, x: &[bool]) -> f64 {
        let mut y = vec![false; instance.n_zones()];
        for (i, _) in x.iter().enumerate().filter(|(_, &o)| o) {
            y[instance.zone_of(i)] = true;
        }
        self.rhs(x, &y)
    }

    pub fn to_row(&self, layout: &RmpLayout) -> Row {
        let mut coeffs = vec![(layout.mu(), 1.0)];
        coeffs.extend(self.coeffs.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (layout.x(i), -a)));
        let mut active = 0usize;
        for z in 0..layout.n_zones {
            if self.distribution.is_active(z) {
                active += 1;
                coeffs.push((layout.y(z), self.slack_coeff));
            } else {
                coeffs.push((layout.y(z), -self.slack_coeff));
            }
        }
        Row::new(coeffs, Relation::Le, self.intercept + self.slack_coeff * active as f64)
            .named(format!("cut_{}", self.distribution.mask()))
    }

    fn key(&self) -> (u32, u64, Vec<u64>) {
        (self.distribution.mask(), self.intercept.to_bits(), self.coeffs.iter().map(|a| a.to_bits()).collect())
    }
}

/// Result of checking a master-problem point against the true expected revenue.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub distribution: DistributionId,
    pub expected: f64,
    /// Present when `mu` exceeds the expected revenue by more than the tolerance.
    pub cut: Option<Cut>,
}

pub fn cut_tolerance(mu: f64) -> f64 {
    1e-6 * (1.0 + mu.abs())
}

/// The cut at `x` and the expected revenue it reproduces there.
pub fn build_cut(problem: &Problem, x: &[bool], u: f64) -> Result<(Cut, f64)> {
    problem.check_len(x)?;
    let inst = problem.instance();
    let d = problem.distribution(x);
    let set = problem.scenarios().scenarios(d);
    let solutions = solve_scenarios(inst, x, &set)?;
    let p = set.probability();
    let mut intercept = 0.0;
    let mut coeffs = vec![0.0; inst.n_facilities()];
    let mut expected = 0.0;
    for (s, sol) in solutions.iter().enumerate() {
        intercept += p * sol.u.iter().zip(set.scenario(s)).map(|(u, xi)| u * xi).sum::<f64>();
        for (a, (v, c)) in coeffs.iter_mut().zip(sol.v.iter().zip(inst.capacity())) {
            *a += p * v * c;
        }
        expected += p * sol.objective;
    }
    Ok((Cut { distribution: d, intercept, coeffs, slack_coeff: u }, expected))
}

pub fn separate_cut(problem: &Problem, x: &[bool], mu: f64, u: f64) -> Result<Separation> {
    let (cut, expected) = build_cut(problem, x, u)?;
    let violated = mu > expected + cut_tolerance(mu);
    Ok(Separation { distribution: cut.distribution, expected, cut: violated.then_some(cut) })
}

/// Opening cost minus expected revenue of a fixed decision under the
/// distribution it enforces.
pub fn evaluate_fixed(problem: &Problem, x: &[bool]) -> Result<f64> {
    problem.evaluate(x)
}

#[derive(Debug, Clone)]
pub struct LShapedOutcome {
    pub report: SolveReport,
    pub cuts: Vec<Cut>,
    /// The decision and revenue estimate each cut was generated at.
    pub cut_origins: Vec<(Vec<bool>, f64)>,
    pub trace: Vec<TraceEvent>,
    pub u: f64,
}

#[derive(Default)]
struct CutPool {
    cuts: Vec<Cut>,
    origins: Vec<(Vec<bool>, f64)>,
    keys: std::collections::HashSet<(u32, u64, Vec<u64>)>,
    per_distribution: BTreeMap<u32, usize>,
    /// Expected revenue by decision, and whether a cut was already generated there.
    seen: HashMap<Vec<bool>, (DistributionId, f64, bool)>,
}

impl CutPool {
    /// Separates at `(x, mu)`; returns the expected revenue and a new cut if one is needed.
    fn separate(&mut self, problem: &Problem, x: &[bool], mu: f64, u: f64) -> Result<(DistributionId, f64, Option<Cut>)> {
        if let Some(&(d, e, cut_made)) = self.seen.get(x) {
            if cut_made || mu <= e + cut_tolerance(mu) {
                return Ok((d, e, None));
            }
        }
        let (cut, e) = build_cut(problem, x, u)?;
        let d = cut.distribution;
        if mu <= e + cut_tolerance(mu) {
            self.seen.insert(x.to_vec(), (d, e, false));
            return Ok((d, e, None));
        }
        self.seen.insert(x.to_vec(), (d, e, true));
        if !self.keys.insert(cut.key()) {
            return Ok((d, e, None));
        }
        debug_assert!(mu > cut.rhs_at(problem.instance(), x) + cut_tolerance(mu) - 1e-9 * (1.0 + mu.abs()));
        *self.per_distribution.entry(d.mask()).or_default() += 1;
        self.cuts.push(cut.clone());
        self.origins.push((x.to_vec(), mu));
        Ok((d, e, Some(cut)))
    }
}

/// Solves the problem with the decision-dependent L-shaped method.
pub fn solve(problem: &Problem, options: &LShapedOptions) -> Result<LShapedOutcome> {
    let start = Instant::now();
    let inst = problem.instance();
    if let Some(x) = &options.initial_x {
        problem.check_len(x)?;
    }
    let rmp = build_rmp(problem, options.vi);
    let start_x = options.initial_x.clone().unwrap_or_else(|| vec![false; inst.n_facilities()]);
    let start_e = problem.expected_revenue(&start_x)?;
    let start_obj = inst.opening_cost(&start_x) - start_e;
    let start_point = rmp.layout.point(inst, &start_x, start_e.min(rmp.u));

    let mut pool = CutPool::default();
    let mut trace = Vec::new();
    let (status, x, bound, iterations, nodes) = match options.mode {
        Mode::SingleTree => {
            let milp_opts = MilpOptions {
                time_limit: options.time_limit,
                gap_tol: options.gap_tol,
                initial_incumbent: Some((start_point, start_obj)),
            };
            let mut iterations = 0;
            let res = solve_milp_with(&rmp.model, &milp_opts, |point, info| {
                iterations += 1;
                let x = rmp.layout.decision(point);
                let mu = point[rmp.layout.mu()];
                let (d, e, cut) = pool.separate(problem, &x, mu, rmp.u)?;
                trace.push(TraceEvent { iteration: iterations, d_mask: d.mask(), expected: e, mu, bound: info.global_bound });
                Ok(match cut {
                    Some(cut) => LazyOutcome::Cuts(vec![cut.to_row(&rmp.layout)]),
                    None => LazyOutcome::Accept { objective: Some(inst.opening_cost(&x) - e) },
                })
            })?;
            let x = res.x.as_deref().map(|p| rmp.layout.decision(p)).unwrap_or(start_x);
            (milp_status(&res), x, res.best_bound, iterations, res.nodes)
        }
        Mode::Iterative => iterate(problem, &rmp, options, start, &mut pool, &mut trace, (start_x, start_obj))?,
    };

    let objective = problem.evaluate(&x)?;
    let bound = bound.min(objective);
    let report = SolveReport {
        incumbent_x: Some(x),
        objective,
        best_bound: bound,
        gap_percent: gap_percent(bound, objective),
        wall_time: start.elapsed().as_secs_f64(),
        iterations,
        cuts_total: pool.cuts.len(),
        cuts_per_distribution: pool.per_distribution,
        bnb_nodes: nodes,
        status,
    };
    Ok(LShapedOutcome { report, cuts: pool.cuts, cut_origins: pool.origins, trace, u: rmp.u })
}

fn milp_status(res: &MilpResult) -> SolveStatus {
    match res.status {
        MilpStatus::Optimal => SolveStatus::Optimal,
        MilpStatus::TimeLimit => SolveStatus::TimeLimit,
        MilpStatus::Infeasible | MilpStatus::Unbounded => SolveStatus::Infeasible,
    }
}

type IterationResult = (SolveStatus, Vec<bool>, f64, usize, usize);

fn iterate(
    problem: &Problem,
    rmp: &Rmp,
    options: &LShapedOptions,
    start: Instant,
    pool: &mut CutPool,
    trace: &mut Vec<TraceEvent>,
    (mut best_x, mut best_obj): (Vec<bool>, f64),
) -> Result<IterationResult> {
    let inst = problem.instance();
    let mut model = rmp.model.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut nodes = 0;
    let mut iterations = 0;
    loop {
        let remaining = match options.time_limit {
            Some(t) => match t.checked_sub(start.elapsed()) {
                Some(r) if !r.is_zero() => Some(r),
                _ => return Ok((SolveStatus::TimeLimit, best_x, lower, iterations, nodes)),
            },
            None => None,
        };
        let res = solve_milp(&model, &MilpOptions { time_limit: remaining, gap_tol: options.gap_tol, initial_incumbent: None })?;
        iterations += 1;
        nodes += res.nodes;
        let point = match (&res.status, &res.x) {
            (MilpStatus::Optimal, Some(p)) => p.clone(),
            (MilpStatus::TimeLimit, _) => {
                lower = lower.max(res.best_bound);
                return Ok((SolveStatus::TimeLimit, best_x, lower, iterations, nodes));
            }
            _ => return Ok((milp_status(&res), best_x, lower, iterations, nodes)),
        };
        lower = lower.max(res.best_bound);
        let x = rmp.layout.decision(&point);
        let mu = point[rmp.layout.mu()];
        let (d, e, cut) = pool.separate(problem, &x, mu, rmp.u)?;
        trace.push(TraceEvent { iteration: iterations, d_mask: d.mask(), expected: e, mu, bound: lower });
        let obj = inst.opening_cost(&x) - e;
        if obj < best_obj {
            best_x = x;
            best_obj = obj;
        }
        match cut {
            Some(cut) => {
                model.push_row(cut.to_row(&rmp.layout));
                if (best_obj - lower).abs() / (1e-10 + best_obj.abs()) <= options.gap_tol {
                    return Ok((SolveStatus::Optimal, best_x, lower, iterations, nodes));
                }
            }
            None => return Ok((SolveStatus::Optimal, best_x, lower, iterations, nodes)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{FixedScenarios, ScenarioSet};
    use crate::types::{CustomerSpec, DemandType, FacilitySpec, InstanceData};
    use std::sync::Arc;

    fn toy(n_fac: usize, cap: f64, demand: f64, fixed: f64) -> Problem {
        toy_with(n_fac, cap, demand, demand, fixed)
    }

    /// One zone, one customer; demand `open` when the zone is active, `closed` otherwise.
    fn toy_with(n_fac: usize, cap: f64, open: f64, closed: f64, fixed: f64) -> Problem {
        let demand = open;
        let data = InstanceData {
            facilities: (0..n_fac).map(|i| FacilitySpec { x: i as f64, y: 0.0, zone: 0 }).collect(),
            customers: vec![CustomerSpec { x: 0.0, y: 0.0, mu: demand, sigma: 1.0, zone_rank: vec![0] }],
            fixed_cost: vec![fixed; n_fac],
            capacity: vec![cap; n_fac],
            revenue: vec![vec![400.0]; n_fac],
            demand_type: DemandType::A,
            scenarios_per_distribution: 1,
            seed: 0,
            config: 1,
        };
        let inst = Instance::try_from(data).unwrap();
        let scen = FixedScenarios::from_fn(1, |d| {
            ScenarioSet::constant(&[if d.mask() == 1 { open } else { closed }], 1).unwrap()
        })
        .unwrap();
        Problem::with_scenarios(inst, Arc::new(scen)).unwrap()
    }

    #[test]
    fn u_of_single_customer() {
        assert_eq!(compute_u(&toy(1, 100.0, 75.0, 1.0)), 30000.0);
    }

    #[test]
    fn rmp_without_cuts_takes_the_box() {
        let p = toy(2, 100.0, 60.0, 1000.0);
        let rmp = build_rmp(&p, false);
        assert_eq!(rmp.model.n_rows(), 2);
        let r = solve_milp(&rmp.model, &MilpOptions::default()).unwrap();
        assert_eq!(r.objective, -rmp.u);
        assert_eq!(rmp.layout.decision(r.x.as_ref().unwrap()), vec![false, false]);
        assert_eq!(build_rmp(&p, true).model.n_rows(), 3);
    }

    #[test]
    fn demand_bound_cut() {
        let p = toy_with(1, 100.0, 50.0, 75.0, 1.0);
        let u = compute_u(&p);
        assert_eq!(u, 30000.0);
        let sep = separate_cut(&p, &[true], u, u).unwrap();
        let cut = sep.cut.unwrap();
        assert_eq!(sep.expected, 20000.0);
        assert_eq!(cut.intercept, 20000.0);
        assert_eq!(cut.coeffs, vec![0.0]);
        assert_eq!(cut.slack_coeff, u);
        assert!(separate_cut(&p, &[true], 20000.0, u).unwrap().cut.is_none());
    }

    #[test]
    fn capacity_bound_cut() {
        let p = toy(1, 100.0, 200.0, 1.0);
        let u = compute_u(&p);
        let cut = separate_cut(&p, &[true], u, u).unwrap().cut.unwrap();
        assert_eq!(cut.intercept, 0.0);
        assert_eq!(cut.coeffs, vec![40000.0]);
    }

    #[test]
    fn cut_row_matches_rhs() {
        let p = toy(2, 100.0, 60.0, 1000.0);
        let rmp = build_rmp(&p, false);
        let (cut, e) = build_cut(&p, &[true, false], rmp.u).unwrap();
        let row = cut.to_row(&rmp.layout);
        for x in [[false, false], [true, false], [false, true], [true, true]] {
            let rhs = cut.rhs_at(p.instance(), &x);
            let point = rmp.layout.point(p.instance(), &x, rhs);
            assert!(row.violation(&point) < 1e-9);
            let above = rmp.layout.point(p.instance(), &x, rhs + 1.0);
            assert!(row.violation(&above) > 0.5);
        }
        assert_eq!(cut.rhs_at(p.instance(), &[true, false]), e);
    }

    #[test]
    fn toy_optimum_in_both_modes() {
        let p = toy(2, 100.0, 60.0, 1000.0);
        for mode in [Mode::SingleTree, Mode::Iterative] {
            for vi in [false, true] {
                let out = solve(&p, &LShapedOptions { mode, vi, ..Default::default() }).unwrap();
                let r = &out.report;
                assert_eq!(r.status, SolveStatus::Optimal);
                assert!((r.objective + 23000.0).abs() < 1e-9, "{mode} vi={vi}: {}", r.objective);
                let x = r.incumbent_x.as_ref().unwrap();
                assert_eq!(x.iter().filter(|&&o| o).count(), 1);
            }
        }
    }

    #[test]
    fn iterative_bound_never_drops() {
        let p = toy(3, 30.0, 60.0, 500.0);
        let out = solve(&p, &LShapedOptions { mode: Mode::Iterative, ..Default::default() }).unwrap();
        let bounds: Vec<f64> = out.trace.iter().map(|t| t.bound).collect();
        assert!(bounds.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(out.report.status, SolveStatus::Optimal);
    }

    #[test]
    fn evaluation_of_closed_decision_is_zero() {
        let p = toy(2, 100.0, 60.0, 1000.0);
        assert_eq!(evaluate_fixed(&p, &[false, false]).unwrap(), 0.0);
        assert_eq!(evaluate_fixed(&p, &[true, false]).unwrap(), -23000.0);
    }

    #[test]
    fn trace_serializes_with_expected_keys() {
        let e = TraceEvent { iteration: 1, d_mask: 3, expected: 2.0, mu: 4.0, bound: -1.0 };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"iteration":1,"d_mask":3,"E":2.0,"mu":4.0,"bound":-1.0}"#);
    }
}
