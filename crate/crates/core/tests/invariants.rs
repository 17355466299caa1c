use std::sync::Arc;

use ddfl_core::demand::{FixedScenarios, ScenarioSet};
use ddfl_core::extensive::{build_extensive, exhaustive_oracle, solve_extensive, ExtensiveOptions};
use ddfl_core::instgen::{generate, GeneratorParams};
use ddfl_core::lshaped::{self, build_cut, compute_u, valid_inequality_coeffs, LShapedOptions, Mode};
use ddfl_core::milp::{solve_milp, MilpOptions, MilpStatus};
use ddfl_core::problem::decision_from_mask;
use ddfl_core::{
    CustomerSpec, DemandType, DistributionId, FacilitySpec, Instance, InstanceData, Problem, SolveStatus,
};
use proptest::prelude::*;

/// Two facilities in one zone serving one customer whose demand is 60 when the zone is open.
fn toy() -> Problem {
    let data = InstanceData {
        facilities: (0..2).map(|i| FacilitySpec { x: i as f64, y: 0.0, zone: 0 }).collect(),
        customers: vec![CustomerSpec { x: 0.0, y: 0.0, mu: 40.0, sigma: 1.0, zone_rank: vec![0] }],
        fixed_cost: vec![1000.0; 2],
        capacity: vec![100.0; 2],
        revenue: vec![vec![400.0]; 2],
        demand_type: DemandType::A,
        scenarios_per_distribution: 1,
        seed: 0,
        config: 1,
    };
    let inst = Instance::try_from(data).unwrap();
    let scen =
        FixedScenarios::from_fn(1, |d| ScenarioSet::constant(&[if d.mask() == 1 { 60.0 } else { 0.0 }], 1).unwrap())
            .unwrap();
    Problem::with_scenarios(inst, Arc::new(scen)).unwrap()
}

#[test]
fn toy_optimum_from_every_solver() {
    let p = toy();
    let oracle = exhaustive_oracle(&p).unwrap();
    assert_eq!(oracle.objective, -23000.0);
    assert_eq!(oracle.incumbent_x, Some(vec![true, false]));
    let ext = solve_extensive(&p, &ExtensiveOptions::default()).unwrap();
    assert_eq!(ext.status, SolveStatus::Optimal);
    assert!((ext.objective + 23000.0).abs() < 1e-9);
    let ls = lshaped::solve(&p, &LShapedOptions::default()).unwrap();
    assert!((ls.report.objective + 23000.0).abs() < 1e-9);
    assert_eq!(p.evaluate(&[false, false]).unwrap(), 0.0);
    assert_eq!(p.evaluate(&[true, true]).unwrap(), -22000.0);
}

fn small_problem(max_fac: usize, max_cust: usize, max_zones: usize) -> impl Strategy<Value = Problem> {
    (3..=max_fac, 2..=max_cust, 1..=max_zones, 1usize..=3, 0usize..4, 1u8..=7, any::<u64>()).prop_map(
        |(ni, nj, nz, ns, dt, config, seed)| {
            let nz = nz.min(ni);
            Problem::new(generate(&GeneratorParams::new(ni, nj, nz, ns, DemandType::ALL[dt], config, seed)).unwrap())
        },
    )
}

fn all_decisions(p: &Problem) -> impl Iterator<Item = Vec<bool>> {
    let n = p.instance().n_facilities();
    (0..1u64 << n).map(move |m| decision_from_mask(m, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expected_revenue_lies_in_zero_to_u(p in small_problem(6, 5, 3)) {
        let u = compute_u(&p);
        for x in all_decisions(&p) {
            let e = p.expected_revenue(&x).unwrap();
            prop_assert!(e >= 0.0 && e <= u * (1.0 + 1e-12), "{e} outside [0, {u}]");
        }
    }

    #[test]
    fn valid_inequality_bounds_every_decision(p in small_problem(6, 5, 3)) {
        let b = valid_inequality_coeffs(&p);
        for x in all_decisions(&p) {
            let rhs: f64 = b.iter().zip(&x).filter(|(_, &o)| o).map(|(v, _)| v).sum();
            let e = p.expected_revenue(&x).unwrap();
            prop_assert!(e <= rhs + 1e-9 * (1.0 + rhs), "{e} > {rhs}");
        }
    }

    #[test]
    fn cuts_are_tight_at_home_and_safe_everywhere(p in small_problem(6, 5, 3), pick in any::<u64>()) {
        let n = p.instance().n_facilities();
        let x0 = decision_from_mask(pick % (1 << n), n);
        let u = compute_u(&p);
        let (cut, e0) = build_cut(&p, &x0, u).unwrap();
        prop_assert_eq!(cut.distribution, p.distribution(&x0));
        prop_assert!((cut.rhs_at(p.instance(), &x0) - e0).abs() <= 1e-9 * (1.0 + e0));
        for x in all_decisions(&p) {
            let e = p.expected_revenue(&x).unwrap();
            let rhs = cut.rhs_at(p.instance(), &x);
            prop_assert!(rhs >= e - 1e-7 * (1.0 + e), "cut {rhs} below E {e}");
        }
    }

    #[test]
    fn lshaped_matches_oracle(p in small_problem(6, 5, 3), iterative in any::<bool>(), vi in any::<bool>()) {
        let mode = if iterative { Mode::Iterative } else { Mode::SingleTree };
        let oracle = exhaustive_oracle(&p).unwrap();
        let out = lshaped::solve(&p, &LShapedOptions { mode, vi, ..Default::default() }).unwrap();
        prop_assert_eq!(out.report.status, SolveStatus::Optimal);
        let o = oracle.objective;
        prop_assert!((out.report.objective - o).abs() <= 1e-6 * (1.0 + o.abs()), "{} vs {o}", out.report.objective);
        let x = out.report.incumbent_x.as_ref().unwrap();
        prop_assert_eq!(p.evaluate(x).unwrap(), out.report.objective);
        prop_assert!(out.report.best_bound <= out.report.objective);
    }

    #[test]
    fn reruns_are_identical(p in small_problem(5, 4, 2)) {
        let a = lshaped::solve(&p, &LShapedOptions::default()).unwrap().report;
        let b = lshaped::solve(&p, &LShapedOptions::default()).unwrap().report;
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        prop_assert_eq!(a.best_bound.to_bits(), b.best_bound.to_bits());
        prop_assert_eq!((a.cuts_total, a.bnb_nodes), (b.cuts_total, b.bnb_nodes));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn extensive_solution_selects_one_distribution(p in small_problem(4, 3, 2)) {
        let ext = build_extensive(&p).unwrap();
        let r = solve_milp(&ext.model, &MilpOptions { gap_tol: 0.0, ..Default::default() }).unwrap();
        prop_assert_eq!(r.status, MilpStatus::Optimal);
        let v = r.x.unwrap();
        let inst = p.instance();
        let x: Vec<bool> = (0..inst.n_facilities()).map(|i| v[ext.x(i)] > 0.5).collect();
        let n_dist = 1u32 << inst.n_zones();
        let deltas: Vec<f64> = (0..n_dist).map(|d| v[ext.delta(DistributionId(d))]).collect();
        prop_assert!((deltas.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let chosen = p.distribution(&x);
        prop_assert!(deltas[chosen.mask() as usize] > 0.5);
        for &(d, _, start) in ext.blocks() {
            let dv = v[ext.delta(d)];
            for i in 0..inst.n_facilities() {
                for j in 0..inst.n_customers() {
                    let (w, h) = (v[ext.w(start, i, j)], v[ext.h(start, i, j)]);
                    prop_assert!((h - dv * w).abs() <= 1e-6 * (1.0 + w.abs()), "h {h} vs delta*w {}", dv * w);
                }
            }
        }
        let oracle = exhaustive_oracle(&p).unwrap().objective;
        prop_assert!((r.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()));
        prop_assert!((p.evaluate(&x).unwrap() - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()));
    }
}
