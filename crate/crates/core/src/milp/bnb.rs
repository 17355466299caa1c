//! Best-first branch and bound over binary variables with a lazy-constraint
//! callback at integral nodes. One tableau is reused for the whole tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::model::{Model, Row, Sense};
use super::simplex::{LpStatus, Tableau};
use crate::error::Result;

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub time_limit: Option<Duration>,
    /// Relative gap `|bound - incumbent| / (1e-10 + |incumbent|)` at which the search stops.
    pub gap_tol: f64,
    /// A known feasible point and its objective in the model's sense.
    pub initial_incumbent: Option<(Vec<f64>, f64)>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { time_limit: None, gap_tol: 1e-4, initial_incumbent: None }
    }
}

/// What the lazy-constraint callback knows about the node it is called from,
/// in the model's objective sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeInfo {
    pub lp_objective: f64,
    pub global_bound: f64,
}

/// Verdict of the lazy-constraint callback on an integral LP solution.
#[derive(Debug, Clone, PartialEq)]
pub enum LazyOutcome {
    /// The point is feasible. `objective` overrides the LP value of the point.
    Accept { objective: Option<f64> },
    /// Rows violated by the point; they are added to the model for the rest of the search.
    Cuts(Vec<Row>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    /// Incumbent objective in the model's sense.
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub cuts_added: usize,
    pub lp_iterations: usize,
    /// Global bound after each processed node, in the model's sense.
    pub bound_history: Vec<f64>,
}

impl MilpResult {
    pub fn gap(&self) -> f64 {
        relative_gap(self.best_bound, self.objective)
    }
}

fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    (bound - incumbent).abs() / (1e-10 + incumbent.abs())
}

struct Node {
    id: usize,
    /// Lower bound in minimization orientation.
    bound: f64,
    /// Bounds of the integer variables.
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the smallest bound, then the oldest node, comes first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

/// Solves `model` without lazy constraints.
pub fn solve_milp(model: &Model, options: &MilpOptions) -> Result<MilpResult> {
    solve_milp_with(model, options, |_, _| Ok(LazyOutcome::Accept { objective: None }))
}

/// Solves `model`, consulting `callback` at every integral LP solution.
pub fn solve_milp_with<F>(model: &Model, options: &MilpOptions, mut callback: F) -> Result<MilpResult>
where
    F: FnMut(&[f64], &NodeInfo) -> Result<LazyOutcome>,
{
    model.validate()?;
    let start = Instant::now();
    let deadline = options.time_limit.map(|t| start + t);
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let ints: Vec<usize> = model.integer_vars().collect();
    let mut tab = Tableau::new(model);
    tab.set_deadline(deadline);

    // Incumbent in minimization orientation.
    let mut incumbent: Option<(Vec<f64>, f64)> =
        options.initial_incumbent.as_ref().map(|(x, obj)| (x.clone(), sign * obj));
    let mut heap = BinaryHeap::new();
    let root_bounds: Vec<(f64, f64)> = ints.iter().map(|&j| tab.bounds(j)).collect();
    heap.push(Node { id: 0, bound: f64::NEG_INFINITY, bounds: root_bounds });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut cuts_added = 0;
    let mut history = Vec::new();
    let mut global_bound = f64::NEG_INFINITY;
    let mut timed_out = false;
    let mut unbounded = false;

    let finish = |status: MilpStatus, incumbent: Option<(Vec<f64>, f64)>, bound: f64, nodes, cuts, iters, history: Vec<f64>| {
        let (x, obj) = match incumbent {
            Some((x, o)) => (Some(x), sign * o),
            None => (None, sign * f64::INFINITY),
        };
        MilpResult {
            status,
            x,
            objective: obj,
            best_bound: sign * bound,
            nodes,
            cuts_added: cuts,
            lp_iterations: iters,
            bound_history: history.into_iter().map(|b: f64| sign * b).collect(),
        }
    };

    // A child kept aside to be solved next, so consecutive warm starts stay close.
    let mut dive: Option<Node> = None;
    loop {
        let (node, dived) = match dive.take() {
            Some(n) => (n, true),
            None => match heap.pop() {
                Some(n) => (n, false),
                None => break,
            },
        };
        global_bound = global_bound.max(heap.peek().map_or(node.bound, |n| n.bound.min(node.bound)));
        if let Some((_, inc)) = &incumbent {
            let prunable = node.bound >= *inc - 1e-9 * (1.0 + inc.abs());
            if prunable && dived {
                continue;
            }
            if prunable || relative_gap(global_bound, *inc) <= options.gap_tol {
                heap.push(node);
                break;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        for (&j, &(l, u)) in ints.iter().zip(&node.bounds) {
            if tab.bounds(j) != (l, u) {
                tab.set_bounds(j, l, u);
            }
        }

        // Solve, separate lazily, repeat until the node is settled.
        let settled = loop {
            match tab.reoptimize()? {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => break None,
                LpStatus::Unbounded => {
                    unbounded = true;
                    break None;
                }
                LpStatus::TimeLimit => {
                    timed_out = true;
                    break None;
                }
            }
            let z = tab.objective();
            if let Some((_, inc)) = &incumbent {
                if z >= *inc - 1e-9 * (1.0 + inc.abs()) {
                    break None;
                }
            }
            let x = tab.values();
            let frac = ints
                .iter()
                .map(|&j| (j, (x[j] - x[j].round()).abs()))
                .filter(|&(_, f)| f > INT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            if let Some((j, _)) = frac {
                break Some((z, j));
            }
            let point: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| if ints.binary_search(&k).is_ok() { v.round() } else { v })
                .collect();
            let info = NodeInfo { lp_objective: sign * z, global_bound: sign * global_bound };
            match callback(&point, &info)? {
                LazyOutcome::Accept { objective } => {
                    let value = objective.map_or(z, |o| sign * o);
                    let better = match &incumbent {
                        None => true,
                        Some((_, inc)) => value < *inc,
                    };
                    if better {
                        incumbent = Some((point, value));
                    }
                    break None;
                }
                LazyOutcome::Cuts(rows) => {
                    let violated: Vec<Row> =
                        rows.into_iter().filter(|r| r.violation(&point) > 1e-9 * (1.0 + r.rhs.abs())).collect();
                    if violated.is_empty() {
                        // Nothing new to enforce: the point stands as it is.
                        let better = incumbent.as_ref().is_none_or(|(_, inc)| z < *inc);
                        if better {
                            incumbent = Some((point, z));
                        }
                        break None;
                    }
                    for row in &violated {
                        tab.add_row(row);
                    }
                    cuts_added += violated.len();
                }
            }
        };
        if timed_out || unbounded {
            heap.push(node);
            break;
        }
        if let Some((z, j)) = settled {
            let v = tab.values()[j];
            let pos = ints.binary_search(&j).expect("branching variable is integer");
            let mut children = [(node.bounds[pos].0, v.floor()), (v.ceil(), node.bounds[pos].1)].map(|(lo, hi)| {
                let mut bounds = node.bounds.clone();
                bounds[pos] = (lo, hi);
                next_id += 1;
                Node { id: next_id - 1, bound: z, bounds }
            });
            if v - v.floor() > 0.5 {
                children.swap(0, 1);
            }
            let [first, second] = children;
            heap.push(second);
            dive = Some(first);
        }
        let open_min = heap.peek().into_iter().chain(&dive).map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let current = match &incumbent {
            Some((_, inc)) => open_min.min(*inc),
            None => open_min,
        };
        global_bound = global_bound.max(current.min(f64::MAX));
        history.push(global_bound);
    }

    let iters = tab.iterations;
    if unbounded {
        return Ok(finish(MilpStatus::Unbounded, incumbent, f64::NEG_INFINITY, nodes, cuts_added, iters, history));
    }
    if timed_out {
        let bound = heap.peek().map_or(global_bound, |n| n.bound.max(global_bound));
        let bound = match &incumbent {
            Some((_, inc)) => bound.min(*inc),
            None => bound,
        };
        return Ok(finish(MilpStatus::TimeLimit, incumbent, bound, nodes, cuts_added, iters, history));
    }
    match incumbent {
        None => Ok(finish(MilpStatus::Infeasible, None, f64::INFINITY, nodes, cuts_added, iters, history)),
        Some((x, inc)) => {
            let bound = match heap.peek() {
                None => inc,
                Some(n) => n.bound.max(global_bound).min(inc),
            };
            if history.last() != Some(&bound) {
                history.push(bound);
            }
            Ok(finish(MilpStatus::Optimal, Some((x, inc)), bound, nodes, cuts_added, iters, history))
        }
    }
}
