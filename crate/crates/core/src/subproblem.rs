//! The second-stage transportation problem
//!
//! ```text
//! max  sum_ij R_ij w_ij
//! s.t. sum_i w_ij <= xi_j        (u_j)
//!      sum_j w_ij <= C_i x_i     (v_i)
//!      w >= 0
//! ```
//!
//! solved by successive shortest augmenting paths, with an optimal dual pair
//! recovered from the optimal flow.

use rayon::prelude::*;

use crate::demand::ScenarioSet;
use crate::error::{Error, Result};
use crate::types::Instance;

/// Optimal primal and dual solution of one transportation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub objective: f64,
    /// `flow[i * n_customers + j]`
    pub flow: Vec<f64>,
    /// Price of one more unit of demand at each customer.
    pub u: Vec<f64>,
    /// Price of one more unit of capacity at each facility.
    pub v: Vec<f64>,
}

impl TransportSolution {
    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.u.len() + j]
    }

    /// `sum_j xi_j u_j + sum_i cap_i v_i`
    pub fn dual_objective(&self, xi: &[f64], cap: &[f64]) -> f64 {
        let a: f64 = xi.iter().zip(&self.u).map(|(x, u)| x * u).sum();
        let b: f64 = cap.iter().zip(&self.v).map(|(c, v)| c * v).sum();
        a + b
    }
}

fn tol(scale: f64) -> f64 {
    1e-12 * (1.0 + scale.abs())
}

/// Solves the transportation problem with opening decisions `x`.
pub fn solve_transport(x: &[bool], xi: &[f64], revenue: &[Vec<f64>], capacity: &[f64]) -> Result<TransportSolution> {
    let ni = capacity.len();
    let nj = xi.len();
    if x.len() != ni || revenue.len() != ni || revenue.iter().any(|r| r.len() != nj) {
        return Err(Error::DimensionMismatch(format!(
            "transport problem with {} decisions, {} capacities, {} revenue rows and {} demands",
            x.len(),
            ni,
            revenue.len(),
            nj
        )));
    }
    let cap: Vec<f64> = (0..ni).map(|i| if x[i] { capacity[i] } else { 0.0 }).collect();
    let mut flows = FlowState::new(&cap, xi, revenue);
    flows.run();
    let (u, v) = flows.duals();
    let objective = (0..ni)
        .flat_map(|i| (0..nj).map(move |j| (i, j)))
        .map(|(i, j)| revenue[i][j] * flows.w[i * nj + j])
        .sum();
    Ok(TransportSolution { objective, flow: flows.w, u, v })
}

struct FlowState<'a> {
    cap: &'a [f64],
    xi: &'a [f64],
    revenue: &'a [Vec<f64>],
    ni: usize,
    nj: usize,
    w: Vec<f64>,
    /// Flow out of each facility and into each customer.
    out: Vec<f64>,
    inflow: Vec<f64>,
    /// Node potentials: source, facilities, customers, sink.
    pot: Vec<f64>,
}

const INF: f64 = f64::INFINITY;

impl<'a> FlowState<'a> {
    fn new(cap: &'a [f64], xi: &'a [f64], revenue: &'a [Vec<f64>]) -> Self {
        let ni = cap.len();
        let nj = xi.len();
        let mut pot = vec![0.0; 2 + ni + nj];
        for j in 0..nj {
            pot[1 + ni + j] = -(0..ni).map(|i| revenue[i][j]).fold(0.0, f64::max);
        }
        pot[1 + ni + nj] = (0..nj).map(|j| pot[1 + ni + j]).fold(0.0, f64::min);
        FlowState {
            cap,
            xi,
            revenue,
            ni,
            nj,
            w: vec![0.0; ni * nj],
            out: vec![0.0; ni],
            inflow: vec![0.0; nj],
            pot,
        }
    }

    fn sink(&self) -> usize {
        1 + self.ni + self.nj
    }

    /// Residual arcs leaving `node` as `(head, residual capacity, cost)`.
    fn arcs(&self, node: usize, mut f: impl FnMut(usize, f64, f64)) {
        let (ni, nj) = (self.ni, self.nj);
        if node == 0 {
            for i in 0..ni {
                f(1 + i, self.cap[i] - self.out[i], 0.0);
            }
        } else if node <= ni {
            let i = node - 1;
            f(0, self.out[i], 0.0);
            for j in 0..nj {
                f(1 + ni + j, INF, -self.revenue[i][j]);
            }
        } else if node <= ni + nj {
            let j = node - 1 - ni;
            for i in 0..ni {
                f(1 + i, self.w[i * nj + j], self.revenue[i][j]);
            }
            f(self.sink(), self.xi[j] - self.inflow[j], 0.0);
        } else {
            for j in 0..nj {
                f(1 + ni + j, self.inflow[j], 0.0);
            }
        }
    }

    fn residual_tol(&self, node: usize, head: usize) -> f64 {
        let (ni, nj) = (self.ni, self.nj);
        let scale = match (node, head) {
            (0, h) | (h, 0) => self.cap[h - 1],
            (a, b) if a == self.sink() || b == self.sink() => self.xi[a.min(b) - 1 - ni],
            (a, b) => {
                let (i, j) = if a <= ni { (a - 1, b - 1 - ni) } else { (b - 1, a - 1 - ni) };
                self.cap[i].min(self.xi[j]).min(self.w[i * nj + j].max(1.0))
            }
        };
        tol(scale)
    }

    /// Dijkstra on reduced costs; returns distances and predecessors.
    fn shortest_paths(&self) -> (Vec<f64>, Vec<usize>) {
        let n = self.pot.len();
        let mut dist = vec![INF; n];
        let mut pred = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[0] = 0.0;
        for _ in 0..n {
            let Some(u) = (0..n).filter(|&k| !done[k] && dist[k] < INF).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
            else {
                break;
            };
            done[u] = true;
            let du = dist[u];
            self.arcs(u, |h, res, cost| {
                if done[h] || res <= self.residual_tol(u, h) {
                    return;
                }
                let reduced = (cost + self.pot[u] - self.pot[h]).max(0.0);
                if du + reduced < dist[h] {
                    dist[h] = du + reduced;
                    pred[h] = u;
                }
            });
        }
        (dist, pred)
    }

    fn residual(&self, a: usize, b: usize) -> f64 {
        let mut r = 0.0;
        self.arcs(a, |h, res, _| {
            if h == b {
                r = res;
            }
        });
        r
    }

    fn push(&mut self, a: usize, b: usize, amount: f64) {
        let (ni, nj) = (self.ni, self.nj);
        let t = self.sink();
        match (a, b) {
            (0, h) => self.out[h - 1] += amount,
            (h, 0) => self.out[h - 1] -= amount,
            (j, s) if s == t => self.inflow[j - 1 - ni] += amount,
            (s, j) if s == t => self.inflow[j - 1 - ni] -= amount,
            (f, c) if f <= ni => self.w[(f - 1) * nj + (c - 1 - ni)] += amount,
            (c, f) => {
                let k = (f - 1) * nj + (c - 1 - ni);
                self.w[k] = (self.w[k] - amount).max(0.0);
            }
        }
    }

    fn run(&mut self) {
        let t = self.sink();
        loop {
            let (dist, pred) = self.shortest_paths();
            if dist[t] == INF {
                break;
            }
            // True cost of the path; stop once it no longer earns revenue.
            let cost = dist[t] - self.pot[0] + self.pot[t];
            if cost >= -tol(self.pot[t].abs()) {
                break;
            }
            let mut path = vec![t];
            while *path.last().unwrap() != 0 {
                path.push(pred[*path.last().unwrap()]);
            }
            path.reverse();
            let amount = path.windows(2).map(|e| self.residual(e[0], e[1])).fold(INF, f64::min);
            for e in path.windows(2) {
                self.push(e[0], e[1], amount);
            }
            let dt = dist[t];
            for (p, d) in self.pot.iter_mut().zip(&dist) {
                *p += d.min(dt);
            }
        }
    }

    /// An optimal dual pair satisfying complementary slackness with the flow.
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let (ni, nj) = (self.ni, self.nj);
        // Difference constraints over X_j = u_j, Y_i = -v_i and a reference node O.
        let origin = ni + nj;
        let xn = |j: usize| j;
        let yn = |i: usize| nj + i;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for i in (0..ni).filter(|&i| self.cap[i] > 0.0) {
            for j in 0..nj {
                let r = self.revenue[i][j];
                edges.push((xn(j), yn(i), -r));
                if self.w[i * nj + j] > tol(self.cap[i].min(self.xi[j])) {
                    edges.push((yn(i), xn(j), r));
                }
            }
            edges.push((origin, yn(i), 0.0));
            if self.cap[i] - self.out[i] > 1e-9 * (1.0 + self.cap[i]) {
                edges.push((yn(i), origin, 0.0));
            }
        }
        for j in 0..nj {
            edges.push((xn(j), origin, 0.0));
            if self.xi[j] - self.inflow[j] > 1e-9 * (1.0 + self.xi[j]) {
                edges.push((origin, xn(j), 0.0));
            }
        }
        let n = ni + nj + 1;
        let mut dist = vec![0.0f64; n];
        for _ in 0..n {
            let mut changed = false;
            for &(a, b, wgt) in &edges {
                let cand = dist[a] + wgt;
                if cand < dist[b] - tol(cand) {
                    dist[b] = cand;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let o = dist[origin];
        let u: Vec<f64> = (0..nj).map(|j| (dist[xn(j)] - o).max(0.0)).collect();
        let v = (0..ni)
            .map(|i| (0..nj).map(|j| self.revenue[i][j] - u[j]).fold(0.0, f64::max))
            .collect();
        (u, v)
    }
}

/// Transportation problems for every scenario of `set`, in scenario order.
pub fn solve_scenarios(instance: &Instance, x: &[bool], set: &ScenarioSet) -> Result<Vec<TransportSolution>> {
    (0..set.n_scenarios())
        .into_par_iter()
        .map(|s| solve_transport(x, set.scenario(s), instance.revenue(), instance.capacity()))
        .collect()
}

/// Expected optimal second-stage revenue over the scenarios of `set`.
pub fn expected_second_stage(instance: &Instance, x: &[bool], set: &ScenarioSet) -> Result<f64> {
    if !x.iter().any(|&o| o) {
        return Ok(0.0);
    }
    let solutions = solve_scenarios(instance, x, set)?;
    Ok(solutions.iter().map(|s| s.objective).sum::<f64>() * set.probability())
}
