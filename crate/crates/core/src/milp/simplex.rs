//! Bounded-variable revised simplex.
//!
//! Every row `i` gets a slack `s_i = a_i x` whose bounds come from the row
//! relation, so the whole system is homogeneous: `A x - s = 0`. The basis is
//! kept as a sparse LU factor with product-form updates. Rows can be
//! appended at any time, which makes warm-started re-solves after bound
//! changes and cut additions cheap.

use std::time::Instant;

use super::lu::Factor;
use super::model::{Model, Row, Sense};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
/// Consecutive degenerate steps before switching to Bland's rule.
const BLAND_AFTER: usize = 500;

fn feas_tol(bound: f64) -> f64 {
    1e-9 * (1.0 + bound.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic(usize),
    Nonbasic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }
}

enum Phase2 {
    Done(LpStatus),
    LostFeasibility,
}

/// Live simplex state. Variables `0..n` are structural, `n + i` is the slack of row `i`.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    n: usize,
    m: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Costs in minimization orientation.
    cost: Vec<f64>,
    /// Structural coefficients of each row.
    rows: Vec<Vec<(usize, f64)>>,
    /// Structural coefficients of each column, by row.
    cols: Vec<Vec<(usize, f64)>>,
    /// Reduced costs; zero for basic variables.
    d: Vec<f64>,
    /// Variable held by each basis slot.
    basic: Vec<usize>,
    place: Vec<Place>,
    value: Vec<f64>,
    factor: Factor,
    /// Dual steepest-edge weight of each slot, `|e_r^T B^-1|^2`.
    weights: Vec<f64>,
    /// The factor no longer matches the basis.
    stale: bool,
    /// Nonbasic values moved since the basic values were computed.
    moved: bool,
    dual_tol: f64,
    pub(crate) iterations: usize,
    deadline: Option<Instant>,
}

impl Tableau {
    pub(crate) fn new(model: &Model) -> Self {
        let n = model.n_vars();
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let cost: Vec<f64> = model.vars.iter().map(|v| sign * v.obj).collect();
        let cost_scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut tab = Tableau {
            n,
            m: 0,
            lb: model.vars.iter().map(|v| v.lb).collect(),
            ub: model.vars.iter().map(|v| v.ub).collect(),
            d: cost.clone(),
            cost,
            rows: Vec::new(),
            cols: vec![Vec::new(); n],
            basic: Vec::new(),
            place: vec![Place::Nonbasic; n],
            value: vec![0.0; n],
            factor: Factor::default(),
            weights: Vec::new(),
            stale: true,
            moved: false,
            dual_tol: 1e-9 * cost_scale,
            iterations: 0,
            deadline: None,
        };
        for j in 0..n {
            tab.value[j] = tab.resting_value(j);
        }
        for row in &model.rows {
            tab.add_row(row);
        }
        tab
    }

    pub(crate) fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn resting_value(&self, j: usize) -> f64 {
        let (l, u) = (self.lb[j], self.ub[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if self.d[j] < 0.0 {
                    u
                } else {
                    l
                }
            }
            (true, false) => l,
            (false, true) => u,
            (false, false) => 0.0,
        }
    }

    /// Appends a constraint; its slack enters the basis.
    pub(crate) fn add_row(&mut self, row: &Row) {
        let mut coeffs: Vec<(usize, f64)> = row.coeffs.clone();
        coeffs.sort_by_key(|&(j, _)| j);
        coeffs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        coeffs.retain(|&(_, a)| a != 0.0);
        let i = self.m;
        // Slack indices shift by one; structural indices stay.
        let (l, u) = row.activity_bounds();
        let var = self.n + i;
        self.lb.push(l);
        self.ub.push(u);
        self.cost.push(0.0);
        self.d.push(0.0);
        self.place.push(Place::Basic(i));
        self.basic.push(var);
        self.weights.push(1.0);
        self.value.push(coeffs.iter().map(|&(j, a)| a * self.value[j]).sum());
        for &(j, a) in &coeffs {
            self.cols[j].push((i, a));
        }
        self.rows.push(coeffs);
        self.m += 1;
        self.stale = true;
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    /// Changes the bounds of variable `j`, moving it when nonbasic.
    pub(crate) fn set_bounds(&mut self, j: usize, l: f64, u: f64) {
        self.lb[j] = l;
        self.ub[j] = u;
        if self.place[j] == Place::Nonbasic {
            let target = self.resting_value(j);
            if target != self.value[j] {
                self.value[j] = target;
                self.moved = true;
            }
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.value[..self.n]
    }

    /// Objective in minimization orientation.
    pub(crate) fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.value).map(|(c, v)| c * v).sum()
    }

    /// `d z / d rhs` of each row, in minimization orientation.
    pub(crate) fn row_duals(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.d[self.n + i]).collect()
    }

    pub(crate) fn reduced_costs(&self) -> Vec<f64> {
        self.d[..self.n].to_vec()
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.value[j];
        if v < self.lb[j] - feas_tol(self.lb[j]) {
            v - self.lb[j]
        } else if v > self.ub[j] + feas_tol(self.ub[j]) {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basic.iter().all(|&j| self.infeasibility(j) == 0.0)
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    /// Whether nonbasic variable `j` may move in `dir`.
    fn can_move(&self, j: usize, dir: Direction) -> bool {
        if self.is_fixed(j) {
            return false;
        }
        let v = self.value[j];
        match dir {
            Direction::Up => !(self.ub[j].is_finite() && v >= self.ub[j]),
            Direction::Down => !(self.lb[j].is_finite() && v <= self.lb[j]),
        }
    }

    fn nonbasic(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n + self.m).filter(|&j| self.place[j] == Place::Nonbasic)
    }

    fn dual_feasible(&self) -> bool {
        self.nonbasic().all(|j| {
            let d = self.d[j];
            !(d < -self.dual_tol && self.can_move(j, Direction::Up)
                || d > self.dual_tol && self.can_move(j, Direction::Down))
        })
    }

    fn check_time(&self) -> bool {
        self.iterations.is_multiple_of(64) && self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn iteration_cap(&self) -> usize {
        1_000_000 + 200 * (self.n + self.m)
    }

    /// Column `j` of `[A  -I]`.
    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.cols[j].clone()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// `B^-1 a_j`, by slot.
    fn ftran_column(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for (i, a) in self.column(j) {
            v[i] += a;
        }
        self.factor.ftran(&mut v);
        v
    }

    /// Row `r` of `B^-1` and of `B^-1 [A  -I]` over all variables; basic entries
    /// of the latter are meaningless.
    fn pivot_row(&self, r: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rho = vec![0.0; self.m];
        rho[r] = 1.0;
        self.factor.btran(&mut rho);
        let row = self.price(&rho);
        (rho, row)
    }

    /// `y^T a_j` for every variable.
    fn price(&self, y: &[f64]) -> Vec<f64> {
        let mut alpha = vec![0.0; self.n + self.m];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for &(j, a) in &self.rows[i] {
                    alpha[j] += yi * a;
                }
                alpha[self.n + i] = -yi;
            }
        }
        alpha
    }

    /// Rebuilds the factor, the basic values and the reduced costs.
    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.basic.iter().map(|&j| self.column(j)).collect();
            match Factor::new(self.m, &cols) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(singular) => {
                    // Swap in slacks of the uncovered rows.
                    for (slot, row) in singular.replacements {
                        let out = self.basic[slot];
                        let slack = self.n + row;
                        self.place[out] = Place::Nonbasic;
                        self.d[out] = 0.0;
                        self.value[out] = self.value[out].clamp(self.lb[out], self.ub[out]);
                        if !self.value[out].is_finite() {
                            self.value[out] = self.resting_value(out);
                        }
                        self.basic[slot] = slack;
                        self.weights[slot] = 1.0;
                        self.place[slack] = Place::Basic(slot);
                    }
                }
            }
        }
        self.stale = false;
        self.recompute_values();
        self.recompute_duals();
    }

    fn recompute_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.place[j] != Place::Nonbasic || self.value[j] == 0.0 {
                continue;
            }
            let v = self.value[j];
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        self.factor.ftran(&mut rhs);
        for (slot, &j) in self.basic.iter().enumerate() {
            self.value[j] = rhs[slot];
        }
        self.moved = false;
    }

    fn recompute_duals(&mut self) {
        let mut y: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y);
        let pi = self.price(&y);
        for j in 0..self.n + self.m {
            self.d[j] = if self.place[j] == Place::Nonbasic { self.cost[j] - pi[j] } else { 0.0 };
        }
    }

    fn ensure_fresh(&mut self) {
        if self.stale {
            self.refactor();
        } else if self.moved {
            self.recompute_values();
        }
    }

    /// Moves nonbasic `q` by `delta`; `alpha` is its `ftran` column.
    fn shift(&mut self, q: usize, delta: f64, alpha: &[f64]) {
        if delta == 0.0 {
            return;
        }
        self.value[q] += delta;
        for (slot, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.value[self.basic[slot]] -= a * delta;
            }
        }
    }

    /// Basis change: `q` enters at slot `r`; `rho` and `row` are the pivot rows of
    /// `B^-1` and `B^-1 [A  -I]`, `alpha` the entering column.
    fn exchange(&mut self, r: usize, q: usize, rho: &[f64], row: &[f64], alpha: &[f64]) {
        let mut tau = rho.to_vec();
        self.factor.ftran(&mut tau);
        let wr = rho.iter().map(|v| v * v).sum::<f64>();
        let ar = alpha[r];
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a != 0.0 {
                let k = a / ar;
                let w = self.weights[i] - 2.0 * k * tau[i] + k * k * wr;
                self.weights[i] = w.max(k * k).max(1e-12);
            }
        }
        self.weights[r] = (wr / (ar * ar)).max(1e-12);
        let leaving = self.basic[r];
        let p = row[q];
        let theta = self.d[q] / p;
        if theta != 0.0 {
            for j in 0..self.n + self.m {
                if self.place[j] == Place::Nonbasic && row[j] != 0.0 {
                    self.d[j] -= theta * row[j];
                }
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta;
        self.factor.update(r, alpha);
        self.basic[r] = q;
        self.place[q] = Place::Basic(r);
        self.place[leaving] = Place::Nonbasic;
        self.iterations += 1;
        if self.factor.n_updates() >= REFACTOR_EVERY || self.factor.bloated() {
            self.refactor();
        }
    }

    /// Ratio test for nonbasic `q` moving in `dir`, where `alpha` is its `ftran`
    /// column. Returns the step and the blocking slot (None for a bound flip).
    fn primal_ratio(&self, q: usize, alpha: &[f64], dir: Direction, phase1: bool, bland: bool) -> Option<(f64, Option<usize>)> {
        let own = if self.lb[q].is_finite() && self.ub[q].is_finite() { self.ub[q] - self.lb[q] } else { f64::INFINITY };
        let mut limits: Vec<(usize, f64, f64)> = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            // Rate of change of the basic variable per unit step.
            let rate = -a * dir.sign();
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basic[i];
            let (v, l, u) = (self.value[j], self.lb[j], self.ub[j]);
            let dist = if rate > 0.0 {
                if phase1 && v < l - feas_tol(l) {
                    l - v
                } else if u.is_finite() {
                    if phase1 && v > u + feas_tol(u) {
                        continue;
                    }
                    (u - v).max(0.0)
                } else {
                    continue;
                }
            } else if phase1 && v > u + feas_tol(u) {
                v - u
            } else if l.is_finite() {
                if phase1 && v < l - feas_tol(l) {
                    continue;
                }
                (v - l).max(0.0)
            } else {
                continue;
            };
            limits.push((i, dist, rate.abs()));
        }
        if limits.is_empty() {
            return own.is_finite().then_some((own, None));
        }
        let chosen = if bland {
            let best = limits.iter().map(|&(_, d, a)| d / a).fold(f64::INFINITY, f64::min);
            limits
                .iter()
                .filter(|&&(_, d, a)| d / a <= best * (1.0 + 1e-12) + 1e-15)
                .min_by_key(|&&(i, _, _)| self.basic[i])
                .copied()
                .unwrap()
        } else {
            let theta_max = limits
                .iter()
                .map(|&(i, d, a)| (d + 0.5 * HARRIS_TOL * (1.0 + self.value[self.basic[i]].abs())) / a)
                .fold(f64::INFINITY, f64::min);
            limits
                .iter()
                .filter(|&&(_, d, a)| d / a <= theta_max)
                .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
                .copied()
                .unwrap()
        };
        let theta = chosen.1 / chosen.2;
        if own <= theta {
            return Some((own, None));
        }
        Some((theta, Some(chosen.0)))
    }

    /// Completes a primal step: moves the entering variable, pivots, and snaps
    /// the leaving variable onto the bound it reached.
    fn apply_primal_step(&mut self, q: usize, alpha: &[f64], dir: Direction, theta: f64, leave: Option<usize>) {
        self.shift(q, dir.sign() * theta, alpha);
        match leave {
            None => {
                self.value[q] = if dir == Direction::Up { self.ub[q] } else { self.lb[q] };
                self.iterations += 1;
            }
            Some(r) => {
                let j = self.basic[r];
                let rate = -alpha[r] * dir.sign();
                let (l, u, v) = (self.lb[j], self.ub[j], self.value[j]);
                let at = if rate > 0.0 {
                    if l.is_finite() && (v - l).abs() <= (v - u).abs() && v <= l + feas_tol(l) { l } else { u }
                } else if u.is_finite() && (v - u).abs() < (v - l).abs() && v >= u - feas_tol(u) {
                    u
                } else {
                    l
                };
                let (rho, row) = self.pivot_row(r);
                self.value[j] = at;
                self.exchange(r, q, &rho, &row, alpha);
            }
        }
    }

    fn choose_entering(&self, g: &[f64], bland: bool, tol: f64) -> Option<(usize, Direction)> {
        let mut best: Option<(usize, Direction, f64)> = None;
        for j in self.nonbasic() {
            let gj = g[j];
            let dir = if gj < -tol && self.can_move(j, Direction::Up) {
                Direction::Up
            } else if gj > tol && self.can_move(j, Direction::Down) {
                Direction::Down
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((_, _, bg)) => !bland && gj.abs() > bg,
            };
            if better {
                best = Some((j, dir, gj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Phase 1 then phase 2 primal simplex from the current basis.
    pub(crate) fn primal(&mut self) -> Result<LpStatus> {
        self.ensure_fresh();
        let start = self.iterations;
        loop {
            if let Some(status) = self.phase1(start)? {
                return Ok(status);
            }
            match self.phase2(start)? {
                Phase2::Done(status) => return Ok(status),
                Phase2::LostFeasibility => self.refactor(),
            }
        }
    }

    /// Minimizes the sum of infeasibilities; `None` once feasible.
    fn phase1(&mut self, start: usize) -> Result<Option<LpStatus>> {
        let mut degenerate = 0usize;
        let bland_after = BLAND_AFTER;
        loop {
            if self.check_time() {
                return Ok(Some(LpStatus::TimeLimit));
            }
            if self.iterations - start > self.iteration_cap() {
                return Err(Error::Solver("simplex iteration limit reached".into()));
            }
            let mut g: Vec<f64> = self
                .basic
                .iter()
                .map(|&j| match self.infeasibility(j) {
                    v if v < 0.0 => -1.0,
                    v if v > 0.0 => 1.0,
                    _ => 0.0,
                })
                .collect();
            if g.iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            self.factor.btran(&mut g);
            let mut d1 = self.price(&g);
            for v in d1.iter_mut() {
                *v = -*v;
            }
            let bland = degenerate > bland_after;
            let Some((q, dir)) = self.choose_entering(&d1, bland, 1e-11) else {
                return Ok(Some(LpStatus::Infeasible));
            };
            let alpha = self.ftran_column(q);
            let Some((theta, leave)) = self.primal_ratio(q, &alpha, dir, true, bland) else {
                return Err(Error::Solver("phase one ratio test found no breakpoint".into()));
            };
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };
            self.apply_primal_step(q, &alpha, dir, theta, leave);
        }
    }

    fn phase2(&mut self, start: usize) -> Result<Phase2> {
        let mut degenerate = 0usize;
        let bland_after = BLAND_AFTER;
        loop {
            if self.check_time() {
                return Ok(Phase2::Done(LpStatus::TimeLimit));
            }
            if self.iterations - start > self.iteration_cap() {
                return Err(Error::Solver("simplex iteration limit reached".into()));
            }
            let bland = degenerate > bland_after;
            let Some((q, dir)) = self.choose_entering(&self.d, bland, self.dual_tol) else {
                return Ok(Phase2::Done(LpStatus::Optimal));
            };
            let alpha = self.ftran_column(q);
            let Some((theta, leave)) = self.primal_ratio(q, &alpha, dir, false, bland) else {
                return Ok(Phase2::Done(LpStatus::Unbounded));
            };
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };
            self.apply_primal_step(q, &alpha, dir, theta, leave);
            if !self.primal_feasible() {
                // Numerical drift; fall back to phase 1.
                self.refactor();
                if !self.primal_feasible() {
                    return Ok(Phase2::LostFeasibility);
                }
            }
        }
    }

    /// Dual simplex from a dual feasible basis.
    pub(crate) fn dual(&mut self) -> Result<LpStatus> {
        self.ensure_fresh();
        let start = self.iterations;
        let mut degenerate = 0usize;
        let bland_after = BLAND_AFTER;
        loop {
            if self.check_time() {
                return Ok(LpStatus::TimeLimit);
            }
            if self.iterations - start > self.iteration_cap() {
                return Err(Error::Solver("dual simplex iteration limit reached".into()));
            }
            let bland = degenerate > bland_after;
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let inf = self.infeasibility(self.basic[r]);
                if inf == 0.0 {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((br, bi)) => {
                        if bland {
                            self.basic[r] < self.basic[br]
                        } else {
                            inf * inf / self.weights[r] > bi * bi / self.weights[br]
                        }
                    }
                };
                if better {
                    leave = Some((r, inf));
                }
            }
            let Some((r, inf)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let increase = inf < 0.0;
            let (rho, row) = self.pivot_row(r);
            // Basic value r changes by -row[j] per unit increase of nonbasic j.
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in self.nonbasic() {
                let a = row[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let need_up = (a < 0.0) == increase;
                let dir = if need_up { Direction::Up } else { Direction::Down };
                if !self.can_move(j, dir) {
                    continue;
                }
                cands.push((j, self.d[j].abs(), a.abs()));
            }
            if cands.is_empty() {
                return Ok(LpStatus::Infeasible);
            }
            let chosen = if bland {
                let best = cands.iter().map(|&(_, d, a)| d / a).fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, d, a)| d / a <= best * (1.0 + 1e-12) + 1e-15)
                    .min_by_key(|&&(j, _, _)| j)
                    .copied()
                    .unwrap()
            } else {
                let theta_max = cands.iter().map(|&(_, d, a)| (d + self.dual_tol) / a).fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, d, a)| d / a <= theta_max)
                    .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
                    .copied()
                    .unwrap()
            };
            let q = chosen.0;
            degenerate = if chosen.1 <= 1e-12 { degenerate + 1 } else { 0 };
            let alpha = self.ftran_column(q);
            if (alpha[r] - row[q]).abs() > 1e-7 * (1.0 + row[q].abs()) && self.factor.n_updates() > 0 {
                self.refactor();
                continue;
            }
            let j = self.basic[r];
            let target = if increase { self.lb[j] } else { self.ub[j] };
            let delta = (self.value[j] - target) / alpha[r];
            self.shift(q, delta, &alpha);
            self.value[j] = target;
            self.exchange(r, q, &rho, &row, &alpha);
            // Keep the leaving variable's reduced cost on the side its bound allows.
            if self.place[j] == Place::Nonbasic {
                self.d[j] = if increase { self.d[j].max(0.0) } else { self.d[j].min(0.0) };
            }
        }
    }

    /// Re-solves after bound changes or new rows.
    pub(crate) fn reoptimize(&mut self) -> Result<LpStatus> {
        self.ensure_fresh();
        if self.dual_feasible() {
            let mut status = self.dual()?;
            if status == LpStatus::Infeasible {
                // Confirm from a fresh factor before declaring infeasibility.
                self.refactor();
                status = if self.dual_feasible() { self.dual()? } else { self.primal()? };
            }
            match status {
                LpStatus::Infeasible => Ok(LpStatus::Infeasible),
                LpStatus::Optimal => {
                    let start = self.iterations;
                    loop {
                        match self.phase2(start)? {
                            Phase2::Done(status) => return Ok(status),
                            Phase2::LostFeasibility => {
                                if let Some(status) = self.phase1(start)? {
                                    return Ok(status);
                                }
                            }
                        }
                    }
                }
                other => Ok(other),
            }
        } else {
            self.primal()
        }
    }
}

/// Result of a linear program solve, in the model's own objective sense.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Change of the optimal objective per unit increase of each row's right-hand side.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &Model) -> Result<LpSolution> {
    model.validate()?;
    let mut tab = Tableau::new(model);
    let status = tab.primal()?;
    Ok(lp_solution(model, &tab, status))
}

pub(crate) fn lp_solution(model: &Model, tab: &Tableau, status: LpStatus) -> LpSolution {
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let x = tab.values().to_vec();
    let objective = match status {
        LpStatus::Optimal | LpStatus::TimeLimit => model.objective_value(&x),
        LpStatus::Infeasible => sign * f64::INFINITY,
        LpStatus::Unbounded => -sign * f64::INFINITY,
    };
    LpSolution {
        status,
        objective,
        x,
        row_duals: tab.row_duals().into_iter().map(|y| sign * y).collect(),
        reduced_costs: tab.reduced_costs().into_iter().map(|y| sign * y).collect(),
        iterations: tab.iterations,
    }
}
