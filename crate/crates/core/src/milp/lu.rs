//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Elimination picks pivots by Markowitz count under threshold partial
//! pivoting, so the identity-like slack part of a basis costs nothing.

const THRESHOLD: f64 = 0.01;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug, Clone)]
struct Eta {
    slot: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

/// `B = R^-1 U` where `R` is the product of the recorded row operations.
#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    m: usize,
    /// Pivot row and pivot column (basis slot) of each elimination step.
    steps: Vec<(usize, usize)>,
    /// Multipliers of each step: `row_i -= f * row_pivot`.
    lower: Vec<Vec<(usize, f64)>>,
    /// Off-diagonal entries of each pivot row, by slot.
    upper: Vec<Vec<(usize, f64)>>,
    pivots: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
    base_nnz: usize,
}

/// Outcome of a factorization that could not pivot on every slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    /// Slots left without a pivot, paired with rows left without one.
    pub(crate) replacements: Vec<(usize, usize)>,
}

impl Factor {
    /// Factors the `m x m` matrix whose column `k` is `cols[k]` given as `(row, value)`.
    pub(crate) fn new(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Factor, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (k, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                if v != 0.0 {
                    rows[i].push((k, v));
                    col_rows[k].push(i);
                }
            }
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut col_count: Vec<usize> = col_rows.iter().map(Vec::len).collect();
        // Buckets of active columns by count, lazily cleaned.
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        for k in 0..m {
            buckets[col_count[k].min(m + 1)].push(k);
        }
        let mut work = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut f = Factor { m, ..Factor::default() };
        let mut failed_cols = Vec::new();

        for _ in 0..m {
            let Some((pr, pc)) = choose_pivot(&rows, &col_rows, &col_count, &col_done, &row_done, &mut buckets)
            else {
                break;
            };
            if pr == usize::MAX {
                // Column with no usable entry.
                col_done[pc] = true;
                failed_cols.push(pc);
                continue;
            }
            let prow = std::mem::take(&mut rows[pr]);
            let pivot = prow.iter().find(|&&(c, _)| c == pc).map(|&(_, v)| v).unwrap_or(0.0);
            let others: Vec<(usize, f64)> = prow.iter().copied().filter(|&(c, _)| c != pc && !col_done[c]).collect();
            for &(c, v) in &others {
                work[c] = v;
                mark[c] = true;
            }
            let mut lower = Vec::new();
            let targets: Vec<usize> = col_rows[pc].iter().copied().filter(|&i| i != pr && !row_done[i]).collect();
            for i in targets {
                let Some(pos) = rows[i].iter().position(|&(c, _)| c == pc) else { continue };
                let a = rows[i].swap_remove(pos).1;
                let mult = a / pivot;
                lower.push((i, mult));
                let mut seen = Vec::with_capacity(others.len());
                for e in rows[i].iter_mut() {
                    if mark[e.0] {
                        e.1 -= mult * work[e.0];
                        seen.push(e.0);
                        mark[e.0] = false;
                    }
                }
                for &(c, v) in &others {
                    if mark[c] {
                        rows[i].push((c, -mult * v));
                        col_rows[c].push(i);
                        col_count[c] += 1;
                        buckets[col_count[c].min(m + 1)].push(c);
                    }
                }
                for c in seen {
                    mark[c] = true;
                }
            }
            for &(c, _) in &others {
                mark[c] = false;
                col_count[c] -= 1;
                buckets[col_count[c].min(m + 1)].push(c);
            }
            row_done[pr] = true;
            col_done[pc] = true;
            f.base_nnz += lower.len() + others.len() + 1;
            f.steps.push((pr, pc));
            f.lower.push(lower);
            f.upper.push(others.into_iter().filter(|&(_, v)| v.abs() > DROP_TOL).collect());
            f.pivots.push(pivot);
            // Drop the pivot column's rows from the other columns' active counts lazily.
        }
        if f.steps.len() == m {
            return Ok(f);
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| !row_done[i]).collect();
        failed_cols.extend((0..m).filter(|&k| !col_done[k]));
        failed_cols.sort_unstable();
        Err(Singular { replacements: failed_cols.into_iter().zip(free_rows).collect() })
    }

    pub(crate) fn n_updates(&self) -> usize {
        self.etas.len()
    }

    /// Whether the update file has grown past the factor itself.
    pub(crate) fn bloated(&self) -> bool {
        self.eta_nnz > 2 * self.base_nnz + 4 * self.m
    }

    /// Solves `B x = b` in place; `b` is indexed by row, the result by slot.
    pub(crate) fn ftran(&self, b: &mut Vec<f64>) {
        for (k, lower) in self.lower.iter().enumerate() {
            let y = b[self.steps[k].0];
            if y != 0.0 {
                for &(i, f) in lower {
                    b[i] -= f * y;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for k in (0..self.steps.len()).rev() {
            let (r, c) = self.steps[k];
            let mut v = b[r];
            for &(cc, u) in &self.upper[k] {
                v -= u * x[cc];
            }
            x[c] = v / self.pivots[k];
        }
        for e in &self.etas {
            let xr = x[e.slot] / e.pivot;
            if xr != 0.0 {
                for &(i, a) in &e.others {
                    x[i] -= a * xr;
                }
            }
            x[e.slot] = xr;
        }
        *b = x;
    }

    /// Solves `B^T y = c` in place; `c` is indexed by slot, the result by row.
    pub(crate) fn btran(&self, c: &mut Vec<f64>) {
        for e in self.etas.iter().rev() {
            let s: f64 = e.others.iter().map(|&(i, a)| a * c[i]).sum();
            c[e.slot] = (c[e.slot] - s) / e.pivot;
        }
        let mut w = vec![0.0; self.m];
        for (k, &(r, col)) in self.steps.iter().enumerate() {
            let wr = c[col] / self.pivots[k];
            w[r] = wr;
            if wr != 0.0 {
                for &(cc, u) in &self.upper[k] {
                    c[cc] -= u * wr;
                }
            }
        }
        for (k, lower) in self.lower.iter().enumerate().rev() {
            let r = self.steps[k].0;
            let s: f64 = lower.iter().map(|&(i, f)| f * w[i]).sum();
            w[r] -= s;
        }
        *c = w;
    }

    /// Records that slot `slot` now holds a column whose `ftran` image is `alpha`.
    pub(crate) fn update(&mut self, slot: usize, alpha: &[f64]) {
        let others: Vec<(usize, f64)> =
            alpha.iter().enumerate().filter(|&(i, &a)| i != slot && a.abs() > DROP_TOL).map(|(i, &a)| (i, a)).collect();
        self.eta_nnz += others.len() + 1;
        self.etas.push(Eta { slot, pivot: alpha[slot], others });
    }
}

/// Picks the next pivot: a column of smallest active count and, within it,
/// the entry of acceptable size with the smallest row count.
fn choose_pivot(
    rows: &[Vec<(usize, f64)>],
    col_rows: &[Vec<usize>],
    col_count: &[usize],
    col_done: &[bool],
    row_done: &[bool],
    buckets: &mut [Vec<usize>],
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None;
    let mut searched = 0;
    for cnt in 0..buckets.len() {
        let mut idx = 0;
        while idx < buckets[cnt].len() {
            let c = buckets[cnt][idx];
            if col_done[c] || col_count[c].min(buckets.len() - 1) != cnt {
                buckets[cnt].swap_remove(idx);
                continue;
            }
            idx += 1;
            let entries: Vec<(usize, f64)> = col_rows[c]
                .iter()
                .filter(|&&i| !row_done[i])
                .filter_map(|&i| rows[i].iter().find(|&&(cc, _)| cc == c).map(|&(_, v)| (i, v)))
                .collect();
            let amax = entries.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if amax <= SINGULAR_TOL {
                return Some((usize::MAX, c));
            }
            for &(i, v) in &entries {
                if v.abs() >= THRESHOLD * amax {
                    let cost = (rows[i].len() - 1) * (entries.len() - 1);
                    if best.is_none_or(|(b, _, _)| cost < b) {
                        best = Some((cost, i, c));
                    }
                }
            }
            searched += 1;
            if best.is_some_and(|(b, _, _)| b == 0) || searched >= SEARCH_COLUMNS {
                return best.map(|(_, i, c)| (i, c));
            }
        }
        if best.is_some() && cnt >= 1 {
            return best.map(|(_, i, c)| (i, c));
        }
    }
    best.map(|(_, i, c)| (i, c))
}
