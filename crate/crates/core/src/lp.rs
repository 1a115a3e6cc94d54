//! Small dense linear programming solver.
//!
//! Two-phase tableau simplex with Dantzig pricing and a Bland fallback after a
//! run of degenerate pivots. Sized for the polyhedral norm problems in this
//! crate: a few hundred variables and rows at most.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration cap ({0}) reached")]
    IterationCap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    rel: Relation,
    rhs: f64,
}

/// A minimization problem `min c·x` over linear constraints. Variables are
/// nonnegative unless declared free.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    cost: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    values: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, v: Var) -> f64 {
        self.values[v.0]
    }
}

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nonneg(&mut self, cost: f64) -> Var {
        self.cost.push(cost);
        self.free.push(false);
        Var(self.cost.len() - 1)
    }

    pub fn free(&mut self, cost: f64) -> Var {
        self.cost.push(cost);
        self.free.push(true);
        Var(self.cost.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn constrain<I>(&mut self, terms: I, rel: Relation, rhs: f64)
    where
        I: IntoIterator<Item = (Var, f64)>,
    {
        let coeffs = terms
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(v, c)| (v.0, c))
            .collect();
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        // Column layout: split free vars into (+, -), then one slack per
        // inequality, then one artificial per row.
        let n_orig = self.cost.len();
        let mut col_of = Vec::with_capacity(n_orig);
        let mut n_struct = 0;
        for &f in &self.free {
            col_of.push(n_struct);
            n_struct += if f { 2 } else { 1 };
        }
        let n_slack = self.rows.iter().filter(|r| r.rel != Relation::Eq).count();
        let m = self.rows.len();
        let n_real = n_struct + n_slack;
        let width = n_real + m + 1;

        let mut t = Tableau::new(m, width);
        let mut slack = n_struct;
        for (i, row) in self.rows.iter().enumerate() {
            let r = t.row_mut(i);
            for &(v, c) in &row.coeffs {
                let col = col_of[v];
                r[col] += c;
                if self.free[v] {
                    r[col + 1] -= c;
                }
            }
            match row.rel {
                Relation::Le => {
                    r[slack] = 1.0;
                    slack += 1;
                }
                Relation::Ge => {
                    r[slack] = -1.0;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            r[width - 1] = row.rhs;
            if row.rhs < 0.0 {
                for x in r.iter_mut() {
                    *x = -*x;
                }
            }
            r[n_real + i] = 1.0;
            t.basis[i] = n_real + i;
        }

        t.orig = t.data.clone();
        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![0.0; width];
        for a in n_real..n_real + m {
            phase1[a] = 1.0;
        }
        t.set_objective(&phase1);
        t.optimize(width - 1)?;
        if t.objective_value() > FEAS_TOL * (1.0 + t.rhs_scale()) {
            return Err(LpError::Infeasible);
        }
        t.evict_artificials(n_real);

        // Phase 2 on the structural + slack columns only.
        let mut cost = vec![0.0; width];
        for (v, &c) in self.cost.iter().enumerate() {
            cost[col_of[v]] = c;
            if self.free[v] {
                cost[col_of[v] + 1] = -c;
            }
        }
        t.set_objective(&cost);
        t.optimize(n_real)?;

        let mut raw = vec![0.0; n_real];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n_real {
                raw[b] = t.rhs(i);
            }
        }
        let values: Vec<f64> = (0..n_orig)
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    raw[c] - raw[c + 1]
                } else {
                    raw[c]
                }
            })
            .collect();
        let objective = self.cost.iter().zip(&values).map(|(c, x)| c * x).sum();
        Ok(LpSolution { objective, values })
    }
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    /// Constraint rows as built, for refactoring.
    orig: Vec<f64>,
    obj: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    dropped: Vec<bool>,
}

impl Tableau {
    fn new(m: usize, width: usize) -> Self {
        Self {
            m,
            width,
            data: vec![0.0; m * width],
            orig: Vec::new(),
            obj: vec![0.0; width],
            cost: vec![0.0; width],
            basis: vec![0; m],
            dropped: vec![false; m],
        }
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn rhs_scale(&self) -> f64 {
        (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max)
    }

    /// Reduced-cost row for `cost`, with the basic columns priced out.
    fn set_objective(&mut self, cost: &[f64]) {
        self.cost.copy_from_slice(cost);
        self.obj.copy_from_slice(cost);
        self.obj[self.width - 1] = 0.0;
        for i in 0..self.m {
            if self.dropped[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width {
                    self.obj[j] -= cb * self.data[i * self.width + j];
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * prow[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations over entering columns `0..limit`.
    fn optimize(&mut self, limit: usize) -> Result<(), LpError> {
        let cap = 50 * (self.m + self.width) + 1000;
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        for _ in 0..cap {
            let bland = degenerate_run > 2 * self.m + 10;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..limit {
                let d = self.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if self.dropped[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            let better = ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12
                                    && (if bland {
                                        self.basis[i] < self.basis[li]
                                    } else {
                                        a > self.at(li, c)
                                    }));
                            if better {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                if since_refactor > 0 && self.refactor() {
                    since_refactor = 0;
                    continue;
                }
                return Err(LpError::Unbounded);
            };
            since_refactor += 1;
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Err(LpError::IterationCap(cap))
    }

    /// Recomputes the tableau as `B⁻¹·orig` for the current basis `B`,
    /// discarding accumulated rounding. False when `B` is numerically singular.
    fn refactor(&mut self) -> bool {
        let (m, w) = (self.m, self.width);
        let b = DMatrix::from_fn(m, m, |i, j| self.orig[i * w + self.basis[j]]);
        let a = DMatrix::from_fn(m, w, |i, j| self.orig[i * w + j]);
        let Some(x) = b.lu().solve(&a) else { return false };
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..w {
                self.data[i * w + j] = x[(i, j)];
            }
        }
        let cost = self.cost.clone();
        self.set_objective(&cost);
        true
    }

    /// After phase 1, pivots zero-level artificials out of the basis; rows
    /// where that is impossible are redundant and get dropped.
    fn evict_artificials(&mut self, n_real: usize) {
        for i in 0..self.m {
            if self.basis[i] < n_real || self.dropped[i] {
                continue;
            }
            let col = (0..n_real)
                .filter(|&j| self.at(i, j).abs() > 1e-8)
                .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
            match col {
                Some(j) => self.pivot(i, j),
                None => self.dropped[i] = true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  => 36 at (2, 6)
        let mut lp = LinearProgram::new();
        let x = lp.nonneg(-3.0);
        let y = lp.nonneg(-5.0);
        lp.constrain([(x, 1.0)], Relation::Le, 4.0);
        lp.constrain([(y, 2.0)], Relation::Le, 12.0);
        lp.constrain([(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.value(x) - 2.0).abs() < 1e-9);
        assert!((s.value(y) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min |z| written as t >= z, t >= -z with z = -2.5 fixed
        let mut lp = LinearProgram::new();
        let z = lp.free(0.0);
        let t = lp.nonneg(1.0);
        lp.constrain([(z, 1.0)], Relation::Eq, -2.5);
        lp.constrain([(t, 1.0), (z, -1.0)], Relation::Ge, 0.0);
        lp.constrain([(t, 1.0), (z, 1.0)], Relation::Ge, 0.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.5).abs() < 1e-12);
        assert!((s.value(z) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.nonneg(1.0);
        lp.constrain([(x, 1.0)], Relation::Le, 1.0);
        lp.constrain([(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.free(1.0);
        lp.constrain([(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new();
        let x = lp.nonneg(1.0);
        let y = lp.nonneg(2.0);
        lp.constrain([(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.constrain([(x, 2.0), (y, 2.0)], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex() {
        // Klee-Minty-like degenerate start; just needs to terminate correctly.
        let mut lp = LinearProgram::new();
        let v: Vec<Var> = (0..4).map(|_| lp.nonneg(-1.0)).collect();
        for i in 0..4 {
            lp.constrain([(v[i], 1.0), (v[(i + 1) % 4], 1.0)], Relation::Le, 0.0);
        }
        lp.constrain(v.iter().map(|&x| (x, 1.0)), Relation::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!(s.objective.abs() < 1e-12);
    }
}
