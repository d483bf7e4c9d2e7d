//! Dense bounded-variable primal simplex and the grid linear program over a
//! convex function interval.
//!
//! Rows become equalities through one slack per row whose bounds encode the
//! sense. Artificial columns are only added for rows violated at the starting
//! point (every structural at a finite bound, free ones at zero), so problems
//! that start feasible skip phase one entirely. Pricing is Dantzig's rule
//! until a run of degenerate pivots, then Bland's rule until progress resumes.
//! The final basis is re-solved with an LU factorization before the
//! feasibility check.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;
use crate::measure::SignedMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `max c·x` subject to `rows[i]·x (sense) rhs[i]` and `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub const FEAS_TOL: f64 = 1e-8;
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Add a row given as sparse `(column, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut row = vec![0.0; self.n_vars()];
        for &(j, a) in entries {
            row[j] += a;
        }
        self.add_row(row, sense, rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(Error::Invalid("bounds length differs from variable count".into()));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::Invalid("row, sense and rhs counts differ".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Invalid(format!("row {i} has {} entries, expected {n}", r.len())));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Invalid(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        let finite = self.objective.iter().chain(&self.rhs).chain(self.rows.iter().flatten());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite problem data".into()));
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, r) in self.rows.iter().enumerate() {
            let ax: f64 = r.iter().zip(x).map(|(a, v)| a * v).sum();
            let scale = 1.0 + self.rhs[i].abs();
            let v = match self.senses[i] {
                Sense::Le => ax - self.rhs[i],
                Sense::Ge => self.rhs[i] - ax,
                Sense::Eq => (ax - self.rhs[i]).abs(),
            };
            worst = worst.max(v / scale);
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - x[j]).max(x[j] - hi);
        }
        worst
    }

    /// Text dump with `OBJ`, `ROW` and `BND` sections.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OBJ MAX");
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(s, "  x{j:<6} {c:>24.17e}");
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let sense = match self.senses[i] {
                Sense::Le => "LE",
                Sense::Ge => "GE",
                Sense::Eq => "EQ",
            };
            let _ = writeln!(s, "ROW r{i:<6} {sense} {:>24.17e}", self.rhs[i]);
            for (j, a) in r.iter().enumerate() {
                if *a != 0.0 {
                    let _ = writeln!(s, "  x{j:<6} {a:>24.17e}");
                }
            }
        }
        let _ = writeln!(s, "BND");
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            let _ = writeln!(s, "  x{j:<6} {lo:>24.17e} {hi:>24.17e}");
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols` matrix `B^-1 A`.
    t: Vec<f64>,
    /// Values of the basic variables.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Nonbasic values.
    x: Vec<f64>,
    /// Original columns (for refinement), row-major `m x ncols`.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Tableau {
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.ncols + j]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.t[r * n + j];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for chunk in before.chunks_mut(n).chain(after.chunks_mut(n)) {
            let f = chunk[j];
            if f != 0.0 {
                for (c, &pv) in chunk.iter_mut().zip(prow.iter()) {
                    *c -= f * pv;
                }
                chunk[j] = 0.0;
            }
        }
        prow[j] = 1.0;
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &tv) in d.iter_mut().zip(row) {
                    *dj -= cb * tv;
                }
            }
        }
        for &bj in &self.basis {
            d[bj] = 0.0;
        }
        d
    }

    /// Recompute basic values `B^-1 (b - N x_N)` from the original data.
    fn refine(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[i * self.ncols + self.basis[k]]);
        let mut rhs = DVector::from_column_slice(&self.b);
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            for i in 0..m {
                rhs[i] -= self.a[i * self.ncols + j] * self.x[j];
            }
        }
        match bmat.lu().solve(&rhs) {
            Some(sol) => {
                for (r, v) in sol.iter().enumerate() {
                    self.xb[r] = *v;
                }
                true
            }
            None => false,
        }
    }

    /// Rebuild `B^-1 A` from the original matrix.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[i * self.ncols + self.basis[k]]);
        let lu = bmat.lu();
        let amat = DMatrix::from_row_slice(m, self.ncols, &self.a);
        match lu.solve(&amat) {
            Some(t) => {
                for r in 0..m {
                    for j in 0..self.ncols {
                        self.t[r * self.ncols + j] = t[(r, j)];
                    }
                }
                self.refine()
            }
            None => false,
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.xb[r],
            _ => self.x[j],
        }
    }

    /// Primal simplex on objective `c`; returns the outcome and pivots used.
    fn optimize(&mut self, c: &[f64], max_iter: usize, iters: &mut usize) -> LpStatus {
        let mut degenerate = 0usize;
        let mut refreshed = 0usize;
        loop {
            if *iters >= max_iter {
                return LpStatus::IterationLimit;
            }
            let d = self.reduced_costs(c);
            let bland = degenerate >= DEGENERATE_STREAK;
            // entering variable and direction (+1 increase, -1 decrease)
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                let dir = match self.state[j] {
                    VarState::Basic(_) => continue,
                    VarState::AtLower if d[j] > OPT_TOL && self.hi[j] > self.lo[j] => 1.0,
                    VarState::AtUpper if d[j] < -OPT_TOL && self.hi[j] > self.lo[j] => -1.0,
                    VarState::FreeZero if d[j].abs() > OPT_TOL => d[j].signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                // confirm against duals from a fresh factorization, and rebuild
                // the tableau when drift has hidden an improving column
                if refreshed < 2 && *iters > 0 && self.has_improving_column(c) {
                    refreshed += 1;
                    if self.reinvert() {
                        continue;
                    }
                }
                return LpStatus::Optimal;
            };
            // ratio test
            let mut theta = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, bool)> = None; // (row, goes to upper)
            let mut leave_pivot = 0.0;
            for r in 0..self.m {
                let alpha = self.at(r, j) * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let bj = self.basis[r];
                let (limit, to_upper) = if alpha > 0.0 {
                    if !self.lo[bj].is_finite() {
                        continue;
                    }
                    (((self.xb[r] - self.lo[bj]) / alpha).max(0.0), false)
                } else {
                    if !self.hi[bj].is_finite() {
                        continue;
                    }
                    (((self.hi[bj] - self.xb[r]) / -alpha).max(0.0), true)
                };
                let take = if limit < theta - 1e-12 {
                    true
                } else if limit <= theta + 1e-12 {
                    match leave {
                        Some((lr, _)) if bland => self.basis[lr] > bj,
                        Some(_) => alpha.abs() > leave_pivot,
                        None => false,
                    }
                } else {
                    false
                };
                if take {
                    theta = theta.min(limit);
                    leave = Some((r, to_upper));
                    leave_pivot = alpha.abs();
                }
            }
            if theta.is_infinite() {
                return LpStatus::Unbounded;
            }
            *iters += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            // move
            for r in 0..self.m {
                let a = self.at(r, j);
                if a != 0.0 {
                    self.xb[r] -= dir * theta * a;
                }
            }
            let entering_value = self.x[j] + dir * theta;
            match leave {
                None => {
                    // bound flip
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                    self.state[j] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.x[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                    self.state[out] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic(r);
                    self.xb[r] = entering_value;
                    self.x[j] = 0.0;
                }
            }
        }
    }

    /// Reduced costs from duals `B^-T c_B` solved against the original data.
    fn has_improving_column(&self, c: &[f64]) -> bool {
        let m = self.m;
        if m == 0 {
            return false;
        }
        let bt = DMatrix::from_fn(m, m, |k, i| self.a[i * self.ncols + self.basis[k]]);
        let cb = DVector::from_iterator(m, self.basis.iter().map(|&j| c[j]));
        let Some(y) = bt.lu().solve(&cb) else {
            return false;
        };
        (0..self.ncols).any(|j| {
            let mut d = c[j];
            for i in 0..m {
                d -= y[i] * self.a[i * self.ncols + j];
            }
            match self.state[j] {
                VarState::AtLower => d > OPT_TOL && self.hi[j] > self.lo[j],
                VarState::AtUpper => d < -OPT_TOL && self.hi[j] > self.lo[j],
                VarState::FreeZero => d.abs() > OPT_TOL,
                VarState::Basic(_) => false,
            }
        })
    }
}

/// Solve with the default iteration cap `100 (rows + cols)`.
pub fn simplex_solve(p: &LpProblem) -> Result<LpSolution> {
    simplex_solve_capped(p, 100 * (p.rows.len() + p.n_vars()).max(1))
}

pub fn simplex_solve_capped(p: &LpProblem, max_iter: usize) -> Result<LpSolution> {
    p.validate()?;
    let n = p.n_vars();
    let m = p.rows.len();

    // starting nonbasic point
    let mut x0 = vec![0.0; n];
    let mut state0 = Vec::with_capacity(n);
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        if lo.is_finite() {
            x0[j] = lo;
            state0.push(VarState::AtLower);
        } else if hi.is_finite() {
            x0[j] = hi;
            state0.push(VarState::AtUpper);
        } else {
            state0.push(VarState::FreeZero);
        }
    }

    // which rows need an artificial column
    let mut residual = vec![0.0; m];
    let mut needs_art = Vec::new();
    for i in 0..m {
        let ax: f64 = p.rows[i].iter().zip(&x0).map(|(a, v)| a * v).sum();
        let s = p.rhs[i] - ax; // slack value that would satisfy the row
        residual[i] = s;
        let ok = match p.senses[i] {
            Sense::Le => s >= 0.0,
            Sense::Ge => s <= 0.0,
            Sense::Eq => s == 0.0,
        };
        if !ok {
            needs_art.push(i);
        }
    }
    let n_art = needs_art.len();
    let ncols = n + m + n_art;

    let mut a = vec![0.0; m * ncols];
    for i in 0..m {
        a[i * ncols..i * ncols + n].copy_from_slice(&p.rows[i]);
        a[i * ncols + n + i] = 1.0;
    }
    let mut lo = Vec::with_capacity(ncols);
    let mut hi = Vec::with_capacity(ncols);
    for &(l, h) in &p.bounds {
        lo.push(l);
        hi.push(h);
    }
    for i in 0..m {
        let (l, h) = match p.senses[i] {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(h);
    }
    lo.extend(std::iter::repeat(0.0).take(n_art));
    hi.extend(std::iter::repeat(f64::INFINITY).take(n_art));

    let mut state = state0;
    let mut x = x0;
    x.extend(std::iter::repeat(0.0).take(m + n_art));
    state.extend(std::iter::repeat(VarState::AtLower).take(m + n_art));

    let mut basis = vec![0usize; m];
    let mut xb = vec![0.0; m];
    let mut art_of_row = vec![None; m];
    for (k, &i) in needs_art.iter().enumerate() {
        art_of_row[i] = Some(n + m + k);
    }
    for i in 0..m {
        match art_of_row[i] {
            None => {
                basis[i] = n + i;
                xb[i] = residual[i];
                state[n + i] = VarState::Basic(i);
            }
            Some(col) => {
                // park the slack at the bound nearest to the residual
                let s = residual[i].clamp(lo[n + i], hi[n + i]);
                x[n + i] = s;
                state[n + i] = if s == lo[n + i] { VarState::AtLower } else { VarState::AtUpper };
                let rest = residual[i] - s;
                let sign = if rest >= 0.0 { 1.0 } else { -1.0 };
                a[i * ncols + col] = sign;
                basis[i] = col;
                xb[i] = rest.abs();
                state[col] = VarState::Basic(i);
            }
        }
    }

    // B^-1 A with B = diag(1 or sign)
    let mut t = a.clone();
    for i in 0..m {
        let bcol = basis[i];
        let piv = a[i * ncols + bcol];
        if piv != 1.0 {
            for v in &mut t[i * ncols..(i + 1) * ncols] {
                *v /= piv;
            }
        }
    }

    let mut tab = Tableau { m, ncols, t, xb, basis, state, lo, hi, x, a, b: p.rhs.clone(), };
    let mut iters = 0usize;

    if n_art > 0 {
        let mut c1 = vec![0.0; ncols];
        for k in 0..n_art {
            c1[n + m + k] = -1.0;
        }
        let status = tab.optimize(&c1, max_iter, &mut iters);
        if status == LpStatus::IterationLimit {
            return Ok(finish(p, &tab, LpStatus::IterationLimit, iters));
        }
        tab.refine();
        let infeas: f64 = (0..n_art).map(|k| tab.value(n + m + k).abs()).sum();
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if infeas > FEAS_TOL * scale {
            return Ok(finish(p, &tab, LpStatus::Infeasible, iters));
        }
        // artificials may stay basic at zero but can never move again
        for k in 0..n_art {
            let col = n + m + k;
            tab.hi[col] = 0.0;
            if !matches!(tab.state[col], VarState::Basic(_)) {
                tab.x[col] = 0.0;
                tab.state[col] = VarState::AtLower;
            }
        }
    }

    let mut c2 = vec![0.0; ncols];
    c2[..n].copy_from_slice(&p.objective);
    let status = tab.optimize(&c2, max_iter, &mut iters);
    tab.refine();
    Ok(finish(p, &tab, status, iters))
}

fn finish(p: &LpProblem, tab: &Tableau, status: LpStatus, iterations: usize) -> LpSolution {
    let n = p.n_vars();
    let mut values: Vec<f64> = (0..n).map(|j| tab.value(j)).collect();
    for (v, &(lo, hi)) in values.iter_mut().zip(&p.bounds) {
        *v = v.clamp(lo, hi);
    }
    let objective = values.iter().zip(&p.objective).map(|(v, c)| v * c).sum();
    let status = if status == LpStatus::Optimal && p.max_violation(&values) > FEAS_TOL {
        LpStatus::Infeasible
    } else {
        status
    };
    LpSolution { status, values, objective, iterations }
}

/// The grid program `max Σ w_i u_i` over the interval: one variable per node
/// with level bounds, convexity rows at interior nodes and two slope rows per
/// cell.
pub fn cfi_problem(c: &Cfi, mu: &SignedMeasure) -> Result<LpProblem> {
    let grid = *c.grid();
    grid.ensure_same(mu.grid())?;
    let n = grid.n_nodes();
    let h = grid.h();
    let mut p = LpProblem::new(n);
    p.objective = mu.node_weights();
    for i in 0..n {
        let (lo, hi) = (c.lower().value(i), c.upper().value(i));
        // boundaries that touch can cross by rounding
        p.bounds[i] = (lo.min(hi), hi.max(lo));
    }
    for i in 1..grid.last() {
        p.add_sparse_row(&[(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)], Sense::Ge, 0.0);
    }
    let s = c.slopes();
    for j in 0..grid.n_cells() {
        p.add_sparse_row(&[(j + 1, 1.0), (j, -1.0)], Sense::Ge, s.s_lo * h);
        p.add_sparse_row(&[(j + 1, 1.0), (j, -1.0)], Sense::Le, s.s_hi * h);
    }
    Ok(p)
}

/// Solve the grid program; returns the maximizer and its objective.
pub fn cfi_lp(c: &Cfi, mu: &SignedMeasure) -> Result<(GridFunction, f64)> {
    let p = cfi_problem(c, mu)?;
    let sol = simplex_solve(&p)?;
    match sol.status {
        LpStatus::Optimal => {
            let u = GridFunction::new(*c.grid(), sol.values)?;
            let obj = mu.integrate(&u)?;
            Ok((u, obj))
        }
        LpStatus::Infeasible => Err(Error::Solver("interval program reported infeasible".into())),
        LpStatus::Unbounded => Err(Error::Solver("interval program reported unbounded".into())),
        LpStatus::IterationLimit => Err(Error::Solver(format!(
            "iteration cap reached after {} pivots",
            sol.iterations
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_row(vec![1.0], Sense::Le, 1.0);
        let s = simplex_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_corner() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.add_row(vec![1.0, 1.0], Sense::Le, 1.0);
        let s = simplex_solve(&p).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_row(vec![1.0], Sense::Ge, 2.0);
        p.bounds[0] = (0.0, 1.0);
        assert_eq!(simplex_solve(&p).unwrap().status, LpStatus::Infeasible);
        let mut q = LpProblem::new(1);
        q.objective = vec![1.0];
        assert_eq!(simplex_solve(&q).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max -|x - 3| written as max -t with t >= x - 3, t >= 3 - x, x free
        let mut p = LpProblem::new(2);
        p.objective = vec![0.0, -1.0];
        p.bounds[0] = (f64::NEG_INFINITY, f64::INFINITY);
        p.add_row(vec![-1.0, 1.0], Sense::Ge, -3.0);
        p.add_row(vec![1.0, 1.0], Sense::Ge, 3.0);
        let s = simplex_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-9 && s.objective.abs() < 1e-9);
        let mut e = LpProblem::new(2);
        e.objective = vec![1.0, 2.0];
        e.add_row(vec![1.0, 1.0], Sense::Eq, 1.0);
        let s = simplex_solve(&e).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, 1.0, 1.0];
        for j in 0..3 {
            let mut r = vec![0.0; 3];
            r[j] = 1.0;
            p.add_row(r, Sense::Le, 1.0);
        }
        p.add_row(vec![1.0, 1.0, 1.0], Sense::Ge, 0.5);
        let s = simplex_solve_capped(&p, 1).unwrap();
        assert_eq!(s.status, LpStatus::IterationLimit);
    }

    #[test]
    fn dump_has_sections() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 0.0];
        p.add_row(vec![1.0, 1.0], Sense::Le, 1.0);
        let d = p.dump();
        assert!(d.contains("OBJ") && d.contains("ROW r0") && d.contains("BND"));
    }
}
