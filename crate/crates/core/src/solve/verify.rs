//! Optimality certificate for a candidate maximizer.
//!
//! The domain is decomposed into cells: singletons at pinned nodes and node
//! spans on which the candidate `u*` is affine. For any member `u`, the
//! difference `φ = u - u*` is nonnegative where `u*` sits on the lower
//! boundary, nonpositive where it sits on the upper boundary, and convex on
//! each affine span (also monotone when the span touches a domain end at an
//! extreme slope). If the node weights of `μ` can be apportioned to the cells
//! so that every cell's share integrates every such `φ` to at most zero, then
//! `∫ u dμ ≤ ∫ u* dμ` for all members.
//!
//! Atoms on nodes shared by several cells are split by a small linear program
//! that maximizes the worst condition margin. Each span condition is a convex
//! order comparison with a nonnegative measure carried by the span's upper
//! contact nodes (zero when there are none), which covers the tangential
//! cells; spans touching a domain end at the extreme slope use the increasing
//! or decreasing convex order instead.

use std::fmt;

use crate::cfi::{detect_structure, Cfi, SaturationKind};
use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;
use crate::lp::{simplex_solve, LpProblem, LpStatus, Sense};
use crate::measure::{leq_cx_tol, leq_dcx_tol, leq_icx_tol, SignedMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Y0,
    Y1,
    Y2,
    Y3,
    Y4,
    Y5,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CellKind::Y0 => "Y0",
            CellKind::Y1 => "Y1",
            CellKind::Y2 => "Y2",
            CellKind::Y3 => "Y3",
            CellKind::Y4 => "Y4",
            CellKind::Y5 => "Y5",
        };
        f.write_str(s)
    }
}

/// A cell: either a run of singleton nodes sharing a kind (`points`), or a
/// closed node span on which `u*` is affine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: usize,
    pub hi: usize,
    pub kind: CellKind,
    pub anchor: Option<usize>,
    pub points: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub cells: Vec<Cell>,
}

impl Partition {
    /// Every node lies in some cell.
    pub fn covers(&self, n_nodes: usize) -> bool {
        let mut seen = vec![false; n_nodes];
        for c in &self.cells {
            for s in seen.iter_mut().take(c.hi + 1).skip(c.lo) {
                *s = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn spans(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell: Cell,
    pub condition: &'static str,
    pub pass: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub overall: bool,
    pub per_cell: Vec<CellReport>,
    pub tol: f64,
    /// Grid coordinates used when printing cells.
    pub nodes: Vec<f64>,
}

impl VerificationReport {
    pub fn min_slack(&self) -> f64 {
        self.per_cell.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.per_cell {
            writeln!(
                f,
                "[{}] [{:.6},{:.6}] condition={} pass={} slack={:.6e}",
                r.cell.kind, self.nodes[r.cell.lo], self.nodes[r.cell.hi], r.condition, r.pass, r.slack
            )?;
        }
        Ok(())
    }
}

fn pinned_flags(c: &Cfi, u: &GridFunction) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    let lt = c.level_tol();
    let n = c.grid().n_nodes();
    let same: Vec<bool> = (0..n).map(|i| c.upper().value(i) - c.lower().value(i) <= lt).collect();
    let up: Vec<bool> = (0..n).map(|i| !same[i] && c.upper().value(i) - u.value(i) <= lt).collect();
    let lo: Vec<bool> = (0..n).map(|i| !same[i] && !up[i] && u.value(i) - c.lower().value(i) <= lt).collect();
    (same, up, lo)
}

/// Singleton runs for pinned nodes.
pub(crate) fn point_cells(c: &Cfi, u: &GridFunction) -> Vec<Cell> {
    let (same, up, lo) = pinned_flags(c, u);
    let kind_of = |i: usize| {
        if same[i] {
            Some(CellKind::Y0)
        } else if up[i] {
            Some(CellKind::Y1)
        } else if lo[i] {
            Some(CellKind::Y2)
        } else {
            None
        }
    };
    let mut cells: Vec<Cell> = Vec::new();
    for i in 0..same.len() {
        if let Some(k) = kind_of(i) {
            match cells.last_mut() {
                Some(last) if last.kind == k && last.hi + 1 == i => last.hi = i,
                _ => cells.push(Cell { lo: i, hi: i, kind: k, anchor: None, points: true }),
            }
        }
    }
    cells
}

fn is_affine_on(c: &Cfi, u: &GridFunction, lo: usize, hi: usize) -> bool {
    let kt = c.kink_tol();
    (lo + 1..hi).all(|i| u.second_diff(i).abs() <= kt)
}

/// Partition read off the extreme structure: singletons at pinned nodes,
/// tangential pieces widened over their contact cell and merged when
/// collinear (Y1), slope pieces (Y3/Y4) and chordal or boundary pieces (Y5).
pub fn build_partition(c: &Cfi, u_star: &GridFunction) -> Result<Partition> {
    let s = detect_structure(c, u_star)
        .map_err(|e| Error::Precondition(format!("candidate is not extreme: {e}")))?;
    let n = c.grid().last();
    let mut spans: Vec<Cell> = Vec::new();
    for p in &s.intervals {
        let (mut lo, mut hi) = (p.a, p.b);
        let kind = match p.label.kind {
            SaturationKind::Tangential => {
                let y = p.label.anchor.expect("tangential pieces carry an anchor");
                if y == hi && hi < n && is_affine_on(c, u_star, lo, hi + 1) {
                    hi += 1;
                } else if y == lo && lo > 0 && is_affine_on(c, u_star, lo - 1, hi) {
                    lo -= 1;
                }
                CellKind::Y1
            }
            SaturationKind::SlopeHigh => CellKind::Y3,
            SaturationKind::SlopeLow => CellKind::Y4,
            SaturationKind::Chordal | SaturationKind::Boundary => CellKind::Y5,
        };
        let cell = Cell { lo, hi, kind, anchor: p.label.anchor, points: false };
        match spans.last_mut() {
            Some(last)
                if last.kind == CellKind::Y1
                    && kind == CellKind::Y1
                    && cell.lo <= last.hi
                    && is_affine_on(c, u_star, last.lo, cell.hi) =>
            {
                last.hi = last.hi.max(cell.hi);
            }
            _ => spans.push(cell),
        }
    }
    let mut cells = point_cells(c, u_star);
    cells.extend(spans);
    cells.sort_by_key(|c| (c.lo, c.hi));
    Ok(Partition { cells })
}

/// Singletons plus every maximal span on which `u*` is affine.
pub fn segment_partition(c: &Cfi, u_star: &GridFunction) -> Result<Partition> {
    c.ensure_member(u_star)?;
    let n = c.grid().last();
    let kt = c.kink_tol();
    let mut cuts = vec![0];
    cuts.extend((1..n).filter(|&i| u_star.second_diff(i).abs() > kt));
    cuts.push(n);
    let (_, up, _) = pinned_flags(c, u_star);
    let mut cells = point_cells(c, u_star);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (slope_lo, slope_hi) = end_slopes(c, u_star, lo, hi);
        let contacts: Vec<usize> = (lo..=hi).filter(|&i| up[i]).collect();
        let kind = if slope_hi {
            CellKind::Y3
        } else if slope_lo {
            CellKind::Y4
        } else if !contacts.is_empty() {
            CellKind::Y1
        } else {
            CellKind::Y5
        };
        let anchor = if kind == CellKind::Y1 { contacts.first().copied() } else { None };
        cells.push(Cell { lo, hi, kind, anchor, points: false });
    }
    cells.sort_by_key(|c| (c.lo, c.hi));
    Ok(Partition { cells })
}

/// Whether a span touches the left end at the lowest slope, or the right end
/// at the highest slope.
fn end_slopes(c: &Cfi, u: &GridFunction, lo: usize, hi: usize) -> (bool, bool) {
    let g = c.grid();
    let s = (u.value(hi) - u.value(lo)) / (g.node(hi) - g.node(lo));
    let st = c.slope_tol();
    let sl = c.slopes();
    (lo == 0 && (s - sl.s_lo).abs() <= st, hi == g.last() && (s - sl.s_hi).abs() <= st)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Cx,
    Icx,
    Dcx,
}

/// Affine expression `c0 + Σ coef·v[j]` in the apportioning variables.
#[derive(Debug, Clone, Default)]
struct Expr {
    c0: f64,
    terms: Vec<(usize, f64)>,
}

impl Expr {
    fn constant(c0: f64) -> Self {
        Expr { c0, terms: Vec::new() }
    }

    fn add_scaled(&mut self, other: &Expr, k: f64) {
        self.c0 += k * other.c0;
        for &(j, a) in &other.terms {
            self.terms.push((j, k * a));
        }
    }

    fn scaled(&self, k: f64) -> Expr {
        let mut e = Expr::default();
        e.add_scaled(self, k);
        e
    }

    fn eval(&self, v: &[f64]) -> f64 {
        self.c0 + self.terms.iter().map(|&(j, a)| a * v[j]).sum::<f64>()
    }

    fn compact(mut self) -> Expr {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (j, a) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Expr { c0: self.c0, terms: out }
    }
}

struct SpanModel {
    cell_index: usize,
    lo: usize,
    hi: usize,
    order: Order,
    /// Share of each node's weight, indexed from `lo`.
    share: Vec<Expr>,
    /// `(node, variable)` for the contact weights.
    contacts: Vec<(usize, usize)>,
}

impl SpanModel {
    fn set_share(&mut self, node: usize, e: Expr) {
        self.share[node - self.lo] = e;
    }
}

/// Check the cell conditions for `u*` on a given partition.
pub fn verify_with_partition(
    c: &Cfi,
    u_star: &GridFunction,
    mu: &SignedMeasure,
    partition: &Partition,
) -> Result<VerificationReport> {
    c.ensure_member(u_star)?;
    c.grid().ensure_same(mu.grid())?;
    let g = *c.grid();
    let nn = g.n_nodes();
    let xs = g.nodes();
    let w = mu.node_weights();
    let tol = c.tolerances().order * (1.0 + mu.total_variation());

    if !partition.covers(nn) {
        return Err(Error::Precondition("partition does not cover every node".into()));
    }

    let mut single: Vec<Option<(usize, CellKind)>> = vec![None; nn];
    for (ci, cell) in partition.cells.iter().enumerate().filter(|(_, c)| c.points) {
        for s in single.iter_mut().take(cell.hi + 1).skip(cell.lo) {
            *s = Some((ci, cell.kind));
        }
    }
    let (_, up, _) = pinned_flags(c, u_star);
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); nn];
    let mut spans: Vec<SpanModel> = Vec::new();
    for (ci, cell) in partition.cells.iter().enumerate().filter(|(_, c)| !c.points) {
        let (left, right) = end_slopes(c, u_star, cell.lo, cell.hi);
        let order = if right {
            Order::Dcx
        } else if left {
            Order::Icx
        } else {
            Order::Cx
        };
        for h in holders.iter_mut().take(cell.hi + 1).skip(cell.lo) {
            h.push(spans.len());
        }
        spans.push(SpanModel {
            cell_index: ci,
            lo: cell.lo,
            hi: cell.hi,
            order,
            share: vec![Expr::default(); cell.hi - cell.lo + 1],
            contacts: Vec::new(),
        });
    }

    // apportion node weights
    let mut n_vars = 0usize;
    let mut remainders: Vec<(usize, CellKind, Expr)> = Vec::new();
    for i in 0..nn {
        let hs = &holders[i];
        if hs.is_empty() {
            if let Some((ci, k)) = single[i] {
                remainders.push((ci, k, Expr::constant(w[i])));
            }
            continue;
        }
        match single[i] {
            Some((ci, k)) => {
                let mut rem = Expr::constant(w[i]);
                for &s in hs {
                    let v = n_vars;
                    n_vars += 1;
                    spans[s].set_share(i, Expr { c0: 0.0, terms: vec![(v, 1.0)] });
                    rem.terms.push((v, -1.0));
                }
                remainders.push((ci, k, rem));
            }
            None => {
                let mut rest = Expr::constant(w[i]);
                for (k, &s) in hs.iter().enumerate() {
                    if k + 1 == hs.len() {
                        spans[s].set_share(i, rest.clone());
                    } else {
                        let v = n_vars;
                        n_vars += 1;
                        spans[s].set_share(i, Expr { c0: 0.0, terms: vec![(v, 1.0)] });
                        rest.terms.push((v, -1.0));
                    }
                }
            }
        }
    }
    let n_free = n_vars;
    for s in spans.iter_mut() {
        for i in s.lo..=s.hi {
            if up[i] {
                s.contacts.push((i, n_vars));
                n_vars += 1;
            }
        }
    }

    // conditions: expression ≥ z, grouped by cell
    let mut conds: Vec<(usize, Expr)> = Vec::new();
    for (ci, k, rem) in &remainders {
        match k {
            CellKind::Y1 => conds.push((*ci, rem.clone())),
            CellKind::Y2 => conds.push((*ci, rem.scaled(-1.0))),
            _ => {}
        }
    }
    for s in &spans {
        // d = ν - μ_s, node by node
        let mut d: Vec<Expr> = s.share.iter().map(|e| e.scaled(-1.0)).collect();
        for &(node, v) in &s.contacts {
            d[node - s.lo].terms.push((v, 1.0));
        }
        let mut mass = Expr::default();
        for e in &d {
            mass.add_scaled(e, 1.0);
        }
        conds.push((s.cell_index, mass.clone()));
        conds.push((s.cell_index, mass.scaled(-1.0)));
        let x0 = xs[s.lo];
        if s.order == Order::Cx {
            let mut mom = Expr::default();
            for (k, e) in d.iter().enumerate() {
                mom.add_scaled(e, xs[s.lo + k] - x0);
            }
            conds.push((s.cell_index, mom.clone()));
            conds.push((s.cell_index, mom.scaled(-1.0)));
        }
        for t in s.lo..=s.hi {
            let mut sl = Expr::default();
            for (k, e) in d.iter().enumerate() {
                let x = xs[s.lo + k];
                let wt = match s.order {
                    Order::Cx | Order::Icx => (x - xs[t]).max(0.0),
                    Order::Dcx => (xs[t] - x).max(0.0),
                };
                if wt > 0.0 {
                    sl.add_scaled(e, wt);
                }
            }
            conds.push((s.cell_index, sl));
        }
    }
    let conds: Vec<(usize, Expr)> = conds.into_iter().map(|(c, e)| (c, e.compact())).collect();

    // maximize the worst margin z
    let mut z_hi: f64 = 0.0;
    for (_, e) in &conds {
        if e.terms.is_empty() {
            z_hi = z_hi.min(e.c0);
        }
    }
    let values = if n_vars == 0 {
        Vec::new()
    } else {
        let zi = n_vars;
        let mut p = LpProblem::new(n_vars + 1);
        for j in 0..n_free {
            p.bounds[j] = (f64::NEG_INFINITY, f64::INFINITY);
        }
        p.bounds[zi] = (f64::NEG_INFINITY, z_hi);
        p.objective[zi] = 1.0;
        for (_, e) in conds.iter().filter(|(_, e)| !e.terms.is_empty()) {
            let mut entries = e.terms.clone();
            entries.push((zi, -1.0));
            p.add_sparse_row(&entries, Sense::Ge, -e.c0);
        }
        let sol = simplex_solve(&p)?;
        match sol.status {
            LpStatus::Optimal => sol.values,
            other => {
                return Err(Error::Solver(format!("apportioning program ended with {other:?}")))
            }
        }
    };

    // per-cell slack and the order predicates on the apportioned measures
    let mut slack = vec![f64::INFINITY; partition.cells.len()];
    for (ci, e) in &conds {
        slack[*ci] = slack[*ci].min(e.eval(&values));
    }
    let mut per_cell = Vec::with_capacity(partition.cells.len());
    let span_of = |ci: usize| spans.iter().find(|s| s.cell_index == ci);
    for (ci, cell) in partition.cells.iter().enumerate() {
        let (condition, pass) = if cell.points {
            match cell.kind {
                CellKind::Y0 => ("vacuous", true),
                CellKind::Y1 => ("nonnegative_mass", slack[ci] >= -tol),
                _ => ("nonpositive_mass", slack[ci] >= -tol),
            }
        } else {
            let s = span_of(ci).expect("span model exists");
            let mut share = vec![0.0; nn];
            for (k, e) in s.share.iter().enumerate() {
                share[s.lo + k] = e.eval(&values);
            }
            let mu_s = SignedMeasure::new(g, share, vec![0.0; g.n_cells()])?;
            let nu_atoms: Vec<(usize, f64)> = s.contacts.iter().map(|&(i, v)| (i, values[v])).collect();
            let nu = SignedMeasure::from_atoms(g, &nu_atoms)?;
            let with_contact = !s.contacts.is_empty();
            match s.order {
                Order::Cx if with_contact => ("leq_cx_contact", leq_cx_tol(&mu_s, &nu, tol)?),
                Order::Cx => ("leq_cx_zero", leq_cx_tol(&mu_s, &nu, tol)?),
                Order::Icx => ("leq_icx", leq_icx_tol(&mu_s, &nu, tol)?),
                Order::Dcx => ("leq_dcx", leq_dcx_tol(&mu_s, &nu, tol)?),
            }
        };
        let sl = if slack[ci].is_finite() { slack[ci] } else { 0.0 };
        per_cell.push(CellReport { cell: *cell, condition, pass, slack: sl });
    }
    let overall = per_cell.iter().all(|r| r.pass);
    Ok(VerificationReport { overall, per_cell, tol, nodes: xs })
}

/// Certify `u*` on the structure partition, falling back to the partition
/// into maximal affine spans.
pub fn verify_optimality(c: &Cfi, u_star: &GridFunction, mu: &SignedMeasure) -> Result<VerificationReport> {
    c.ensure_member(u_star)?;
    let first = match build_partition(c, u_star) {
        Ok(p) => Some(verify_with_partition(c, u_star, mu, &p)?),
        Err(_) => None,
    };
    if let Some(r) = &first {
        if r.overall {
            return Ok(first.unwrap());
        }
    }
    let second = verify_with_partition(c, u_star, mu, &segment_partition(c, u_star)?)?;
    Ok(match first {
        Some(r) if !second.overall && r.min_slack() > second.min_slack() => r,
        _ => second,
    })
}
