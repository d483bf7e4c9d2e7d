//! Concavification for affinely bounded intervals.
//!
//! With `u(lo)` fixed, `∫ u dμ` is an affine function of the slope profile of
//! `u`, and summing by parts twice turns it into `∫ 𝒲 d(u')` where `𝒲` is the
//! doubly integrated tail of the node weights. The maximizer follows the lower
//! boundary where `𝒲` touches its concave envelope, takes chords of the lower
//! boundary where `𝒲` lies strictly below it, and leaves along the steepest
//! ray once the envelope stops increasing.
//!
//! The mirrored case (upper affine with the lowest slope, boundaries meeting at
//! the right end) is solved by reflecting the domain.

use super::verify::{point_cells, Cell, CellKind, Partition};
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{GridFunction, SlopeInterval};
use crate::measure::SignedMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffineBound {
    UpperAffine,
    LowerAffine,
}

impl AffineBound {
    /// The affine-boundedness sense of `c`, if any.
    pub fn detect(c: &Cfi) -> Option<AffineBound> {
        let n = c.grid().last();
        let lt = c.level_tol();
        let meets = |i: usize| (c.upper().value(i) - c.lower().value(i)).abs() <= lt;
        let s = c.slopes();
        if c.upper_is_affine_with_slope(s.s_hi) && meets(0) {
            Some(AffineBound::UpperAffine)
        } else if c.upper_is_affine_with_slope(s.s_lo) && meets(n) {
            Some(AffineBound::LowerAffine)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavifySolution {
    pub u: GridFunction,
    pub objective: f64,
    pub partition: Partition,
    /// Node where the maximizer leaves the lower boundary along the extreme ray.
    pub cutoff: usize,
    /// Node spans on which the maximizer is a chord of the lower boundary.
    pub ironing: Vec<(usize, usize)>,
    /// Doubly integrated tail of the weights and its concave envelope.
    pub w_cal: GridFunction,
    pub w_bar: GridFunction,
}

pub fn concavify_solve(c: &Cfi, mu: &SignedMeasure, bounded: AffineBound) -> Result<ConcavifySolution> {
    c.grid().ensure_same(mu.grid())?;
    if AffineBound::detect(c) != Some(bounded) {
        return Err(Error::Precondition(format!("interval is not affinely bounded in the {bounded:?} sense")));
    }
    match bounded {
        AffineBound::UpperAffine => solve_upper(c, mu),
        AffineBound::LowerAffine => {
            let rc = reflect_cfi(c)?;
            let rs = solve_upper(&rc, &reflect_measure(mu)?)?;
            let n = c.grid().last();
            let mirror = |(a, b): (usize, usize)| (n - b, n - a);
            let u = reflect_fn(&rs.u);
            let objective = mu.integrate(&u)?;
            let mut cells: Vec<Cell> = rs
                .partition
                .cells
                .iter()
                .map(|cell| {
                    let (lo, hi) = mirror((cell.lo, cell.hi));
                    let kind = match cell.kind {
                        CellKind::Y3 => CellKind::Y4,
                        CellKind::Y4 => CellKind::Y3,
                        k => k,
                    };
                    Cell { lo, hi, kind, anchor: cell.anchor.map(|a| n - a), points: cell.points }
                })
                .collect();
            cells.sort_by_key(|c| (c.lo, c.hi));
            let mut ironing: Vec<(usize, usize)> = rs.ironing.iter().map(|&r| mirror(r)).collect();
            ironing.sort();
            Ok(ConcavifySolution {
                u,
                objective,
                partition: Partition { cells },
                cutoff: n - rs.cutoff,
                ironing,
                w_cal: reflect_fn(&rs.w_cal),
                w_bar: reflect_fn(&rs.w_bar),
            })
        }
    }
}

fn solve_upper(c: &Cfi, mu: &SignedMeasure) -> Result<ConcavifySolution> {
    let g = *c.grid();
    let n = g.last();
    let h = g.h();
    let w = mu.node_weights();

    // tail sums W_k = Σ_{i≥k} w_i and 𝒲_j = h Σ_{k>j} W_k
    let mut tail = vec![0.0; n + 2];
    for k in (0..=n).rev() {
        tail[k] = tail[k + 1] + w[k];
    }
    let mut wc = vec![0.0; n + 1];
    for j in (0..n).rev() {
        wc[j] = wc[j + 1] + h * tail[j + 1];
    }
    let w_cal = GridFunction::new(g, wc)?;
    let w_bar = w_cal.cav();

    let iron_tol = 1e-9 * (1.0 + w_cal.sup_norm());

    // first node after which the envelope stops increasing
    let cutoff = (1..=n).find(|&k| w_bar.value(k) <= w_bar.value(k - 1) + iron_tol).map_or(n, |k| k - 1);
    let mut ironing = Vec::new();
    let mut j = 1;
    while j < cutoff {
        if w_bar.value(j) - w_cal.value(j) > iron_tol {
            let start = j;
            while j < cutoff && w_bar.value(j) - w_cal.value(j) > iron_tol {
                j += 1;
            }
            ironing.push((start - 1, j));
        } else {
            j += 1;
        }
    }

    let lower = c.lower();
    let mut v = lower.values().to_vec();
    for &(a, b) in &ironing {
        let chord = lower.chord(a, b)?;
        v[a + 1..b].copy_from_slice(&chord.values()[a + 1..b]);
    }
    let s = c.slopes().s_hi;
    let (xc, yc) = (g.node(cutoff), lower.value(cutoff));
    for (i, slot) in v.iter_mut().enumerate().skip(cutoff + 1) {
        *slot = yc + s * (g.node(i) - xc);
    }
    let u = GridFunction::new(g, v)?;
    let objective = mu.integrate(&u)?;

    let mut cells = point_cells(c, &u);
    for &(a, b) in &ironing {
        cells.push(Cell { lo: a, hi: b, kind: CellKind::Y5, anchor: None, points: false });
    }
    if cutoff < n {
        cells.push(Cell { lo: cutoff, hi: n, kind: CellKind::Y3, anchor: None, points: false });
    }
    cells.sort_by_key(|c| (c.lo, c.hi));
    Ok(ConcavifySolution { u, objective, partition: Partition { cells }, cutoff, ironing, w_cal, w_bar })
}

/// Mirror a grid function through the midpoint of its domain.
pub(crate) fn reflect_fn(f: &GridFunction) -> GridFunction {
    let mut v = f.values().to_vec();
    v.reverse();
    GridFunction::new(*f.grid(), v).expect("reflection keeps values finite")
}

/// Mirror an interval; slopes change sign.
pub(crate) fn reflect_cfi(c: &Cfi) -> Result<Cfi> {
    let s = c.slopes();
    Cfi::with_tolerances(
        reflect_fn(c.lower()),
        reflect_fn(c.upper()),
        SlopeInterval::new(-s.s_hi, -s.s_lo)?,
        c.tolerances(),
    )
}

pub(crate) fn reflect_measure(mu: &SignedMeasure) -> Result<SignedMeasure> {
    let mut a = mu.atoms().to_vec();
    a.reverse();
    let mut d = mu.density().to_vec();
    d.reverse();
    SignedMeasure::new(*mu.grid(), a, d)
}
