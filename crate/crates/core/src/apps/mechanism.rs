//! Shared solution record and pipeline plumbing for the applications.

use std::fmt;

use crate::cfi::{verify_extreme, Cfi};
use crate::error::Result;
use crate::grid_fn::GridFunction;
use crate::lp::cfi_lp;
use crate::measure::SignedMeasure;
use crate::solve::{reflect_cfi, reflect_fn, reflect_measure, verify_optimality, verify_with_partition, Partition, VerificationReport};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub n_cells: usize,
    /// Cross-check against the simplex oracle.
    pub oracle: bool,
    pub tol: Tolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { n_cells: 200, oracle: true, tol: Tolerances::default() }
    }
}

impl SolveOptions {
    pub fn with_cells(n_cells: usize) -> Self {
        SolveOptions { n_cells, ..SolveOptions::default() }
    }
}

/// A solved application instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub cfi: Cfi,
    pub measure: SignedMeasure,
    /// Indirect utility (or integrated quantile allocation).
    pub u: GridFunction,
    /// Allocation, action or posterior-mean profile at the nodes.
    pub allocation: GridFunction,
    /// Transfers where the application has them, zero otherwise.
    pub transfer: GridFunction,
    pub value: f64,
    pub cutoffs: Vec<(String, f64)>,
    pub intervals: Vec<(String, f64, f64)>,
    pub report: VerificationReport,
    pub extreme: bool,
    /// Objective of the simplex oracle, when it was run.
    pub oracle: Option<f64>,
    /// Whether `u` came from the structural construction rather than the oracle.
    pub constructive: bool,
}

impl Mechanism {
    pub fn certified(&self) -> bool {
        self.report.overall
    }

    pub fn oracle_gap(&self) -> Option<f64> {
        self.oracle.map(|o| (o - self.value).abs())
    }

    /// Oracle agreement within `lp_gap·(1 + |value|)`; true when the oracle was skipped.
    pub fn oracle_matches(&self) -> bool {
        let band = self.cfi.tolerances().lp_gap * (1.0 + self.value.abs());
        self.oracle_gap().map_or(true, |g| g <= band)
    }

    pub fn cutoff(&self, name: &str) -> Option<f64> {
        self.cutoffs.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn intervals_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.intervals.iter().filter(move |(n, _, _)| n == name).map(|(_, a, b)| (*a, *b))
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "value={:.12}", self.value)?;
        for (name, v) in &self.cutoffs {
            writeln!(f, "cutoff.{name}={v:.9}")?;
        }
        for (name, a, b) in &self.intervals {
            writeln!(f, "interval.{name}=[{a:.9},{b:.9}]")?;
        }
        writeln!(f, "extreme={}", self.extreme)?;
        writeln!(f, "certified={}", self.certified())?;
        writeln!(f, "constructive={}", self.constructive)?;
        match (self.oracle, self.oracle_gap()) {
            (Some(o), Some(g)) => writeln!(f, "oracle={o:.12}\noracle_gap={g:.3e}")?,
            _ => writeln!(f, "oracle=skipped")?,
        }
        write!(f, "{}", self.report)
    }
}

/// Certificate and oracle for a candidate. A supplied partition is tried
/// first, then the generic partitions.
pub fn certify(
    c: &Cfi,
    u: &GridFunction,
    mu: &SignedMeasure,
    partition: Option<&Partition>,
    oracle: bool,
) -> Result<(VerificationReport, bool, Option<f64>)> {
    let mut report = match partition {
        Some(p) => Some(verify_with_partition(c, u, mu, p)?),
        None => None,
    };
    if !report.as_ref().map_or(false, |r| r.overall) {
        report = Some(verify_optimality(c, u, mu)?);
    }
    let extreme = verify_extreme(c, u).extreme;
    let oracle = if oracle { Some(cfi_lp(c, mu)?.1) } else { None };
    Ok((report.expect("report computed"), extreme, oracle))
}

/// Allocation read off `u*`: the default allocation on cells where `u*`
/// follows the lower boundary, the average default allocation on chords of
/// the lower boundary, and the slope of `u*` elsewhere. Values are clamped
/// to the slope interval.
pub fn extract_allocation(c: &Cfi, u_star: &GridFunction, default_x: &GridFunction) -> Result<GridFunction> {
    c.grid().ensure_same(u_star.grid())?;
    c.grid().ensure_same(default_x.grid())?;
    let n = c.grid().last();
    let lt = c.level_tol();
    let s = c.slopes();
    let on_lower = |i: usize| u_star.value(i) - c.lower().value(i) <= lt;
    let mut x = vec![0.0; n + 1];
    let mut j = 0;
    while j < n {
        if on_lower(j) && on_lower(j + 1) {
            x[j] = default_x.value(j);
            j += 1;
            continue;
        }
        // a run of free nodes bounded by lower contacts is an ironed chord
        let end = (j + 1..=n).find(|&k| on_lower(k));
        let chord = on_lower(j) && end.map_or(false, |k| (j + 1..k).all(|i| u_star.second_diff(i).abs() <= c.kink_tol()));
        match end {
            Some(k) if chord => {
                let avg = (j..k).map(|i| default_x.value(i)).sum::<f64>() / (k - j) as f64;
                x[j..k].iter_mut().for_each(|v| *v = avg);
                j = k;
            }
            _ => {
                x[j] = u_star.slope(j);
                j += 1;
            }
        }
    }
    x[n] = x[n - 1];
    let x: Vec<f64> = x.into_iter().map(|v| v.clamp(s.s_lo, s.s_hi)).collect();
    GridFunction::new(*c.grid(), x)
}

/// Right difference quotients of `f`, repeated at the last node.
pub fn right_slopes(f: &GridFunction) -> GridFunction {
    let n = f.grid().last();
    let v: Vec<f64> = (0..=n).map(|i| f.slope(i.min(n - 1))).collect();
    GridFunction::new(*f.grid(), v).expect("finite slopes")
}

/// Best member of the floor family: the lower boundary up to a node `p`, a
/// chord to a node `k`, the line through the upper boundary's cell at the
/// anchor `y` up to `y`, and the upper boundary from `y` on. Chords from `p`
/// straight to the anchor node and both boundaries are also candidates.
/// Anchors come from `anchors`; `p` and `k` range over `reach` nodes around
/// the line's exit from the lower boundary.
pub(crate) fn floor_family_best(
    c: &Cfi,
    mu: &SignedMeasure,
    anchors: &[usize],
    reach: usize,
) -> Result<(GridFunction, f64, usize)> {
    let g = *c.grid();
    let n = g.last();
    let lo = c.lower();
    let up = c.upper();
    let w = mu.node_weights();
    let value = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let mut best = (lo.values().to_vec(), value(lo.values()), n);
    let top = value(up.values());
    if top > best.1 {
        best = (up.values().to_vec(), top, 0);
    }
    let mut v = vec![0.0; n + 1];
    for &y in anchors.iter().filter(|&&y| y < n) {
        let s = up.slope(y);
        let line = |i: usize| up.value(y) + s * (g.node(i) - g.node(y));
        let p0 = (0..y).rev().find(|&i| lo.value(i) >= line(i)).unwrap_or(0);
        // chords from the lower boundary straight to the anchor node
        for p in p0.saturating_sub(reach)..=(p0 + reach).min(y.saturating_sub(1)) {
            for i in 0..=n {
                v[i] = if i <= p {
                    lo.value(i)
                } else if i < y {
                    lo.value(p) + (up.value(y) - lo.value(p)) * (i - p) as f64 / (y - p) as f64
                } else {
                    up.value(i)
                };
            }
            let val = value(&v);
            if val > best.1 {
                let cand = GridFunction::new(g, v.clone())?;
                if c.contains(&cand) {
                    best = (v.clone(), val, y);
                }
            }
        }
        for p in p0.saturating_sub(reach)..=(p0 + reach).min(y) {
            for k in p + 1..=(p + reach + 1).min(y) {
                let (yp, yk) = (lo.value(p), line(k));
                for i in 0..=n {
                    v[i] = if i <= p {
                        lo.value(i)
                    } else if i < k {
                        yp + (yk - yp) * (i - p) as f64 / (k - p) as f64
                    } else if i < y {
                        line(i)
                    } else {
                        up.value(i)
                    };
                }
                let val = value(&v);
                if val > best.1 {
                    let cand = GridFunction::new(g, v.clone())?;
                    if c.contains(&cand) {
                        best = (v.clone(), val, y);
                    }
                }
            }
        }
    }
    let (v, _, y) = best;
    let u = GridFunction::new(g, v)?;
    let val = mu.integrate(&u)?;
    Ok((u, val, y))
}

/// The floor family search on the mirrored problem (upper boundary first,
/// lower boundary last), mapped back.
pub(crate) fn ceiling_family_best(
    c: &Cfi,
    mu: &SignedMeasure,
    anchors: &[usize],
    reach: usize,
) -> Result<(GridFunction, f64, usize)> {
    let n = c.grid().last();
    let rc = reflect_cfi(c)?;
    let rm = reflect_measure(mu)?;
    let ra: Vec<usize> = anchors.iter().filter(|&&a| a <= n).map(|&a| n - a).collect();
    let (ru, _, ry) = floor_family_best(&rc, &rm, &ra, reach)?;
    let u = reflect_fn(&ru);
    let val = mu.integrate(&u)?;
    Ok((u, val, n - ry))
}

/// Anchors within `radius` nodes of `center`.
pub(crate) fn window(center: usize, radius: usize, n: usize) -> Vec<usize> {
    (center.saturating_sub(radius)..=(center + radius).min(n)).collect()
}
