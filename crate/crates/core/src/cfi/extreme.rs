//! Extreme points of a grid interval.
//!
//! Nodes where `u` sits on a boundary (within `level_tol`) are pinned. The
//! free nodes form maximal runs; each run together with its pinned neighbours
//! is a window, and the kinks of `u` at free nodes split a window into affine
//! pieces. A member is extreme when every piece carries one of the saturation
//! labels below, checked in the order tangential, slope, chordal, boundary:
//!
//! * tangential: the piece continues a cell of the upper boundary from a
//!   contact node at one of its ends (for an anchor `b` on the right, the
//!   slope is the upper boundary's slope on cell `b`, and symmetrically);
//! * slope: the piece touches a domain end with the extreme admissible slope
//!   and its other end is held;
//! * chordal: both ends are held;
//! * boundary: a domain end pinned to either boundary and the other end held.
//!
//! An end is held when it is pinned to the lower boundary or shared with a
//! tangential piece. On the grid an end pinned to the upper boundary at an
//! interior node also holds, since the piecewise-linear upper boundary has a
//! corner there. So does a kink whose value is forced by the grid: two
//! tangent lines that would cross between nodes meet through a short bridge
//! whose end values are fixed by the lines on either side.

use std::fmt;

use nalgebra::DMatrix;

use super::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SaturationKind {
    Tangential,
    Chordal,
    SlopeLow,
    SlopeHigh,
    Boundary,
}

impl fmt::Display for SaturationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SaturationKind::Tangential => "TANGENTIAL",
            SaturationKind::Chordal => "CHORDAL",
            SaturationKind::SlopeLow => "SLOPE_LOW",
            SaturationKind::SlopeHigh => "SLOPE_HIGH",
            SaturationKind::Boundary => "BOUNDARY",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaturationLabel {
    pub kind: SaturationKind,
    /// Contact node for tangential pieces.
    pub anchor: Option<usize>,
}

/// One affine piece `[a, b]` of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub a: usize,
    pub b: usize,
    pub slope: f64,
    pub label: SaturationLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeStructure {
    pub intervals: Vec<Piece>,
    pub pinned_lower: Vec<bool>,
    pub pinned_upper: Vec<bool>,
}

impl ExtremeStructure {
    pub fn is_pinned(&self, i: usize) -> bool {
        self.pinned_lower[i] || self.pinned_upper[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureFailure {
    NotMember(String),
    /// Three or more kinks inside one window.
    NotAffine { a: usize, b: usize },
    ConditionViolated { a: usize, b: usize, node: usize, condition: String },
}

impl fmt::Display for StructureFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureFailure::NotMember(m) => write!(f, "not a member: {m}"),
            StructureFailure::NotAffine { a, b } => {
                write!(f, "window [{a}, {b}] is not a union of saturated affine pieces (three or more kinks)")
            }
            StructureFailure::ConditionViolated { a, b, node, condition } => {
                write!(f, "piece [{a}, {b}] fails at node {node}: {condition}")
            }
        }
    }
}

/// Window `[p, q]` around a maximal run of free nodes.
#[derive(Debug, Clone)]
struct Window {
    p: usize,
    q: usize,
    kinks: Vec<usize>,
}

struct Scan {
    pinned_lower: Vec<bool>,
    pinned_upper: Vec<bool>,
    windows: Vec<Window>,
}

fn scan(c: &Cfi, u: &GridFunction) -> Scan {
    let n = c.grid().last();
    let lt = c.level_tol();
    let kt = c.kink_tol();
    let pinned_lower: Vec<bool> = (0..=n).map(|i| u.value(i) - c.lower().value(i) <= lt).collect();
    let pinned_upper: Vec<bool> = (0..=n).map(|i| c.upper().value(i) - u.value(i) <= lt).collect();
    let mut windows = Vec::new();
    let mut i = 0;
    while i <= n {
        if pinned_lower[i] || pinned_upper[i] {
            i += 1;
            continue;
        }
        let r0 = i;
        while i <= n && !(pinned_lower[i] || pinned_upper[i]) {
            i += 1;
        }
        let r1 = i - 1;
        let p = if r0 > 0 { r0 - 1 } else { 0 };
        let q = if r1 < n { r1 + 1 } else { n };
        let kinks = (r0.max(p + 1)..=r1.min(q.saturating_sub(1)))
            .filter(|&k| k > 0 && k < n && u.second_diff(k) > kt)
            .collect();
        windows.push(Window { p, q, kinks });
    }
    Scan { pinned_lower, pinned_upper, windows }
}

fn pieces_of(w: &Window) -> Vec<(usize, usize)> {
    let mut cuts = vec![w.p];
    cuts.extend(&w.kinks);
    cuts.push(w.q);
    cuts.windows(2).map(|s| (s[0], s[1])).collect()
}

fn piece_slope(u: &GridFunction, a: usize, b: usize) -> f64 {
    let g = u.grid();
    (u.value(b) - u.value(a)) / (g.node(b) - g.node(a))
}

/// Tangential anchor of `[a, b]`, if the piece continues an upper-boundary cell.
fn tangential_anchor(c: &Cfi, s: f64, a: usize, b: usize, pinned_upper: &[bool]) -> Option<usize> {
    let n = c.grid().last();
    let st = c.slope_tol();
    let up = c.upper();
    let sl = c.slopes();
    let close = |x: f64, y: f64| (x - y).abs() <= st;
    if pinned_upper[b] {
        let ok = if b < n { close(s, up.slope(b)) } else { close(s, sl.s_hi) || close(s, up.slope(n - 1)) };
        if ok {
            return Some(b);
        }
    }
    if pinned_upper[a] {
        let ok = if a > 0 { close(s, up.slope(a - 1)) } else { close(s, sl.s_lo) || close(s, up.slope(0)) };
        if ok {
            return Some(a);
        }
    }
    None
}

/// Nodes whose value is forced by the active constraints. Maximal affine
/// segments of `u` (split at kinks) start with their pinned nodes fixed; a
/// segment with two fixed nodes, or one fixed node and an extreme slope, is
/// fixed entirely, which can fix a kink shared with the next segment.
fn forced_nodes(c: &Cfi, u: &GridFunction, sc: &Scan) -> Vec<bool> {
    let n = c.grid().last();
    let kt = c.kink_tol();
    let st = c.slope_tol();
    let sl = c.slopes();
    let mut cuts = vec![0];
    cuts.extend((1..n).filter(|&k| u.second_diff(k) > kt));
    cuts.push(n);
    let segments: Vec<(usize, usize)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let extreme_slope = |a: usize, b: usize| {
        let s = piece_slope(u, a, b);
        (s - sl.s_lo).abs() <= st || (s - sl.s_hi).abs() <= st
    };
    let mut fixed: Vec<bool> = (0..=n).map(|i| sc.pinned_lower[i] || sc.pinned_upper[i]).collect();
    let mut done = vec![false; segments.len()];
    loop {
        let mut changed = false;
        for (k, &(a, b)) in segments.iter().enumerate() {
            if done[k] {
                continue;
            }
            let count = (a..=b).filter(|&i| fixed[i]).count();
            if count >= 2 || (count == 1 && extreme_slope(a, b)) {
                fixed[a..=b].iter_mut().for_each(|f| *f = true);
                done[k] = true;
                changed = true;
            }
        }
        if !changed {
            return fixed;
        }
    }
}

/// Find the structure of `u`, or the first reason it is not extreme.
pub fn detect_structure(c: &Cfi, u: &GridFunction) -> std::result::Result<ExtremeStructure, StructureFailure> {
    if let Some(msg) = c.membership_violation(u) {
        return Err(StructureFailure::NotMember(msg));
    }
    let sc = scan(c, u);
    let forced = forced_nodes(c, u, &sc);
    if let Some(w) = sc.windows.iter().find(|w| w.kinks.len() >= 3 && !(w.p..=w.q).all(|i| forced[i])) {
        return Err(StructureFailure::NotAffine { a: w.p, b: w.q });
    }
    let n = c.grid().last();
    let st = c.slope_tol();
    let sl = c.slopes();
    let raw: Vec<(usize, usize, f64)> = sc
        .windows
        .iter()
        .flat_map(pieces_of)
        .map(|(a, b)| (a, b, piece_slope(u, a, b)))
        .collect();
    let tangent: Vec<Option<usize>> =
        raw.iter().map(|&(a, b, s)| tangential_anchor(c, s, a, b, &sc.pinned_upper)).collect();

    let held_by_neighbour = |e: usize, me: usize| {
        raw.iter().enumerate().any(|(k, &(a, b, _))| k != me && (a == e || b == e) && tangent[k].is_some())
    };
    let held = |e: usize, me: usize| sc.pinned_lower[e] || held_by_neighbour(e, me);
    // corner contact with the piecewise-linear upper boundary, or a kink whose
    // value the neighbouring segments already force
    let held_grid = |e: usize, me: usize| held(e, me) || (sc.pinned_upper[e] && e > 0 && e < n) || forced[e];

    let mut intervals = Vec::with_capacity(raw.len());
    for (k, &(a, b, s)) in raw.iter().enumerate() {
        let label = if let Some(y) = tangent[k] {
            SaturationLabel { kind: SaturationKind::Tangential, anchor: Some(y) }
        } else {
            let kind = if a == 0 && (s - sl.s_lo).abs() <= st && held(b, k) {
                Some(SaturationKind::SlopeLow)
            } else if b == n && (s - sl.s_hi).abs() <= st && held(a, k) {
                Some(SaturationKind::SlopeHigh)
            } else if held(a, k) && held(b, k) {
                Some(SaturationKind::Chordal)
            } else if (a == 0 && sc.pinned_lower[0] | sc.pinned_upper[0] && held(b, k))
                || (b == n && sc.pinned_lower[n] | sc.pinned_upper[n] && held(a, k))
            {
                Some(SaturationKind::Boundary)
            } else if held_grid(a, k) && held_grid(b, k) {
                Some(SaturationKind::Chordal)
            } else {
                None
            };
            match kind {
                Some(kind) => SaturationLabel { kind, anchor: None },
                None => {
                    let node = if !held_grid(a, k) { a } else { b };
                    return Err(StructureFailure::ConditionViolated {
                        a,
                        b,
                        node,
                        condition: "no tangential, slope, chordal or boundary saturation".into(),
                    });
                }
            }
        };
        intervals.push(Piece { a, b, slope: s, label });
    }
    Ok(ExtremeStructure { intervals, pinned_lower: sc.pinned_lower, pinned_upper: sc.pinned_upper })
}

/// Outcome of the extreme-point test with a printable report.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeReport {
    pub extreme: bool,
    pub structure: Option<ExtremeStructure>,
    pub failure: Option<StructureFailure>,
}

impl fmt::Display for ExtremeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "extreme={}", self.extreme)?;
        if let Some(s) = &self.structure {
            for p in &s.intervals {
                match p.label.anchor {
                    Some(y) => writeln!(f, "[{}] [{},{}] slope={} anchor={}", p.label.kind, p.a, p.b, p.slope, y)?,
                    None => writeln!(f, "[{}] [{},{}] slope={}", p.label.kind, p.a, p.b, p.slope)?,
                }
            }
        }
        if let Some(e) = &self.failure {
            writeln!(f, "failure: {e}")?;
        }
        Ok(())
    }
}

pub fn verify_extreme(c: &Cfi, u: &GridFunction) -> ExtremeReport {
    match detect_structure(c, u) {
        Ok(s) => ExtremeReport { extreme: true, structure: Some(s), failure: None },
        Err(e) => ExtremeReport { extreme: false, structure: None, failure: Some(e) },
    }
}

/// A two-sided perturbation: both `u + eps·h` and `u - eps·h` are members.
#[derive(Debug, Clone, PartialEq)]
pub struct Falsification {
    pub h: GridFunction,
    pub eps: f64,
    pub family: &'static str,
}

impl Falsification {
    /// The scaled direction `eps·h`.
    pub fn step(&self) -> GridFunction {
        self.h.scale(self.eps)
    }
}

const EPS_FLOOR: f64 = 1e-12;

fn try_direction(c: &Cfi, u: &GridFunction, h: &GridFunction, family: &'static str) -> Option<Falsification> {
    let norm = h.sup_norm();
    if norm == 0.0 {
        return None;
    }
    let h = h.scale(1.0 / norm);
    let gap = c.upper().sub(c.lower()).map(|g| g.sup_norm()).unwrap_or(0.0);
    let floor = 10.0 * c.member_tol();
    let mut eps = gap.max(floor);
    while eps >= EPS_FLOOR && eps > floor {
        let plus = u.zip_with(&h, |a, b| a + eps * b).ok()?;
        let minus = u.zip_with(&h, |a, b| a - eps * b).ok()?;
        if c.contains(&plus) && c.contains(&minus) {
            return Some(Falsification { h, eps, family });
        }
        eps *= 0.5;
    }
    None
}

/// Piecewise-linear function with the given breakpoint values, zero outside.
fn breakpoint_function(u: &GridFunction, pts: &[usize], vals: &[f64]) -> GridFunction {
    let mut v = vec![0.0; u.len()];
    for k in 0..pts.len() - 1 {
        let (a, b) = (pts[k], pts[k + 1]);
        for (i, slot) in v.iter_mut().enumerate().take(b + 1).skip(a) {
            let t = (i - a) as f64 / (b - a) as f64;
            *slot = vals[k] + t * (vals[k + 1] - vals[k]);
        }
    }
    GridFunction::new(*u.grid(), v).expect("finite breakpoint values")
}

fn family_name(pts: &[usize], vals: &[f64], n: usize) -> &'static str {
    let nonzero: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] != 0.0).collect();
    let at_end = nonzero.iter().any(|&k| pts[k] == 0 || pts[k] == n);
    if at_end {
        "ramp"
    } else if nonzero.len() == 1 {
        "tent"
    } else if nonzero.windows(2).all(|w| vals[w[0]] == vals[w[1]]) {
        "plateau"
    } else {
        "breakpoint-combination"
    }
}

/// Rows of the constraints active at `u`, as dense coefficient vectors.
fn active_rows(c: &Cfi, u: &GridFunction) -> Vec<Vec<f64>> {
    let n = c.grid().last();
    let h = c.grid().h();
    let lt = c.level_tol();
    let kt = c.kink_tol();
    let st = c.slope_tol() * h;
    let sl = c.slopes();
    let mut rows = Vec::new();
    let unit = |i: usize| {
        let mut r = vec![0.0; n + 1];
        r[i] = 1.0;
        r
    };
    for i in 0..=n {
        if u.value(i) - c.lower().value(i) <= lt || c.upper().value(i) - u.value(i) <= lt {
            rows.push(unit(i));
        }
    }
    for i in 1..n {
        if u.second_diff(i) <= kt {
            let mut r = vec![0.0; n + 1];
            r[i - 1] = 1.0;
            r[i] = -2.0;
            r[i + 1] = 1.0;
            rows.push(r);
        }
    }
    for j in 0..n {
        let dv = u.value(j + 1) - u.value(j);
        if (dv - sl.s_lo * h).abs() <= st || (dv - sl.s_hi * h).abs() <= st {
            let mut r = vec![0.0; n + 1];
            r[j] = -1.0;
            r[j + 1] = 1.0;
            rows.push(r);
        }
    }
    rows
}

/// Null-space directions of the active constraints.
fn null_directions(c: &Cfi, u: &GridFunction) -> Vec<GridFunction> {
    let n = c.grid().n_nodes();
    let rows = active_rows(c, u);
    // A^T A is n x n regardless of the number of active rows
    let mut ata = DMatrix::<f64>::zeros(n, n);
    for r in &rows {
        let nz: Vec<usize> = (0..n).filter(|&i| r[i] != 0.0).collect();
        for &i in &nz {
            for &k in &nz {
                ata[(i, k)] += r[i] * r[k];
            }
        }
    }
    let eig = ata.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut out = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= 1e-10 * top {
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            if let Ok(g) = GridFunction::new(*c.grid(), v) {
                out.push(g);
            }
        }
    }
    out
}

/// Produce a two-sided perturbation witnessing that `u` is not extreme.
/// Returns `None` when `u` is extreme.
pub fn falsify_extremality(c: &Cfi, u: &GridFunction) -> Result<Option<Falsification>> {
    c.ensure_member(u)?;
    if verify_extreme(c, u).extreme {
        return Ok(None);
    }
    let sc = scan(c, u);
    let n = c.grid().last();

    for w in sc.windows.iter().filter(|w| w.kinks.len() >= 3) {
        let h = u.bregman_perturbation(w.p, w.q)?;
        if let Some(f) = try_direction(c, u, &h, "bregman") {
            return Ok(Some(f));
        }
    }

    for w in &sc.windows {
        let mut pts = vec![w.p];
        pts.extend(&w.kinks);
        pts.push(w.q);
        pts.dedup();
        if pts.len() < 2 {
            continue;
        }
        let free: Vec<bool> = pts
            .iter()
            .map(|&i| !(sc.pinned_lower[i] || sc.pinned_upper[i]))
            .collect();
        let slots: Vec<usize> = (0..pts.len()).filter(|&k| free[k]).collect();
        if slots.is_empty() || slots.len() > 7 {
            continue;
        }
        let combos = 3usize.pow(slots.len() as u32);
        for code in 1..combos {
            let mut vals = vec![0.0; pts.len()];
            let mut c3 = code;
            for &k in &slots {
                vals[k] = [0.0, 1.0, -1.0][c3 % 3];
                c3 /= 3;
            }
            let h = breakpoint_function(u, &pts, &vals);
            if let Some(f) = try_direction(c, u, &h, family_name(&pts, &vals, n)) {
                return Ok(Some(f));
            }
        }
    }

    for h in null_directions(c, u) {
        if let Some(f) = try_direction(c, u, &h, "null-space") {
            return Ok(Some(f));
        }
    }
    Err(Error::Solver(format!(
        "no two-sided perturbation found down to eps = {EPS_FLOOR:e}; tolerance conflict"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fn::{Grid, SlopeInterval};

    fn screening(n: usize, lower: impl Fn(f64) -> f64) -> Cfi {
        let g = Grid::unit(n).unwrap();
        Cfi::new(
            GridFunction::from_fn(g, lower),
            GridFunction::from_fn(g, |x| x),
            SlopeInterval::new(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn boundaries_are_extreme() {
        let c = screening(50, |x| (x - 0.3f64).max(0.0) * 0.5);
        assert!(verify_extreme(&c, c.lower()).extreme);
        assert!(verify_extreme(&c, c.upper()).extreme);
        assert!(detect_structure(&c, c.lower()).unwrap().intervals.is_empty());
    }

    #[test]
    fn cutoff_is_slope_high() {
        let c = screening(200, |_| 0.0);
        let u = c.cutoff_utility(100).unwrap();
        let s = detect_structure(&c, &u).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert_eq!(s.intervals[0].label.kind, SaturationKind::SlopeHigh);
        assert_eq!((s.intervals[0].a, s.intervals[0].b), (100, 200));
        assert!(falsify_extremality(&c, &u).unwrap().is_none());
    }

    #[test]
    fn midpoint_of_strictly_convex_bounds_is_not_affine() {
        let g = Grid::unit(40).unwrap();
        let c = Cfi::new(
            GridFunction::from_fn(g, |x| x * x - 1.0),
            GridFunction::from_fn(g, |x| x * x),
            SlopeInterval::new(-1.0, 3.0).unwrap(),
        )
        .unwrap();
        let mid = c.lower().mix(c.upper(), 0.5).unwrap();
        assert!(matches!(detect_structure(&c, &mid), Err(StructureFailure::NotAffine { .. })));
        let f = falsify_extremality(&c, &mid).unwrap().unwrap();
        assert_eq!(f.family, "bregman");
        assert!(c.contains(&mid.add(&f.step()).unwrap()));
        assert!(c.contains(&mid.sub(&f.step()).unwrap()));
    }

    #[test]
    fn free_chord_gets_a_tent() {
        // affine run with free endpoints in the middle of the domain
        let g = Grid::unit(40).unwrap();
        let c = Cfi::new(
            GridFunction::constant(g, 0.0),
            GridFunction::from_fn(g, |x| 0.5 * x * x + 1.0),
            SlopeInterval::new(-2.0, 2.0).unwrap(),
        )
        .unwrap();
        let u = GridFunction::from_fn(g, |x| (0.3 - x).max(0.0).max(0.5 * (x - 0.7)) + 0.2 * (x - 0.5).abs());
        let u = u.vex();
        assert!(c.contains(&u));
        assert!(!verify_extreme(&c, &u).extreme);
        let f = falsify_extremality(&c, &u).unwrap().unwrap();
        assert!(c.contains(&u.add(&f.step()).unwrap()) && c.contains(&u.sub(&f.step()).unwrap()));
    }

    #[test]
    fn mixture_with_cutoff_is_not_extreme() {
        let c = screening(100, |_| 0.0);
        let cut = c.cutoff_utility(40).unwrap();
        let u = c.lower().mix(&cut, 0.3).unwrap();
        assert!(!verify_extreme(&c, &u).extreme);
        assert!(falsify_extremality(&c, &u).unwrap().is_some());
    }
}
