//! Random instance generators shared by the integration suites.

#![allow(dead_code)]

use cfi_core::{Cfi, Grid, GridFunction, SignedMeasure, SlopeInterval};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A smooth convex upper boundary with slopes in `[s_lo, s_hi]` whose second
/// differences stay below the kink cap.
fn smooth_upper(r: &mut impl Rng, g: Grid, s: SlopeInterval) -> GridFunction {
    let width = s.s_hi - s.s_lo;
    // curvature mass spread over a quadratic and a one-sided quadratic
    let total = width * r.gen_range(0.0..1.0);
    let cap = 0.012 / g.h();
    let a = (0.5 * total * r.gen_range(0.0..1.0)).min(cap);
    let x0 = r.gen_range(0.0..1.0);
    let b = if x0 < 1.0 { ((0.5 * total - a) / (1.0 - x0)).max(0.0).min(cap) } else { 0.0 };
    let rise = 2.0 * a + 2.0 * b * (1.0 - x0);
    let s0 = s.s_lo + (width - rise).max(0.0) * r.gen_range(0.0..1.0);
    let c = r.gen_range(-1.0..1.0);
    GridFunction::from_fn(g, |x| c + s0 * x + a * x * x + b * (x - x0).max(0.0).powi(2))
}

/// Maximum of `k` admissible lines lying below `upper`; some touch it.
fn lines_below(r: &mut impl Rng, upper: &GridFunction, s: SlopeInterval, k: usize) -> GridFunction {
    let g = *upper.grid();
    let nodes = g.nodes();
    let mut lines = Vec::new();
    for _ in 0..k {
        let sl = r.gen_range(s.s_lo..=s.s_hi);
        let reach = nodes.iter().enumerate().map(|(i, &x)| upper.value(i) - sl * x).fold(f64::INFINITY, f64::min);
        let gap = if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..0.3) };
        lines.push((reach - gap, sl));
    }
    GridFunction::from_fn(g, |x| lines.iter().map(|&(c, sl)| c + sl * x).fold(f64::NEG_INFINITY, f64::max))
}

/// A random interval on the unit grid.
pub fn random_cfi(r: &mut impl Rng, n_cells: usize) -> Cfi {
    let g = Grid::unit(n_cells).unwrap();
    let s_lo = r.gen_range(-1.0..0.5);
    let s = SlopeInterval::new(s_lo, s_lo + r.gen_range(0.5..2.0)).unwrap();
    let upper = smooth_upper(r, g, s);
    let k = r.gen_range(1..5);
    let lower = lines_below(r, &upper, s, k);
    Cfi::new(lower, upper, s).unwrap()
}

/// An affinely bounded interval: the upper boundary is the extreme ray from
/// the shared endpoint and the lower boundary a maximum of lines through
/// points below it.
pub fn random_affine_cfi(r: &mut impl Rng, n_cells: usize, upper_affine: bool) -> Cfi {
    let g = Grid::unit(n_cells).unwrap();
    let s_lo = r.gen_range(-1.0..0.5);
    let s = SlopeInterval::new(s_lo, s_lo + r.gen_range(0.5..2.0)).unwrap();
    let y0 = r.gen_range(-1.0..1.0);
    let (x0, sl) = if upper_affine { (0.0, s.s_hi) } else { (1.0, s.s_lo) };
    let upper = GridFunction::affine(g, x0, y0, sl);
    let k = r.gen_range(1..6);
    let mut lines = vec![(y0, r.gen_range(s.s_lo..=s.s_hi))];
    for _ in 1..k {
        let slope = r.gen_range(s.s_lo..=s.s_hi);
        lines.push((y0 - r.gen_range(0.0..0.5), slope));
    }
    let lower = GridFunction::from_fn(g, |x| {
        lines.iter().map(|&(c, slope)| c + slope * (x - x0)).fold(f64::NEG_INFINITY, f64::max)
    });
    Cfi::new(lower, upper, s).unwrap()
}

/// Random atoms and cell densities.
pub fn random_measure(r: &mut impl Rng, g: Grid) -> SignedMeasure {
    let atoms = (0..g.n_nodes())
        .map(|_| if r.gen_bool(0.2) { r.gen_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let density = (0..g.n_cells()).map(|_| r.gen_range(-2.0..2.0)).collect();
    SignedMeasure::new(g, atoms, density).unwrap()
}

/// Nonnegative atoms at nodes with total mass one.
pub fn random_atoms(r: &mut impl Rng, g: Grid, k: usize) -> Vec<f64> {
    let mut a = vec![0.0; g.n_nodes()];
    for _ in 0..k {
        a[r.gen_range(0..g.n_nodes())] += r.gen_range(0.1..1.0);
    }
    let total: f64 = a.iter().sum();
    a.iter().map(|v| v / total).collect()
}

pub fn atomic(g: Grid, atoms: Vec<f64>) -> SignedMeasure {
    SignedMeasure::new(g, atoms, vec![0.0; g.n_cells()]).unwrap()
}

/// `|a - b| ≤ rel·(1 + |b|)`.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + b.abs())
}
