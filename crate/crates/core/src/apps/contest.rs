//! Large contests with limited disposal. A quantile allocation `χ` assigns
//! prize quality by rank; it must be weakly majorized by the prize quantile
//! function `G⁻¹` and weakly majorize the constant `m` (average prize quality
//! at least `m`). The interval lives on integrated allocations
//! `I(q) = -∫_q^1 χ`.

use super::dist::DistributionSpec;
use super::mechanism::{certify, right_slopes, Mechanism, SolveOptions};
use crate::cfi::{make_majorization_cfi, Cfi};
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction};
use crate::measure::SignedMeasure;

pub fn contest_cfi(
    f: &DistributionSpec,
    g: &DistributionSpec,
    m: f64,
    n_cells: usize,
) -> Result<(Cfi, SignedMeasure)> {
    let mean = g.mean();
    if !(m >= 0.0 && m <= mean + 1e-12) {
        return Err(Error::Precondition(format!("disposal bound {m} outside [0, {mean}]")));
    }
    let grid = Grid::unit(n_cells)?;
    let g_inv = GridFunction::from_fn(grid, |q| g.quantile(q));
    let floor = GridFunction::constant(grid, m.min(mean));
    let c = make_majorization_cfi(&g_inv, &floor, true, Some(0.0))?;
    let vq = |q: f64| f.virtual_value(f.quantile(q));
    let mu = SignedMeasure::from_antiderivative(grid, |q| -vq(q))
        .with_atom(grid.last(), vq(1.0))
        .with_atom(0, -vq(0.0));
    Ok((c, mu))
}

fn bisect(mut a: f64, mut b: f64, above: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if above(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

pub fn solve_contest(f: &DistributionSpec, g: &DistributionSpec, m: f64, opts: &SolveOptions) -> Result<Mechanism> {
    if !f.is_regular(400) {
        return Err(Error::Precondition("type distribution is not regular".into()));
    }
    let (c0, mu) = contest_cfi(f, g, m, opts.n_cells)?;
    let c = Cfi::with_tolerances(c0.lower().clone(), c0.upper().clone(), c0.slopes(), opts.tol)?;
    let grid = *c.grid();
    let n = grid.last();
    let lower = c.lower();
    let vq = |q: f64| f.virtual_value(f.quantile(q));

    // continuous thresholds
    let q0 = if vq(0.0) >= 0.0 { 0.0 } else { bisect(0.0, 1.0, |q| vq(q) >= 0.0) };
    let binding = lower.eval(q0) > -m;
    let q_m = if binding { bisect(0.0, 1.0, |q| lower.eval(q) >= -m) } else { q0 };

    // exclusion family: flat at a level L ≤ -m, then the lower boundary
    let w = mu.node_weights();
    let mt = c.member_tol();
    let mut levels: Vec<f64> = lower.values().iter().copied().filter(|&l| l <= -m + mt).collect();
    levels.push(-m);
    let mut best: Option<(f64, f64)> = None;
    for &l in &levels {
        let val: f64 = lower.values().iter().zip(&w).map(|(&lv, &wi)| lv.max(l) * wi).sum();
        if best.map_or(true, |(_, b)| val > b) {
            best = Some((l, val));
        }
    }
    let (level, _) = best.expect("levels are nonempty");
    let u = lower.map(|v| v.max(level));
    let cut = (0..=n).find(|&i| lower.value(i) >= level).unwrap_or(n);
    let (report, extreme, oracle) = certify(&c, &u, &mu, None, opts.oracle)?;
    let top = c.slopes().s_hi;
    let allocation = right_slopes(&u).map(|x| x.clamp(0.0, top));
    let q_star = grid.node(cut);
    Ok(Mechanism {
        value: mu.integrate(&u)?,
        cfi: c,
        measure: mu,
        u,
        allocation,
        transfer: GridFunction::constant(grid, 0.0),
        cutoffs: vec![
            ("q_star".into(), q_star),
            ("theta_star".into(), f.quantile(q_star)),
            ("q_star_continuous".into(), q_m),
            ("theta_star_continuous".into(), f.quantile(q_m)),
            ("binding".into(), if level >= -m - mt { 1.0 } else { 0.0 }),
        ],
        intervals: vec![("exclusion".into(), 0.0, q_star)],
        report,
        extreme,
        oracle,
        constructive: true,
    })
}

/// Average prize quality `∫ χ dq = I(1) - I(0)`.
pub fn average_allocation(m: &Mechanism) -> f64 {
    let n = m.u.grid().last();
    m.u.value(n) - m.u.value(0)
}
