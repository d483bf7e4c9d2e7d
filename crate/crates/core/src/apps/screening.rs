//! Monopolistic screening with a menu of outside options.

use super::dist::DistributionSpec;
use super::mechanism::{certify, extract_allocation, right_slopes, Mechanism, SolveOptions};
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction, SlopeInterval};
use crate::lp::cfi_lp;
use crate::measure::SignedMeasure;
use crate::solve::{concavify_solve, AffineBound};

/// Outside options `(x, t)`: allocation in `[0,1]`, transfer `t ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    pub items: Vec<(f64, f64)>,
}

impl Menu {
    pub fn null() -> Self {
        Menu { items: vec![(0.0, 0.0)] }
    }

    /// `{(0,0), (1,p)}`.
    pub fn posted_price(p: f64) -> Self {
        Menu { items: vec![(0.0, 0.0), (1.0, p)] }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.items.iter().any(|&(x, t)| x == 0.0 && t == 0.0) {
            return Err(Error::Invalid("screening menu must contain the null item (0,0)".into()));
        }
        for &(x, t) in &self.items {
            if !(0.0..=1.0).contains(&x) || !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Invalid(format!("menu item ({x}, {t}) needs x in [0,1] and t >= 0")));
            }
        }
        Ok(())
    }

    /// `max_k θ x_k - t_k` at the nodes.
    pub fn envelope(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |th| {
            self.items.iter().map(|&(x, t)| th * x - t).fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScreeningObjective {
    Revenue,
    /// Pareto weights at the nodes, profit weight and marginal cost.
    Welfare { pareto: GridFunction, alpha: f64, cost: f64 },
}

pub fn screening_cfi(f: &DistributionSpec, menu: &Menu, n_cells: usize) -> Result<Cfi> {
    menu.validate()?;
    let g = Grid::new(f.lo, f.hi, n_cells)?;
    Cfi::new(menu.envelope(g), GridFunction::from_fn(g, |x| x), SlopeInterval::new(0.0, 1.0)?)
}

pub fn mu_revenue(f: &DistributionSpec, grid: Grid) -> SignedMeasure {
    let (lo, hi) = (grid.lo(), grid.hi());
    SignedMeasure::from_antiderivative(grid, |x| -(f.cdf(x) + x * f.pdf(x)))
        .with_atom(grid.last(), hi * f.pdf(hi))
        .with_atom(0, -lo * f.pdf(lo))
}

pub fn mu_welfare(
    f: &DistributionSpec,
    grid: Grid,
    pareto: &GridFunction,
    alpha: f64,
    cost: f64,
) -> Result<SignedMeasure> {
    grid.ensure_same(pareto.grid())?;
    if !(alpha > 0.0) {
        return Err(Error::Invalid("profit weight must be positive".into()));
    }
    let (lo, hi) = (grid.lo(), grid.hi());
    let base = SignedMeasure::from_antiderivative(grid, |x| -alpha * (f.cdf(x) + (x - cost) * f.pdf(x)))
        .with_atom(grid.last(), alpha * (hi - cost) * f.pdf(hi))
        .with_atom(0, -alpha * (lo - cost) * f.pdf(lo));
    let h = grid.h();
    let welfare: Vec<f64> = (0..grid.n_cells())
        .map(|j| {
            let pi = 0.5 * (pareto.value(j) + pareto.value(j + 1));
            pi * (f.cdf(grid.node(j + 1)) - f.cdf(grid.node(j))) / h
        })
        .collect();
    let w = SignedMeasure::new(grid, vec![0.0; grid.n_nodes()], welfare)?;
    base.add(&w)
}

/// Expected transfers `Σ_j t_j ΔF_j`, with the constant per-cell transfer of
/// a piecewise-linear indirect utility.
pub fn transfer_revenue(f: &DistributionSpec, u: &GridFunction) -> f64 {
    let g = u.grid();
    (0..g.n_cells())
        .map(|j| {
            let x = u.slope(j);
            let t = g.node(j) * x - u.value(j);
            t * (f.cdf(g.node(j + 1)) - f.cdf(g.node(j)))
        })
        .sum()
}

/// Maximal node runs of at least one cell on which `u` follows the lower
/// boundary; endpoints in type units.
pub fn default_regions(c: &Cfi, u: &GridFunction) -> Vec<(f64, f64)> {
    let g = c.grid();
    let lt = c.level_tol();
    let on = |i: usize| u.value(i) - c.lower().value(i) <= lt;
    let mut out = Vec::new();
    let mut j = 0;
    while j < g.last() {
        if on(j) && on(j + 1) {
            let a = j;
            while j < g.last() && on(j + 1) {
                j += 1;
            }
            out.push((g.node(a), g.node(j)));
        } else {
            j += 1;
        }
    }
    out
}

pub fn solve_screening(
    f: &DistributionSpec,
    menu: &Menu,
    objective: &ScreeningObjective,
    opts: &SolveOptions,
) -> Result<Mechanism> {
    let c0 = screening_cfi(f, menu, opts.n_cells)?;
    let c = Cfi::with_tolerances(c0.lower().clone(), c0.upper().clone(), c0.slopes(), opts.tol)?;
    let g = *c.grid();
    let mu = match objective {
        ScreeningObjective::Revenue => mu_revenue(f, g),
        ScreeningObjective::Welfare { pareto, alpha, cost } => mu_welfare(f, g, pareto, *alpha, *cost)?,
    };
    let (u, partition, cutoff, ironing, constructive) = match AffineBound::detect(&c) {
        Some(AffineBound::UpperAffine) => {
            let s = concavify_solve(&c, &mu, AffineBound::UpperAffine)?;
            (s.u, Some(s.partition), Some(s.cutoff), s.ironing, true)
        }
        _ => (cfi_lp(&c, &mu)?.0, None, None, Vec::new(), false),
    };
    let (report, extreme, oracle) = certify(&c, &u, &mu, partition.as_ref(), opts.oracle)?;
    let default_x = right_slopes(c.lower());
    let allocation = extract_allocation(&c, &u, &default_x)?;
    let transfer = GridFunction::new(
        g,
        (0..g.n_nodes()).map(|i| g.node(i) * allocation.value(i) - u.value(i)).collect(),
    )?;
    let value = mu.integrate(&u)?;
    let mut cutoffs = Vec::new();
    if let Some(k) = cutoff {
        cutoffs.push(("theta_star".to_string(), g.node(k)));
    }
    let mut intervals: Vec<(String, f64, f64)> =
        ironing.iter().map(|&(a, b)| ("bunching".to_string(), g.node(a), g.node(b))).collect();
    intervals.extend(default_regions(&c, &u).into_iter().map(|(a, b)| ("default".to_string(), a, b)));
    Ok(Mechanism {
        cfi: c,
        measure: mu,
        u,
        allocation,
        transfer,
        value,
        cutoffs,
        intervals,
        report,
        extreme,
        oracle,
        constructive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_posted_price() {
        let g = Grid::unit(10).unwrap();
        let e = Menu::posted_price(0.3).envelope(g);
        for (x, v) in g.nodes().into_iter().zip(e.values()) {
            assert!((v - (x - 0.3f64).max(0.0)).abs() < 1e-15);
        }
        assert!(Menu { items: vec![(1.0, 0.2)] }.validate().is_err());
    }

    #[test]
    fn uniform_revenue_measure() {
        let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let g = Grid::unit(20).unwrap();
        let mu = mu_revenue(&f, g);
        assert!(mu.density().iter().all(|d| (d + 2.0).abs() < 1e-12));
        assert!((mu.atoms()[20] - 1.0).abs() < 1e-15);
        assert_eq!(mu.atoms()[0], 0.0);
        let pi = GridFunction::constant(g, 0.0);
        let w = mu_welfare(&f, g, &pi, 1.0, 0.0).unwrap();
        assert_eq!(w.node_weights(), mu.node_weights());
    }

    #[test]
    fn uniform_posted_price() {
        let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let m = solve_screening(&f, &Menu::null(), &ScreeningObjective::Revenue, &SolveOptions::default()).unwrap();
        assert!((m.value - 0.25).abs() < 1e-3);
        assert!((m.cutoff("theta_star").unwrap() - 0.5).abs() <= 1.0 / 200.0 + 1e-12);
        assert!(m.certified() && m.oracle_matches() && m.extreme);
        assert!((transfer_revenue(&f, &m.u) - m.value).abs() < 1e-4);
    }
}
