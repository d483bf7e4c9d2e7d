//! Delegation with quadratic loss, constant bias and a menu of outside
//! lotteries. The agent's payoff from a lottery with mean action `a` and
//! expected `b`-value `e` is `θ a + e`; with `b(a) = -a²/2` the agent's
//! favourite action is `a = θ` and `ū(θ) = θ²/2`.

use super::dist::DistributionSpec;
use super::mechanism::{certify, floor_family_best, right_slopes, window, Mechanism, SolveOptions};
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction, SlopeInterval};
use crate::lp::cfi_lp;
use crate::measure::SignedMeasure;

/// Outside lotteries as `(mean action, expected b-value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelegationMenu {
    pub items: Vec<(f64, f64)>,
}

impl DelegationMenu {
    /// Deterministic actions at the two ends of the type space.
    pub fn standard(lo: f64, hi: f64) -> Self {
        DelegationMenu { items: vec![(lo, -0.5 * lo * lo), (hi, -0.5 * hi * hi)] }
    }

    /// Add the deterministic action `a`.
    pub fn with_action(mut self, a: f64) -> Self {
        self.items.push((a, -0.5 * a * a));
        self
    }

    pub fn envelope_at(&self, th: f64) -> f64 {
        self.items.iter().map(|&(a, e)| th * a + e).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn envelope(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |th| self.envelope_at(th))
    }
}

fn ubar(th: f64) -> f64 {
    0.5 * th * th
}

pub fn delegation_cfi(
    f: &DistributionSpec,
    beta: f64,
    menu: &DelegationMenu,
    n_cells: usize,
) -> Result<(Cfi, SignedMeasure)> {
    let (lo, hi) = (f.lo, f.hi);
    if menu.items.iter().any(|&(a, _)| a < lo || a > hi) {
        return Err(Error::Invalid("menu mean actions must lie in the type range".into()));
    }
    for th in [lo, hi] {
        if (menu.envelope_at(th) - ubar(th)).abs() > 1e-9 * (1.0 + ubar(th).abs()) {
            return Err(Error::Precondition(format!("menu is not tangent to the agent's first-best at {th}")));
        }
    }
    let g = Grid::new(lo, hi, n_cells)?;
    let c = Cfi::new(menu.envelope(g), GridFunction::from_fn(g, ubar), SlopeInterval::new(lo, hi)?)?;
    let mu = SignedMeasure::from_antiderivative(g, |x| f.cdf(x) - beta * f.pdf(x))
        .with_atom(g.last(), beta * f.pdf(hi))
        .with_atom(0, -beta * f.pdf(lo));
    Ok((c, mu))
}

fn simpson(a: f64, b: f64, panels: usize, h: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = 2 * panels;
    let d = (b - a) / n as f64;
    let mut s = h(a) + h(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * h(a + k as f64 * d);
    }
    s * d / 3.0
}

/// Left end of the line through `(θ, ū(θ))` with slope `θ` above the menu envelope.
fn ell(menu: &DelegationMenu, lo: f64, th: f64) -> f64 {
    let gap = |x: f64| ubar(th) + th * (x - th) - menu.envelope_at(x);
    if gap(lo) >= 0.0 {
        return lo;
    }
    let (mut a, mut b) = (lo, th);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if gap(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Floor cutoff of the continuous problem: the point where the first moment
/// of `μ_D` about `θ` over `[ℓ(θ), θ]` changes sign from positive.
pub fn theta_star_continuous(f: &DistributionSpec, beta: f64, menu: &DelegationMenu) -> f64 {
    let (lo, hi) = (f.lo, f.hi);
    let psi = |t: f64| f.pdf(t) - beta * f.pdf_prime(t);
    let moment = |th: f64| {
        let l = ell(menu, lo, th);
        let atom = if l <= lo { (lo - th) * (-beta * f.pdf(lo)) } else { 0.0 };
        simpson(l, th, 256, |t| (t - th) * psi(t)) + atom
    };
    let steps = 400;
    let pts: Vec<f64> = (1..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    if moment(pts[0]) <= 0.0 {
        return lo;
    }
    let mut prev = pts[0];
    for &th in &pts[1..] {
        if moment(th) <= 0.0 {
            let (mut a, mut b) = (prev, th);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if moment(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        prev = th;
    }
    hi
}

pub fn solve_delegation(
    f: &DistributionSpec,
    beta: f64,
    menu: &DelegationMenu,
    opts: &SolveOptions,
) -> Result<Mechanism> {
    if !(beta > 0.0) {
        return Err(Error::Invalid("bias must be positive".into()));
    }
    if !f.is_log_concave(400) {
        return Err(Error::Precondition("type density is not log-concave".into()));
    }
    let (c0, mu) = delegation_cfi(f, beta, menu, opts.n_cells)?;
    let c = Cfi::with_tolerances(c0.lower().clone(), c0.upper().clone(), c0.slopes(), opts.tol)?;
    let g = *c.grid();
    let n = g.last();
    let th_c = theta_star_continuous(f, beta, menu);
    let center = g.nearest(th_c);

    let attempt = |anchors: Vec<usize>, reach: usize| -> Result<(GridFunction, usize, _)> {
        let (u, _, y) = floor_family_best(&c, &mu, &anchors, reach)?;
        let cert = certify(&c, &u, &mu, None, opts.oracle)?;
        Ok((u, y, cert))
    };
    let (mut u, mut y, mut cert) = attempt(window(center, 6 + n / 20, n), 6)?;
    let band = |v: f64, o: Option<f64>| o.map_or(true, |o| (o - v).abs() <= opts.tol.lp_gap * (1.0 + v.abs()));
    if !cert.0.overall || !band(mu.integrate(&u)?, cert.2) {
        (u, y, cert) = attempt((0..=n).collect(), 12)?;
    }
    let mut constructive = true;
    if !cert.0.overall || !band(mu.integrate(&u)?, cert.2) {
        u = cfi_lp(&c, &mu)?.0;
        cert = certify(&c, &u, &mu, None, opts.oracle)?;
        constructive = false;
    }
    let (report, extreme, oracle) = cert;
    let allocation = right_slopes(&u).map(|a| a.clamp(g.lo(), g.hi()));
    let b_values = GridFunction::new(g, (0..=n).map(|i| u.value(i) - g.node(i) * allocation.value(i)).collect())?;
    let theta_star = g.node(y);
    Ok(Mechanism {
        value: mu.integrate(&u)?,
        cfi: c,
        measure: mu,
        u,
        allocation,
        transfer: b_values,
        cutoffs: vec![
            ("theta_star".into(), theta_star),
            ("theta_star_continuous".into(), th_c),
            ("action_floor".into(), theta_star),
        ],
        intervals: vec![("delegation_set".into(), theta_star, g.hi())],
        report,
        extreme,
        oracle,
        constructive,
    })
}

/// Cutoffs under two menus whose envelopes are ordered pointwise.
pub fn delegation_comparative_statics(
    f: &DistributionSpec,
    beta: f64,
    menu_1: &DelegationMenu,
    menu_2: &DelegationMenu,
    opts: &SolveOptions,
) -> Result<(f64, f64)> {
    let g = Grid::new(f.lo, f.hi, opts.n_cells)?;
    let (e1, e2) = (menu_1.envelope(g), menu_2.envelope(g));
    if let Some(i) = (0..g.n_nodes()).find(|&i| e1.value(i) < e2.value(i) - 1e-12) {
        return Err(Error::Precondition(format!("first menu is worse than the second at node {i}")));
    }
    let m1 = solve_delegation(f, beta, menu_1, opts)?;
    let m2 = solve_delegation(f, beta, menu_2, opts)?;
    Ok((m1.cutoff("theta_star").unwrap(), m2.cutoff("theta_star").unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_measure_and_full_discretion() {
        let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let menu = DelegationMenu::standard(0.0, 1.0);
        let (_, mu) = delegation_cfi(&f, 0.1, &menu, 50).unwrap();
        assert!(mu.density().iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert!((mu.atoms()[0] + 0.1).abs() < 1e-15 && (mu.atoms()[50] - 0.1).abs() < 1e-15);
        let m = solve_delegation(&f, 0.1, &menu, &SolveOptions::with_cells(50)).unwrap();
        assert!(m.certified() && m.oracle_matches());
        assert!(m.u.dist_sup(m.cfi.upper()).unwrap() < 1e-12);
    }

    #[test]
    fn missing_tangency_is_rejected() {
        let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let menu = DelegationMenu { items: vec![(0.0, 0.0), (1.0, -0.6)] };
        assert!(delegation_cfi(&f, 0.1, &menu, 20).is_err());
    }

    #[test]
    fn swapped_menus_are_rejected() {
        let f = DistributionSpec::logistic(0.5, 0.06, 0.0, 1.0).unwrap();
        let small = DelegationMenu::standard(0.0, 1.0);
        let big = small.clone().with_action(0.5);
        assert!(delegation_comparative_statics(&f, 0.1, &small, &big, &SolveOptions::with_cells(40)).is_err());
    }
}
