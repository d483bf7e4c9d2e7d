//! Mean-based persuasion with informativeness bounds. The posterior-mean
//! distribution must be a mean-preserving contraction of the prior lying
//! between two bounds; its integrated cdf `I(x) = -∫_x^hi G` ranges over the
//! interval between the bounds' integrated cdfs.

use super::dist::DistributionSpec;
use super::mechanism::{ceiling_family_best, certify, right_slopes, window, Mechanism, SolveOptions};
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction, SlopeInterval};
use crate::lp::cfi_lp;
use crate::measure::SignedMeasure;

/// The contraction `G(x) = F((x - (1-λ)·mean)/λ)` of a prior `F`; `λ = 1`
/// is the prior itself and smaller `λ` pools more.
#[derive(Debug, Clone, PartialEq)]
pub struct Contraction {
    pub prior: DistributionSpec,
    pub lambda: f64,
    mean: f64,
}

impl Contraction {
    pub fn new(prior: DistributionSpec, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Invalid(format!("contraction weight {lambda} outside (0, 1]")));
        }
        let mean = prior.mean();
        Ok(Contraction { prior, lambda, mean })
    }

    fn shift(&self) -> f64 {
        (1.0 - self.lambda) * self.mean
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.shift()) / self.lambda;
        if s <= self.prior.lo {
            0.0
        } else if s >= self.prior.hi {
            1.0
        } else {
            self.prior.cdf(s)
        }
    }

    /// `-∫_x^hi G`.
    pub fn integrated(&self, x: f64) -> f64 {
        let (c, l) = (self.shift(), self.lambda);
        let hi = self.prior.hi;
        -l * (extended_integral(&self.prior, (hi - c) / l) - extended_integral(&self.prior, (x - c) / l))
    }
}

/// `∫_{-∞}^s F` with `F = 0` below the support and `1` above it.
fn extended_integral(f: &DistributionSpec, s: f64) -> f64 {
    if s <= f.lo {
        0.0
    } else if s >= f.hi {
        cdf_integral(f, f.hi) + (s - f.hi)
    } else {
        cdf_integral(f, s)
    }
}

/// `∫_lo^x F`, exact for uniform priors.
fn cdf_integral(f: &DistributionSpec, x: f64) -> f64 {
    use super::dist::DistKind;
    let x = x.clamp(f.lo, f.hi);
    match &f.kind {
        DistKind::Uniform => (x - f.lo).powi(2) / (2.0 * (f.hi - f.lo)),
        _ => {
            let n = 2000;
            let d = (x - f.lo) / (2 * n) as f64;
            if d == 0.0 {
                return 0.0;
            }
            let mut s = f.cdf(f.lo) + f.cdf(x);
            for k in 1..2 * n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f.cdf(f.lo + k as f64 * d);
            }
            s * d / 3.0
        }
    }
}

/// Sender's value as a function of the posterior mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueSpec {
    /// `1/(1 + exp(-k (x - c)))`: convex below `c`, concave above.
    Logistic { center: f64, steepness: f64 },
    /// `a x²`.
    Quadratic { a: f64 },
}

impl ValueSpec {
    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            ValueSpec::Logistic { center, steepness } => {
                let s = 1.0 / (1.0 + (-steepness * (x - center)).exp());
                steepness * s * (1.0 - s)
            }
            ValueSpec::Quadratic { a } => 2.0 * a * x,
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            ValueSpec::Logistic { center, steepness } => {
                let s = 1.0 / (1.0 + (-steepness * (x - center)).exp());
                steepness * steepness * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            ValueSpec::Quadratic { a } => 2.0 * a,
        }
    }
}

pub fn persuasion_cfi(
    prior: &DistributionSpec,
    g_lower: &Contraction,
    g_upper: &Contraction,
    v: &ValueSpec,
    n_cells: usize,
) -> Result<(Cfi, SignedMeasure)> {
    if g_lower.prior != *prior || g_upper.prior != *prior {
        return Err(Error::Precondition("bounds must be contractions of the prior".into()));
    }
    if g_lower.lambda > g_upper.lambda {
        return Err(Error::Precondition("lower bound must be less informative than the upper bound".into()));
    }
    let grid = Grid::new(prior.lo, prior.hi, n_cells)?;
    let lower = GridFunction::from_fn(grid, |x| g_lower.integrated(x));
    let upper = GridFunction::from_fn(grid, |x| g_upper.integrated(x));
    let full_info = Contraction::new(prior.clone(), 1.0)?;
    let full = GridFunction::from_fn(grid, |x| full_info.integrated(x));
    let t = 1e-12;
    if (0..grid.n_nodes()).any(|i| lower.value(i) > upper.value(i) + t || upper.value(i) > full.value(i) + t) {
        return Err(Error::Precondition("integrated bounds are not ordered".into()));
    }
    let c = Cfi::new(lower, upper, SlopeInterval::new(0.0, 1.0)?)?;
    let mu = SignedMeasure::from_antiderivative(grid, |x| v.d1(x)).with_atom(0, v.d1(grid.lo()));
    Ok((c, mu))
}

/// Censorship cutoff of the continuous problem: the point where the first
/// moment of `v''` over `[x, h(x)]` about `x` changes sign from positive.
pub fn x_star_continuous(g_lower: &Contraction, g_upper: &Contraction, v: &ValueSpec) -> f64 {
    let (lo, hi) = (g_upper.prior.lo, g_upper.prior.hi);
    let reach = |x: f64| {
        // the tangent can run along the lower bound, so ties count as above
        let gap = |z: f64| g_upper.integrated(x) + g_upper.cdf(x) * (z - x) - g_lower.integrated(z) + 1e-12;
        if gap(hi) >= 0.0 {
            return hi;
        }
        let (mut a, mut b) = (x, hi);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if gap(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let moment = |x: f64| {
        let h = reach(x);
        let n = 256;
        let d = (h - x) / (2 * n) as f64;
        if d <= 0.0 {
            return 0.0;
        }
        let f = |z: f64| (z - x) * v.d2(z);
        let mut s = f(x) + f(h);
        for k in 1..2 * n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x + k as f64 * d);
        }
        s * d / 3.0
    };
    let steps = 400;
    let pts: Vec<f64> = (0..steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    if moment(pts[0]) <= 0.0 {
        return lo;
    }
    let mut prev = pts[0];
    for &x in &pts[1..] {
        if moment(x) <= 0.0 {
            let (mut a, mut b) = (prev, x);
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
        prev = x;
    }
    hi
}

/// Whether `v''` changes sign at most once, from positive to negative.
fn single_crossing_from_above(v: &ValueSpec, grid: &Grid) -> bool {
    let mut seen_negative = false;
    for x in grid.nodes() {
        let d = v.d2(x);
        if d < -1e-12 {
            seen_negative = true;
        } else if d > 1e-12 && seen_negative {
            return false;
        }
    }
    true
}

pub fn solve_persuasion_sshaped(
    prior: &DistributionSpec,
    g_lower: &Contraction,
    g_upper: &Contraction,
    v: &ValueSpec,
    opts: &SolveOptions,
) -> Result<Mechanism> {
    let (c0, mu) = persuasion_cfi(prior, g_lower, g_upper, v, opts.n_cells)?;
    let c = Cfi::with_tolerances(c0.lower().clone(), c0.upper().clone(), c0.slopes(), opts.tol)?;
    let grid = *c.grid();
    if !single_crossing_from_above(v, &grid) {
        return Err(Error::Precondition("value is not S-shaped".into()));
    }
    let n = grid.last();
    let x_c = x_star_continuous(g_lower, g_upper, v);
    let center = grid.nearest(x_c);
    let band = |v: f64, o: Option<f64>| o.map_or(true, |o| (o - v).abs() <= opts.tol.lp_gap * (1.0 + v.abs()));

    let attempt = |anchors: Vec<usize>, reach: usize| -> Result<(GridFunction, usize, _)> {
        let (u, _, y) = ceiling_family_best(&c, &mu, &anchors, reach)?;
        let cert = certify(&c, &u, &mu, None, opts.oracle)?;
        Ok((u, y, cert))
    };
    let (mut u, mut y, mut cert) = attempt(window(center, 6 + n / 20, n), 6)?;
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
    let lt = c.level_tol();
    let pool_end = (y..=n).find(|&i| u.value(i) - c.lower().value(i) <= lt).unwrap_or(n);
    let x_star = grid.node(y);
    Ok(Mechanism {
        value: mu.integrate(&u)?,
        cfi: c,
        allocation: right_slopes(&u).map(|s| s.clamp(0.0, 1.0)),
        measure: mu,
        u,
        transfer: GridFunction::constant(grid, 0.0),
        cutoffs: vec![("x_star".into(), x_star), ("x_star_continuous".into(), x_c)],
        intervals: vec![("pooling".into(), x_star, grid.node(pool_end))],
        report,
        extreme,
        oracle,
        constructive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior() -> DistributionSpec {
        DistributionSpec::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn integrated_contraction_is_exact_for_uniform() {
        let g = Contraction::new(prior(), 1.0).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((g.integrated(x) - (0.5 * x * x - 0.5)).abs() < 1e-15);
        }
        let half = Contraction::new(prior(), 0.5).unwrap();
        assert!((half.integrated(0.0) + 0.5).abs() < 1e-15);
        assert!((half.cdf(0.25)).abs() < 1e-15 && (half.cdf(0.75) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_bounds_give_a_singleton() {
        let g = Contraction::new(prior(), 0.5).unwrap();
        let (c, _) = persuasion_cfi(&prior(), &g, &g, &ValueSpec::Quadratic { a: 1.0 }, 40).unwrap();
        assert_eq!(c.lower(), c.upper());
    }

    #[test]
    fn convex_value_reveals_fully() {
        let gl = Contraction::new(prior(), 0.3).unwrap();
        let gu = Contraction::new(prior(), 1.0).unwrap();
        let v = ValueSpec::Quadratic { a: 1.0 };
        assert_eq!(x_star_continuous(&gl, &gu, &v), 1.0);
        let m = solve_persuasion_sshaped(&prior(), &gl, &gu, &v, &SolveOptions::with_cells(50)).unwrap();
        assert!(m.u.dist_sup(m.cfi.upper()).unwrap() < 1e-12);
        assert!(m.certified() && m.oracle_matches());
    }

    #[test]
    fn concave_value_reveals_minimally() {
        let gl = Contraction::new(prior(), 0.3).unwrap();
        let gu = Contraction::new(prior(), 1.0).unwrap();
        let v = ValueSpec::Quadratic { a: -1.0 };
        assert_eq!(x_star_continuous(&gl, &gu, &v), 0.0);
        let m = solve_persuasion_sshaped(&prior(), &gl, &gu, &v, &SolveOptions::with_cells(50)).unwrap();
        assert!(m.u.dist_sup(m.cfi.lower()).unwrap() < 1e-12);
    }
}

