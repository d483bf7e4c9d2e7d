//! Real functions sampled on a uniform grid, read as their piecewise-linear
//! interpolants, with envelopes, one-sided derivatives, tangents, chords and
//! the Bregman perturbation used to falsify extremality.

use crate::error::{Error, Result};

/// Uniform partition of `[lo, hi]` into `n_cells` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n_cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Grid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_cells < 2 {
            return Err(Error::Grid(format!("need at least 2 cells, got {n_cells}")));
        }
        Ok(Grid { lo, hi, n_cells })
    }

    pub fn unit(n_cells: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, n_cells)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// Index of the last node.
    pub fn last(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.hi
        } else {
            self.lo + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|i| self.node(i)).collect()
    }

    pub fn mid(&self, cell: usize) -> f64 {
        0.5 * (self.node(cell) + self.node(cell + 1))
    }

    /// Node closest to `x`, clamped to the domain.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.h()).round();
        t.clamp(0.0, self.n_cells as f64) as usize
    }

    /// Cell containing `x` (the last cell for `x = hi`).
    pub fn cell_of(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.h()).floor();
        (t.max(0.0) as usize).min(self.n_cells - 1)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i > self.n_cells {
            Err(Error::Index { index: i, last: self.n_cells })
        } else {
            Ok(())
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_cells == other.n_cells
            && (self.lo - other.lo).abs() <= 1e-12 * (1.0 + self.lo.abs())
            && (self.hi - other.hi).abs() <= 1e-12 * (1.0 + self.hi.abs())
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Admissible subgradient range `[s_lo, s_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeInterval {
    pub s_lo: f64,
    pub s_hi: f64,
}

impl SlopeInterval {
    pub fn new(s_lo: f64, s_hi: f64) -> Result<Self> {
        if !(s_lo.is_finite() && s_hi.is_finite()) || s_lo > s_hi {
            return Err(Error::Invalid(format!("slope interval [{s_lo}, {s_hi}]")));
        }
        Ok(SlopeInterval { s_lo, s_hi })
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.s_lo.abs() + self.s_hi.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Node values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Invalid(format!(
                "expected {} node values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at node {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.n_nodes()] }
    }

    /// The affine function through `(x0, y0)` with slope `s`.
    pub fn affine(grid: Grid, x0: f64, y0: f64, s: f64) -> Self {
        GridFunction::from_fn(grid, |x| y0 + s * (x - x0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear interpolant at `x` (clamped to the domain).
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.lo {
            return self.values[0];
        }
        if x >= g.hi {
            return self.values[g.last()];
        }
        let j = g.cell_of(x);
        let t = (x - g.node(j)) / g.h();
        self.values[j] + t * (self.values[j + 1] - self.values[j])
    }

    /// Slope of the interpolant on cell `j`.
    pub fn slope(&self, j: usize) -> f64 {
        (self.values[j + 1] - self.values[j]) / self.grid.h()
    }

    pub fn slopes(&self) -> Vec<f64> {
        (0..self.grid.n_cells()).map(|j| self.slope(j)).collect()
    }

    /// `v[i+1] - 2 v[i] + v[i-1]` at an interior node.
    pub fn second_diff(&self, i: usize) -> f64 {
        self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First interior node whose second difference is below `-tol`.
    pub fn convexity_violation(&self, tol: f64) -> Option<(usize, f64)> {
        (1..self.grid.last())
            .map(|i| (i, self.second_diff(i)))
            .find(|&(_, d)| d < -tol)
    }

    /// Convexity test on second differences, relative to the sup norm.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.convexity_violation(tol * (1.0 + self.sup_norm())).is_none()
    }

    fn require_convex(&self) -> Result<()> {
        match self.convexity_violation(1e-9 * (1.0 + self.sup_norm())) {
            Some((node, value)) => Err(Error::NotConvex { node, value }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &GridFunction, alpha: f64) -> Result<Self> {
        self.zip_with(other, |a, b| alpha * a + (1.0 - alpha) * b)
    }

    pub fn max_with(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn dist_sup(&self, other: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Greatest convex grid function below `self` (lower convex hull).
    pub fn vex(&self) -> GridFunction {
        let hull = lower_hull(&self.values);
        let mut out = vec![0.0; self.values.len()];
        for w in hull.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ya, yb) = (self.values[a], self.values[b]);
            for (k, slot) in out.iter_mut().enumerate().take(b + 1).skip(a) {
                let t = (k - a) as f64 / (b - a) as f64;
                *slot = if k == a {
                    ya
                } else if k == b {
                    yb
                } else {
                    ya + t * (yb - ya)
                };
            }
        }
        if hull.len() == 1 {
            out[0] = self.values[0];
        }
        GridFunction { grid: self.grid, values: out }
    }

    /// Least concave grid function above `self`.
    pub fn cav(&self) -> GridFunction {
        self.scale(-1.0).vex().scale(-1.0)
    }

    /// Left and right difference quotients at node `i`; the side missing at a
    /// domain end is reported as an infinite sentinel.
    pub fn subgradient_range(&self, i: usize) -> Result<(f64, f64)> {
        self.grid.check_index(i)?;
        self.require_convex()?;
        Ok(self.diff_quotients(i))
    }

    pub(crate) fn diff_quotients(&self, i: usize) -> (f64, f64) {
        let left = if i == 0 { f64::NEG_INFINITY } else { self.slope(i - 1) };
        let right = if i == self.grid.last() { f64::INFINITY } else { self.slope(i) };
        (left, right)
    }

    /// Supporting line through node `y` with the one-sided slope on `side`.
    pub fn tangent(&self, y: usize, side: Side) -> Result<GridFunction> {
        self.grid.check_index(y)?;
        self.require_convex()?;
        self.tangent_unchecked(y, side)
    }

    fn tangent_unchecked(&self, y: usize, side: Side) -> Result<GridFunction> {
        let s = match side {
            Side::Left if y == 0 => {
                return Err(Error::Invalid("no left derivative at the left end".into()))
            }
            Side::Right if y == self.grid.last() => {
                return Err(Error::Invalid("no right derivative at the right end".into()))
            }
            Side::Left => self.slope(y - 1),
            Side::Right => self.slope(y),
        };
        Ok(GridFunction::affine(self.grid, self.grid.node(y), self.values[y], s))
    }

    /// The affine function through nodes `a < b`, extended to the whole grid.
    pub fn chord(&self, a: usize, b: usize) -> Result<GridFunction> {
        self.grid.check_index(b)?;
        if a >= b {
            return Err(Error::Invalid(format!("chord needs a < b, got {a} >= {b}")));
        }
        let (ya, yb) = (self.values[a], self.values[b]);
        let span = (b - a) as f64;
        let values = (0..self.grid.n_nodes())
            .map(|k| ya + (k as f64 - a as f64) / span * (yb - ya))
            .collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// `vex(u + g) - u` where `g = u - max(t_a, t_b)` on `[a, b]` and zero
    /// elsewhere, with `t_a` the right tangent at `a` and `t_b` the left
    /// tangent at `b`. Nonnegative, supported on `[a, b]`, and zero exactly
    /// when `u` has at most two kinks strictly inside `(a, b)`.
    pub fn bregman_perturbation(&self, a: usize, b: usize) -> Result<GridFunction> {
        self.grid.check_index(b)?;
        if a >= b {
            return Err(Error::Invalid(format!("perturbation needs a < b, got {a} >= {b}")));
        }
        self.require_convex()?;
        let ta = self.tangent_unchecked(a, Side::Right)?;
        let tb = self.tangent_unchecked(b, Side::Left)?;
        let mut lifted = self.values.clone();
        for k in a..=b {
            let g = (self.values[k] - ta.values[k].max(tb.values[k])).max(0.0);
            lifted[k] += g;
        }
        let env = GridFunction { grid: self.grid, values: lifted }.vex();
        let mut h: Vec<f64> =
            env.values.iter().zip(&self.values).map(|(e, u)| (e - u).max(0.0)).collect();
        for (k, v) in h.iter_mut().enumerate() {
            if k <= a || k >= b {
                *v = 0.0;
            }
        }
        Ok(GridFunction { grid: self.grid, values: h })
    }
}

/// Indices of the lower convex hull of `(i, y_i)`, monotone chain.
fn lower_hull(y: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            // keep `a` only if it lies strictly below the segment o -> i
            let cross = (a - o) as f64 * (y[i] - y[o]) - (y[a] - y[o]) * (i - o) as f64;
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::unit(n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(1.0, 0.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let g = unit(4);
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn vex_of_convex_is_identity() {
        let f = GridFunction::from_fn(unit(50), |x| x * x);
        assert_eq!(f.vex().values(), f.values());
    }

    #[test]
    fn vex_of_tent_is_zero() {
        let f = GridFunction::from_fn(unit(50), |x| x.min(1.0 - x));
        assert!(f.vex().sup_norm() < 1e-15);
    }

    #[test]
    fn cav_of_square_is_chord() {
        let f = GridFunction::from_fn(unit(40), |x| x * x);
        let c = f.cav();
        for (x, v) in unit(40).nodes().iter().zip(c.values()) {
            assert!((v - x).abs() < 1e-14);
        }
    }

    #[test]
    fn subgradients_of_square() {
        let f = GridFunction::from_fn(unit(200), |x| x * x);
        let (l, r) = f.subgradient_range(100).unwrap();
        assert!((l - 0.995).abs() < 1e-9 && (r - 1.005).abs() < 1e-9);
        let (l0, _) = f.subgradient_range(0).unwrap();
        assert_eq!(l0, f64::NEG_INFINITY);
        let t = f.tangent(100, Side::Right).unwrap();
        assert!((t.eval(1.0) - (0.25 + 0.5 * 1.005)).abs() < 1e-9);
        assert!(t.values().iter().zip(f.values()).all(|(a, b)| a <= &(b + 1e-15)));
    }

    #[test]
    fn subgradient_of_abs_kink() {
        let f = GridFunction::from_fn(unit(100), |x| (x - 0.5).abs());
        let (l, r) = f.subgradient_range(50).unwrap();
        assert!((l + 1.0).abs() < 1e-9 && (r - 1.0).abs() < 1e-9);
        assert!(f.scale(-1.0).subgradient_range(50).is_err());
    }

    #[test]
    fn chord_properties() {
        let f = GridFunction::from_fn(unit(20), |x| x * x);
        let c = f.chord(0, 20).unwrap();
        for (x, v) in unit(20).nodes().iter().zip(c.values()) {
            assert!((v - x).abs() < 1e-14);
        }
        assert!(f.chord(5, 5).is_err());
    }

    #[test]
    fn bregman_zero_on_two_pieces() {
        let f = GridFunction::from_fn(unit(40), |x| (0.2 * x).max(2.0 * x - 1.0));
        let h = f.bregman_perturbation(0, 40).unwrap();
        assert!(h.sup_norm() < 1e-14);
        let aff = GridFunction::from_fn(unit(40), |x| 3.0 * x - 1.0);
        assert!(aff.bregman_perturbation(3, 30).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn bregman_positive_on_square() {
        let g = Grid::new(0.1, 0.9, 80).unwrap();
        let u = GridFunction::from_fn(g, |x| x * x);
        let h = u.bregman_perturbation(0, 80).unwrap();
        assert!(h.values()[2..79].iter().all(|&v| v > 0.0));
        assert!(u.add(&h).unwrap().is_convex(1e-9));
        assert!(u.sub(&h).unwrap().is_convex(1e-9));
    }
}
