//! Finite signed measures on a grid and the stochastic-order predicates used
//! by the optimality verifier.
//!
//! A measure is a vector of node atoms plus a density that is constant on
//! each cell. Integrals of piecewise-linear functions against such a measure
//! reduce to node weights, and stop-loss transforms are evaluated in closed
//! form cell by cell.

use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction};

/// Node-aligned closed span `[lo, hi]`, with flags deciding whether the
/// atoms sitting on its end nodes are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
    pub include_lo: bool,
    pub include_hi: bool,
}

impl Span {
    pub fn closed(lo: usize, hi: usize) -> Self {
        Span { lo, hi, include_lo: true, include_hi: true }
    }

    pub fn half_open(lo: usize, hi: usize) -> Self {
        Span { lo, hi, include_lo: true, include_hi: false }
    }

    fn atom_included(&self, i: usize) -> bool {
        if i < self.lo || i > self.hi {
            return false;
        }
        if i == self.lo && !self.include_lo {
            return false;
        }
        if i == self.hi && !self.include_hi {
            return false;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    grid: Grid,
    atoms: Vec<f64>,
    density: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(grid: Grid, atoms: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if atoms.len() != grid.n_nodes() || density.len() != grid.n_cells() {
            return Err(Error::Invalid(format!(
                "measure needs {} atoms and {} cell densities, got {} and {}",
                grid.n_nodes(),
                grid.n_cells(),
                atoms.len(),
                density.len()
            )));
        }
        if atoms.iter().chain(&density).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite measure entry".into()));
        }
        Ok(SignedMeasure { grid, atoms, density })
    }

    pub fn zero(grid: Grid) -> Self {
        SignedMeasure { grid, atoms: vec![0.0; grid.n_nodes()], density: vec![0.0; grid.n_cells()] }
    }

    /// Atoms only, given as `(node, mass)` pairs; repeated nodes accumulate.
    pub fn from_atoms(grid: Grid, atoms: &[(usize, f64)]) -> Result<Self> {
        let mut m = SignedMeasure::zero(grid);
        for &(i, w) in atoms {
            grid.check_index(i)?;
            m.atoms[i] += w;
        }
        Ok(m)
    }

    pub fn point_mass(grid: Grid, node: usize, mass: f64) -> Result<Self> {
        SignedMeasure::from_atoms(grid, &[(node, mass)])
    }

    /// Density from a pointwise function, one value per cell midpoint.
    pub fn from_density_fn(grid: Grid, psi: impl Fn(f64) -> f64) -> Self {
        let density = (0..grid.n_cells()).map(|j| psi(grid.mid(j))).collect();
        SignedMeasure { grid, atoms: vec![0.0; grid.n_nodes()], density }
    }

    /// Density from an antiderivative `Psi` with `Psi' = psi`: each cell gets
    /// its exact average `(Psi(x_{j+1}) - Psi(x_j)) / h`.
    pub fn from_antiderivative(grid: Grid, anti: impl Fn(f64) -> f64) -> Self {
        let h = grid.h();
        let vals: Vec<f64> = grid.nodes().into_iter().map(anti).collect();
        let density = vals.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        SignedMeasure { grid, atoms: vec![0.0; grid.n_nodes()], density }
    }

    pub fn with_atom(mut self, node: usize, mass: f64) -> Self {
        self.atoms[node] += mass;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Nonzero atoms as `(node, mass)` pairs.
    pub fn atom_list(&self) -> Vec<(usize, f64)> {
        self.atoms.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(i, &w)| (i, w)).collect()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn add(&self, other: &SignedMeasure) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SignedMeasure) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &SignedMeasure, sign: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let atoms = self.atoms.iter().zip(&other.atoms).map(|(a, b)| a + sign * b).collect();
        let density = self.density.iter().zip(&other.density).map(|(a, b)| a + sign * b).collect();
        Ok(SignedMeasure { grid: self.grid, atoms, density })
    }

    pub fn scale(&self, c: f64) -> Self {
        SignedMeasure {
            grid: self.grid,
            atoms: self.atoms.iter().map(|a| c * a).collect(),
            density: self.density.iter().map(|d| c * d).collect(),
        }
    }

    pub fn total_variation(&self) -> f64 {
        let h = self.grid.h();
        self.atoms.iter().map(|a| a.abs()).sum::<f64>()
            + self.density.iter().map(|d| d.abs() * h).sum::<f64>()
    }

    /// Node weights `w` such that `∫ u dμ = Σ w_i u_i` for every
    /// piecewise-linear `u`: atoms plus half of each adjacent cell's mass.
    pub fn node_weights(&self) -> Vec<f64> {
        let h = self.grid.h();
        let mut w = self.atoms.clone();
        for (j, &d) in self.density.iter().enumerate() {
            w[j] += 0.5 * d * h;
            w[j + 1] += 0.5 * d * h;
        }
        w
    }

    /// The atomic measure carrying `node_weights` at the nodes.
    pub fn lumped(&self) -> SignedMeasure {
        SignedMeasure {
            grid: self.grid,
            atoms: self.node_weights(),
            density: vec![0.0; self.grid.n_cells()],
        }
    }

    pub fn integrate(&self, u: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(u.grid())?;
        Ok(self.node_weights().iter().zip(u.values()).map(|(w, v)| w * v).sum())
    }

    fn check_span(&self, s: &Span) -> Result<()> {
        self.grid.check_index(s.hi)?;
        if s.lo > s.hi {
            return Err(Error::Invalid(format!("span [{}, {}] is reversed", s.lo, s.hi)));
        }
        Ok(())
    }

    pub fn total_mass(&self, over: Span) -> Result<f64> {
        self.check_span(&over)?;
        let h = self.grid.h();
        let atoms: f64 = (over.lo..=over.hi).filter(|&i| over.atom_included(i)).map(|i| self.atoms[i]).sum();
        let dens: f64 = self.density[over.lo..over.hi].iter().sum::<f64>() * h;
        Ok(atoms + dens)
    }

    /// First moment `∫ x dμ` over the span.
    pub fn barycenter(&self, over: Span) -> Result<f64> {
        self.check_span(&over)?;
        let g = &self.grid;
        let h = g.h();
        let atoms: f64 = (over.lo..=over.hi)
            .filter(|&i| over.atom_included(i))
            .map(|i| g.node(i) * self.atoms[i])
            .sum();
        let dens: f64 = (over.lo..over.hi).map(|j| self.density[j] * h * g.mid(j)).sum();
        Ok(atoms + dens)
    }

    pub fn mass(&self) -> f64 {
        self.total_mass(Span::closed(0, self.grid.last())).unwrap()
    }

    pub fn first_moment(&self) -> f64 {
        self.barycenter(Span::closed(0, self.grid.last())).unwrap()
    }

    /// Copy keeping only what lies in the span.
    pub fn restrict(&self, over: Span) -> Result<SignedMeasure> {
        self.check_span(&over)?;
        let mut out = SignedMeasure::zero(self.grid);
        for i in over.lo..=over.hi {
            if over.atom_included(i) {
                out.atoms[i] = self.atoms[i];
            }
        }
        out.density[over.lo..over.hi].copy_from_slice(&self.density[over.lo..over.hi]);
        Ok(out)
    }

    /// `∫ (x - t)⁺ dμ`, exact for the piecewise-constant density.
    pub fn stop_loss(&self, t: f64) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let mut s = 0.0;
        for (i, &a) in self.atoms.iter().enumerate() {
            let x = g.node(i);
            if x > t {
                s += a * (x - t);
            }
        }
        for (j, &d) in self.density.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let (xl, xr) = (g.node(j), g.node(j + 1));
            if t <= xl {
                s += d * h * (g.mid(j) - t);
            } else if t < xr {
                s += d * 0.5 * (xr - t) * (xr - t);
            }
        }
        s
    }

    /// `∫ (t - x)⁺ dμ`, exact for the piecewise-constant density.
    pub fn stop_loss_left(&self, t: f64) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let mut s = 0.0;
        for (i, &a) in self.atoms.iter().enumerate() {
            let x = g.node(i);
            if x < t {
                s += a * (t - x);
            }
        }
        for (j, &d) in self.density.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let (xl, xr) = (g.node(j), g.node(j + 1));
            if t >= xr {
                s += d * h * (t - g.mid(j));
            } else if t > xl {
                s += d * 0.5 * (t - xl) * (t - xl);
            }
        }
        s
    }

    /// Points where a stop-loss transform can reach its minimum: nodes,
    /// cell midpoints, and the interior stationary point of any cell where
    /// the transform is convex in `t`.
    fn test_points(&self, right_tail: bool) -> Vec<f64> {
        let g = &self.grid;
        let mut pts = g.nodes();
        pts.extend((0..g.n_cells()).map(|j| g.mid(j)));
        let h = g.h();
        for (j, &d) in self.density.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            // derivative in t of the right tail is -μ((t, hi]), of the left tail μ([lo, t))
            let (xl, xr) = (g.node(j), g.node(j + 1));
            let beyond: f64 = if right_tail {
                self.atoms[j + 1..].iter().sum::<f64>() + self.density[j + 1..].iter().sum::<f64>() * h
            } else {
                -(self.atoms[..=j].iter().sum::<f64>() + self.density[..j].iter().sum::<f64>() * h)
            };
            // right tail: S'(t) = -(beyond + d (xr - t)); left tail: S'(t) = -beyond + d (t - xl)
            let t = if right_tail { xr + beyond / d } else { xl + beyond / d };
            if t > xl && t < xr {
                pts.push(t);
            }
        }
        pts
    }

    fn min_stop_loss(&self, right_tail: bool) -> f64 {
        self.test_points(right_tail)
            .into_iter()
            .map(|t| if right_tail { self.stop_loss(t) } else { self.stop_loss_left(t) })
            .fold(f64::INFINITY, f64::min)
    }

    /// Split into nonnegative parts with `self = pos - neg`.
    pub fn hahn_decompose(&self) -> (SignedMeasure, SignedMeasure) {
        let pos = SignedMeasure {
            grid: self.grid,
            atoms: self.atoms.iter().map(|a| a.max(0.0)).collect(),
            density: self.density.iter().map(|d| d.max(0.0)).collect(),
        };
        let neg = SignedMeasure {
            grid: self.grid,
            atoms: self.atoms.iter().map(|a| (-a).max(0.0)).collect(),
            density: self.density.iter().map(|d| (-d).max(0.0)).collect(),
        };
        (pos, neg)
    }

    /// Values of the order statistics of `self` seen as a difference `n - m`.
    pub fn order_profile(&self) -> OrderProfile {
        OrderProfile {
            mass: self.mass(),
            moment: self.first_moment(),
            min_right: self.min_stop_loss(true),
            min_left: self.min_stop_loss(false),
        }
    }
}

/// Summary statistics of a difference measure `d = n - m` that decide the
/// convex orders: `m ≤cx n` iff mass and moment vanish and `min_right ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderProfile {
    pub mass: f64,
    pub moment: f64,
    /// Minimum over `t` of `∫ (x - t)⁺ dd`.
    pub min_right: f64,
    /// Minimum over `t` of `∫ (t - x)⁺ dd`.
    pub min_left: f64,
}

impl OrderProfile {
    /// Slack of the convex order: the smallest of the signed margins.
    pub fn cx_slack(&self) -> f64 {
        (-self.mass.abs()).min(-self.moment.abs()).min(self.min_right)
    }

    pub fn icx_slack(&self) -> f64 {
        (-self.mass.abs()).min(self.min_right)
    }

    pub fn dcx_slack(&self) -> f64 {
        (-self.mass.abs()).min(self.min_left)
    }
}

/// Default order tolerance for a pair of measures.
pub fn order_tol(m: &SignedMeasure, n: &SignedMeasure) -> f64 {
    1e-9 * (1.0 + m.total_variation() + n.total_variation())
}

fn difference(m: &SignedMeasure, n: &SignedMeasure) -> Result<OrderProfile> {
    Ok(n.sub(m)?.order_profile())
}

/// `m ≤cx n`.
pub fn leq_cx(m: &SignedMeasure, n: &SignedMeasure) -> Result<bool> {
    leq_cx_tol(m, n, order_tol(m, n))
}

pub fn leq_cx_tol(m: &SignedMeasure, n: &SignedMeasure, tol: f64) -> Result<bool> {
    Ok(difference(m, n)?.cx_slack() >= -tol)
}

/// `m ≤icx n`, with equal masses.
pub fn leq_icx(m: &SignedMeasure, n: &SignedMeasure) -> Result<bool> {
    leq_icx_tol(m, n, order_tol(m, n))
}

pub fn leq_icx_tol(m: &SignedMeasure, n: &SignedMeasure, tol: f64) -> Result<bool> {
    Ok(difference(m, n)?.icx_slack() >= -tol)
}

/// `m ≤dcx n`, with equal masses.
pub fn leq_dcx(m: &SignedMeasure, n: &SignedMeasure) -> Result<bool> {
    leq_dcx_tol(m, n, order_tol(m, n))
}

pub fn leq_dcx_tol(m: &SignedMeasure, n: &SignedMeasure, tol: f64) -> Result<bool> {
    Ok(difference(m, n)?.dcx_slack() >= -tol)
}

/// `m ≤cx mass·δ_p` with `mass ≥ 0`.
pub fn leq_cx_pointmass(m: &SignedMeasure, p: usize, mass: f64) -> Result<bool> {
    let n = SignedMeasure::point_mass(*m.grid(), p, mass)?;
    let tol = order_tol(m, &n);
    Ok(mass >= -tol && leq_cx_tol(m, &n, tol)?)
}
