//! The convex function interval itself: validation, membership, extreme
//! point structure and falsification, and majorization intervals.

mod extreme;
mod majorization;

pub use extreme::{
    detect_structure, falsify_extremality, verify_extreme, ExtremeReport, ExtremeStructure, Falsification,
    Piece, SaturationKind, SaturationLabel, StructureFailure,
};
pub use majorization::{iso_from_function, iso_to_function, make_majorization_cfi};

use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction, SlopeInterval};
use crate::tol::Tolerances;

/// Convex functions `u` on the grid with `lower ≤ u ≤ upper` and every cell
/// slope inside `slopes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfi {
    lower: GridFunction,
    upper: GridFunction,
    slopes: SlopeInterval,
    tol: Tolerances,
}

impl Cfi {
    pub fn new(lower: GridFunction, upper: GridFunction, slopes: SlopeInterval) -> Result<Self> {
        Cfi::with_tolerances(lower, upper, slopes, Tolerances::default())
    }

    pub fn with_tolerances(
        lower: GridFunction,
        upper: GridFunction,
        slopes: SlopeInterval,
        tol: Tolerances,
    ) -> Result<Self> {
        lower.grid().ensure_same(upper.grid())?;
        let c = Cfi { lower, upper, slopes, tol };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let t = self.member_tol();
        let h = self.grid().h();
        for (name, f) in [("lower", &self.lower), ("upper", &self.upper)] {
            if let Some((i, d)) = f.convexity_violation(t) {
                return Err(Error::Cfi(format!("{name} boundary not convex at node {i} ({d:e})")));
            }
            for j in 0..self.grid().n_cells() {
                let dv = f.value(j + 1) - f.value(j);
                if dv < self.slopes.s_lo * h - t || dv > self.slopes.s_hi * h + t {
                    return Err(Error::Cfi(format!(
                        "{name} boundary slope {} on cell {j} outside [{}, {}]",
                        dv / h,
                        self.slopes.s_lo,
                        self.slopes.s_hi
                    )));
                }
            }
        }
        for i in 0..self.grid().n_nodes() {
            if self.lower.value(i) > self.upper.value(i) + t {
                return Err(Error::Cfi(format!("lower exceeds upper at node {i}")));
            }
        }
        let cap = self.tol.smooth_cap * h + t;
        for i in 1..self.grid().last() {
            let d = self.upper.second_diff(i);
            if d > cap {
                return Err(Error::Cfi(format!(
                    "upper boundary has a kink at node {i} (second difference {d:e} > {cap:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.lower.grid()
    }

    pub fn lower(&self) -> &GridFunction {
        &self.lower
    }

    pub fn upper(&self) -> &GridFunction {
        &self.upper
    }

    pub fn slopes(&self) -> SlopeInterval {
        self.slopes
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Scale of the boundary values, used to make bands relative.
    fn value_scale(&self) -> f64 {
        1.0 + self.lower.sup_norm().max(self.upper.sup_norm())
    }

    /// Membership band for levels, first and second differences.
    pub fn member_tol(&self) -> f64 {
        self.tol.member * self.value_scale()
    }

    /// A node is pinned to a boundary within this gap.
    pub fn level_tol(&self) -> f64 {
        let gap = self.upper.sub(&self.lower).map(|g| g.sup_norm()).unwrap_or(0.0);
        self.tol.level * (1.0 + gap)
    }

    pub fn slope_tol(&self) -> f64 {
        self.tol.slope * self.slopes.scale()
    }

    /// Second differences above this count as kinks.
    pub fn kink_tol(&self) -> f64 {
        self.slope_tol() * self.grid().h()
    }

    /// First membership violation, if any.
    pub fn membership_violation(&self, u: &GridFunction) -> Option<String> {
        if !u.grid().same_as(self.grid()) {
            return Some("grid differs from the interval's grid".into());
        }
        let t = self.member_tol();
        let h = self.grid().h();
        for i in 0..self.grid().n_nodes() {
            if u.value(i) < self.lower.value(i) - t {
                return Some(format!("below the lower boundary at node {i}"));
            }
            if u.value(i) > self.upper.value(i) + t {
                return Some(format!("above the upper boundary at node {i}"));
            }
        }
        for j in 0..self.grid().n_cells() {
            let dv = u.value(j + 1) - u.value(j);
            if dv < self.slopes.s_lo * h - t || dv > self.slopes.s_hi * h + t {
                return Some(format!("slope {} on cell {j} outside the slope interval", dv / h));
            }
        }
        if let Some((i, d)) = u.convexity_violation(t) {
            return Some(format!("not convex at node {i} (second difference {d:e})"));
        }
        None
    }

    pub fn contains(&self, u: &GridFunction) -> bool {
        self.membership_violation(u).is_none()
    }

    pub fn ensure_member(&self, u: &GridFunction) -> Result<()> {
        match self.membership_violation(u) {
            Some(msg) => Err(Error::NotMember(msg)),
            None => Ok(()),
        }
    }

    /// Lower boundary up to node `theta_star`, then the steepest admissible
    /// ray `lower(θ*) + s_hi (x - θ*)`.
    pub fn cutoff_utility(&self, theta_star: usize) -> Result<GridFunction> {
        self.grid().check_index(theta_star)?;
        let g = *self.grid();
        let x0 = g.node(theta_star);
        let y0 = self.lower.value(theta_star);
        let s = self.slopes.s_hi;
        let t = self.member_tol();
        let mut v = self.lower.values().to_vec();
        for (i, slot) in v.iter_mut().enumerate().skip(theta_star + 1) {
            let y = y0 + s * (g.node(i) - x0);
            if y > self.upper.value(i) + t {
                return Err(Error::Precondition(format!(
                    "steepest ray from node {theta_star} leaves the interval at node {i}"
                )));
            }
            *slot = y;
        }
        GridFunction::new(g, v)
    }

    /// Whether the upper boundary is affine with slope `s`.
    pub fn upper_is_affine_with_slope(&self, s: f64) -> bool {
        let tol = self.slope_tol();
        (0..self.grid().n_cells()).all(|j| (self.upper.slope(j) - s).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn screening(n: usize) -> Cfi {
        let g = Grid::unit(n).unwrap();
        Cfi::new(
            GridFunction::constant(g, 0.0),
            GridFunction::from_fn(g, |x| x),
            SlopeInterval::new(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn boundaries_are_members() {
        let c = screening(20);
        assert!(c.contains(c.lower()));
        assert!(c.contains(c.upper()));
        let bump = c.upper().map(|v| v + 1e-3);
        assert!(!c.contains(&bump));
    }

    #[test]
    fn kinky_upper_is_rejected() {
        let g = Grid::unit(20).unwrap();
        let r = Cfi::new(
            GridFunction::constant(g, -1.0),
            GridFunction::from_fn(g, |x| (x - 0.5).abs()),
            SlopeInterval::new(-1.0, 1.0).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn cutoff_examples() {
        let c = screening(200);
        assert_eq!(c.cutoff_utility(200).unwrap(), *c.lower());
        let id = c.cutoff_utility(0).unwrap();
        assert!(id.dist_sup(c.upper()).unwrap() < 1e-12);
        let half = c.cutoff_utility(100).unwrap();
        assert!((half.value(200) - 0.5).abs() < 1e-12);
    }
}
