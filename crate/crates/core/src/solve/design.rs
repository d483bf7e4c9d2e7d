//! Choosing the lower boundary: an outer objective evaluated at the inner
//! maximizer, scanned over a parameterized family of lower boundaries.

use rayon::prelude::*;

use super::concavify::{concavify_solve, AffineBound};
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction};
use crate::measure::SignedMeasure;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub param: Vec<f64>,
    pub lower: GridFunction,
    pub u_star: GridFunction,
    pub value: f64,
    /// Every scanned parameter with its outer value, in scan order.
    pub scan: Vec<(Vec<f64>, f64)>,
}

/// Replace the template's lower boundary by `u0`.
fn with_lower(template: &Cfi, u0: &GridFunction) -> Result<Cfi> {
    Cfi::with_tolerances(u0.clone(), template.upper().clone(), template.slopes(), template.tolerances())
}

/// Inner maximizer for lower boundary `u0` and its outer value.
pub fn outer_value(
    template: &Cfi,
    inner: &SignedMeasure,
    outer: &SignedMeasure,
    u0: &GridFunction,
) -> Result<(GridFunction, f64)> {
    let c = with_lower(template, u0)?;
    let bound = AffineBound::detect(&c)
        .ok_or_else(|| Error::Precondition("candidate interval is not affinely bounded".into()))?;
    let s = concavify_solve(&c, inner, bound)?;
    let v = outer.integrate(&s.u)?;
    Ok((s.u, v))
}

/// Scan `params`, building each lower boundary with `family`. Ties keep the
/// earliest parameter. A failing inner solve aborts with that parameter.
pub fn design_lower_boundary<F>(
    params: &[Vec<f64>],
    family: F,
    inner: &SignedMeasure,
    outer: &SignedMeasure,
    template: &Cfi,
) -> Result<DesignResult>
where
    F: Fn(&[f64]) -> GridFunction + Sync,
{
    if params.is_empty() {
        return Err(Error::Invalid("empty parameter scan".into()));
    }
    if AffineBound::detect(template).is_none() {
        return Err(Error::Precondition("template interval is not affinely bounded".into()));
    }
    let results: Vec<Result<(GridFunction, GridFunction, f64)>> = params
        .par_iter()
        .map(|p| {
            let u0 = family(p);
            let (u, v) = outer_value(template, inner, outer, &u0)
                .map_err(|e| Error::Solver(format!("inner solve failed at parameter {p:?}: {e}")))?;
            Ok((u0, u, v))
        })
        .collect();
    let mut scan = Vec::with_capacity(params.len());
    let mut best: Option<(usize, GridFunction, GridFunction, f64)> = None;
    for (k, r) in results.into_iter().enumerate() {
        let (u0, u, v) = r?;
        scan.push((params[k].clone(), v));
        if best.as_ref().map_or(true, |b| v > b.3) {
            best = Some((k, u0, u, v));
        }
    }
    let (k, lower, u_star, value) = best.expect("nonempty scan");
    Ok(DesignResult { param: params[k].clone(), lower, u_star, value, scan })
}

/// Lower boundary of the menu `{(0,0), (1,p)}`: `max(0, θ - p)`.
pub fn one_kink_family(grid: Grid) -> impl Fn(&[f64]) -> GridFunction + Sync {
    move |p: &[f64]| GridFunction::from_fn(grid, |x| (x - p[0]).max(0.0))
}

/// Lower boundary of the menu `{(0,0), (1/2,t1), (1,t2)}`.
pub fn two_kink_family(grid: Grid) -> impl Fn(&[f64]) -> GridFunction + Sync {
    move |p: &[f64]| GridFunction::from_fn(grid, |x| (0.5 * x - p[0]).max(x - p[1]).max(0.0))
}

/// Sup distance between the inner maximizer for the mixed boundary and the
/// mix of the inner maximizers.
pub fn linearity_check(
    template: &Cfi,
    inner: &SignedMeasure,
    u0_a: &GridFunction,
    u0_b: &GridFunction,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("mixing weight {alpha} outside [0, 1]")));
    }
    for u0 in [u0_a, u0_b] {
        let c = with_lower(template, u0)?;
        if AffineBound::detect(&c).is_none() {
            return Err(Error::Precondition(
                "interval is not affinely bounded; linearity is not claimed".into(),
            ));
        }
    }
    let solve = |u0: &GridFunction| -> Result<GridFunction> {
        let c = with_lower(template, u0)?;
        let b = AffineBound::detect(&c).expect("checked above");
        Ok(concavify_solve(&c, inner, b)?.u)
    };
    let ua = solve(u0_a)?;
    let ub = solve(u0_b)?;
    let um = solve(&u0_a.mix(u0_b, alpha)?)?;
    um.dist_sup(&ua.mix(&ub, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fn::SlopeInterval;

    fn template(n: usize) -> Cfi {
        let g = Grid::unit(n).unwrap();
        Cfi::new(
            GridFunction::constant(g, 0.0),
            GridFunction::from_fn(g, |x| x),
            SlopeInterval::new(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_mixing_weights() {
        let c = template(100);
        let g = *c.grid();
        let mu = SignedMeasure::from_antiderivative(g, |x| -2.0 * x).with_atom(100, 1.0);
        let f = one_kink_family(g);
        let (a, b) = (f(&[0.3]), f(&[0.7]));
        assert_eq!(linearity_check(&c, &mu, &a, &b, 0.0).unwrap(), 0.0);
        assert_eq!(linearity_check(&c, &mu, &a, &b, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn p_at_one_is_unconstrained_screening() {
        let c = template(100);
        let g = *c.grid();
        let mu = SignedMeasure::from_antiderivative(g, |x| -2.0 * x).with_atom(100, 1.0);
        let (u, _) = outer_value(&c, &mu, &mu, &one_kink_family(g)(&[1.0])).unwrap();
        let s = concavify_solve(&c, &mu, AffineBound::UpperAffine).unwrap();
        assert!(u.dist_sup(&s.u).unwrap() < 1e-12);
    }
}
