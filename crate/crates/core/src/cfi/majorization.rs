//! Majorization intervals through the integral map `T[φ](x) = ∫_lo^x φ - ∫ φ`.

use super::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{GridFunction, SlopeInterval};
use crate::tol::Tolerances;

/// Cumulative trapezoid integral minus the total, so `T[φ](hi) = 0`.
pub fn iso_to_function(phi: &GridFunction) -> GridFunction {
    let h = phi.grid().h();
    let v = phi.values();
    let mut acc = vec![0.0; v.len()];
    for i in 1..v.len() {
        acc[i] = acc[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    }
    let total = acc[v.len() - 1];
    GridFunction::new(*phi.grid(), acc.into_iter().map(|a| a - total).collect())
        .expect("finite cumulative integral")
}

/// Right difference quotients (left quotient at the last node).
pub fn iso_from_function(big_i: &GridFunction) -> GridFunction {
    let n = big_i.grid().last();
    let v: Vec<f64> = (0..=n).map(|i| big_i.slope(i.min(n - 1))).collect();
    GridFunction::new(*big_i.grid(), v).expect("finite slopes")
}

/// Interval `I_f ≤ I ≤ I_g` of integrals of monotone functions between a
/// majorizing `f` and a majorized `g`. With `weak`, means may differ and the
/// slope floor is `s_floor`; otherwise slopes range over `[f(lo), f(hi)]`.
pub fn make_majorization_cfi(
    f: &GridFunction,
    g: &GridFunction,
    weak: bool,
    s_floor: Option<f64>,
) -> Result<Cfi> {
    make_majorization_cfi_tol(f, g, weak, s_floor, Tolerances::default())
}

pub fn make_majorization_cfi_tol(
    f: &GridFunction,
    g: &GridFunction,
    weak: bool,
    s_floor: Option<f64>,
    tol: Tolerances,
) -> Result<Cfi> {
    f.grid().ensure_same(g.grid())?;
    let scale = 1.0 + f.sup_norm().max(g.sup_norm());
    let mt = tol.member * scale;
    for (name, phi) in [("f", f), ("g", g)] {
        if let Some(j) = (0..phi.grid().n_cells()).find(|&j| phi.value(j + 1) < phi.value(j) - mt) {
            return Err(Error::Precondition(format!("{name} decreases on cell {j}")));
        }
    }
    let i_f = iso_to_function(f);
    let i_g = iso_to_function(g);
    if let Some(i) = (0..f.len()).find(|&i| i_f.value(i) > i_g.value(i) + mt) {
        return Err(Error::Precondition(format!("majorization fails at node {i}")));
    }
    let n = f.grid().last();
    let slopes = if weak {
        let lo = s_floor.ok_or_else(|| Error::Invalid("weak majorization needs a slope floor".into()))?;
        SlopeInterval::new(lo, f.value(n))?
    } else {
        if (i_f.value(0) - i_g.value(0)).abs() > mt {
            return Err(Error::Precondition("means differ under strict majorization".into()));
        }
        SlopeInterval::new(f.value(0), f.value(n))?
    };
    Cfi::with_tolerances(i_f, i_g, slopes, tol)
}
