//! Plain-text serialization: CSV grid functions and measures, interval
//! directories and mechanism output directories.

use std::fs;
use std::path::Path;

use crate::apps::Mechanism;
use crate::cfi::Cfi;
use crate::error::{Error, Result};
use crate::grid_fn::{Grid, GridFunction, SlopeInterval};
use crate::measure::SignedMeasure;
use crate::tol::Tolerances;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two-column CSV with a header.
pub fn write_columns(header: (&str, &str), rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        s.push_str(&num(a));
        s.push(',');
        s.push_str(&num(b));
        s.push('\n');
    }
    s
}

/// Rows of a two-column CSV whose header must be `header`.
pub fn parse_columns(text: &str, header: (&str, &str)) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let want = format!("{},{}", header.0, header.1);
    if first.trim() != want {
        return Err(Error::Parse { line: 1, msg: format!("expected header `{want}`") });
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let mut parts = line.split(',');
        let mut field = |name: &str| -> Result<f64> {
            let raw = parts.next().ok_or(Error::Parse { line: k + 1, msg: format!("missing {name}") })?;
            raw.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: k + 1, msg: format!("bad {name} `{}`: {e}", raw.trim()) })
        };
        let a = field(header.0)?;
        let b = field(header.1)?;
        if parts.next().is_some() {
            return Err(Error::Parse { line: k + 1, msg: "too many fields".into() });
        }
        rows.push((a, b));
    }
    Ok(rows)
}

pub fn grid_fn_to_csv(f: &GridFunction) -> String {
    let g = f.grid();
    write_columns(("x", "value"), (0..f.len()).map(|i| (g.node(i), f.value(i))))
}

/// Parse `x,value` rows on a uniform grid.
pub fn grid_fn_from_csv(text: &str) -> Result<GridFunction> {
    let rows = parse_columns(text, ("x", "value"))?;
    if rows.len() < 2 {
        return Err(Error::Parse { line: 1, msg: "need at least two nodes".into() });
    }
    let n = rows.len() - 1;
    let grid = Grid::new(rows[0].0, rows[n].0, n)?;
    let band = 1e-9 * (1.0 + grid.lo().abs().max(grid.hi().abs()));
    for (i, r) in rows.iter().enumerate() {
        if (r.0 - grid.node(i)).abs() > band {
            return Err(Error::Parse { line: i + 2, msg: format!("node {} is off the uniform grid", r.0) });
        }
    }
    GridFunction::new(grid, rows.into_iter().map(|r| r.1).collect())
}

pub fn write_grid_fn(path: &Path, f: &GridFunction) -> Result<()> {
    fs::write(path, grid_fn_to_csv(f))?;
    Ok(())
}

pub fn read_grid_fn(path: &Path) -> Result<GridFunction> {
    grid_fn_from_csv(&fs::read_to_string(path)?)
}

/// `atoms.csv` and `density.csv` in `dir`.
pub fn write_measure(dir: &Path, m: &SignedMeasure) -> Result<()> {
    fs::create_dir_all(dir)?;
    let g = m.grid();
    fs::write(dir.join("atoms.csv"), write_columns(("x", "mass"), m.atom_list().into_iter().map(|(i, a)| (g.node(i), a))))?;
    fs::write(
        dir.join("density.csv"),
        write_columns(("cell_left", "psi"), m.density().iter().enumerate().map(|(j, &d)| (g.node(j), d))),
    )?;
    Ok(())
}

pub fn read_measure(dir: &Path, grid: Grid) -> Result<SignedMeasure> {
    let atoms = parse_columns(&fs::read_to_string(dir.join("atoms.csv"))?, ("x", "mass"))?;
    let dens = parse_columns(&fs::read_to_string(dir.join("density.csv"))?, ("cell_left", "psi"))?;
    if dens.len() != grid.n_cells() {
        return Err(Error::Invalid(format!("density has {} cells, grid has {}", dens.len(), grid.n_cells())));
    }
    let mut a = vec![0.0; grid.n_nodes()];
    for (x, mass) in atoms {
        let i = grid.nearest(x);
        if (grid.node(i) - x).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Invalid(format!("atom at {x} is not on a node")));
        }
        a[i] += mass;
    }
    SignedMeasure::new(grid, a, dens.into_iter().map(|d| d.1).collect())
}

/// Key-value text `key = value`, one per line, `#` comments.
fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(Error::Parse { line: k + 1, msg: "expected `key = value`".into() })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn kv_f64(kv: &[(String, String)], key: &str) -> Result<f64> {
    let v = kv
        .iter()
        .find(|(k, _)| k == key)
        .ok_or(Error::Parse { line: 0, msg: format!("missing key `{key}`") })?;
    v.1.parse().map_err(|e| Error::Parse { line: 0, msg: format!("bad `{key}`: {e}") })
}

/// `lower.csv`, `upper.csv`, `slopes` (`s_lo`, `s_hi`) and `grid` (`lo`, `hi`, `n_cells`).
pub fn write_cfi(dir: &Path, c: &Cfi) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_grid_fn(&dir.join("lower.csv"), c.lower())?;
    write_grid_fn(&dir.join("upper.csv"), c.upper())?;
    let s = c.slopes();
    fs::write(dir.join("slopes"), format!("s_lo = {}\ns_hi = {}\n", num(s.s_lo), num(s.s_hi)))?;
    let g = c.grid();
    fs::write(dir.join("grid"), format!("lo = {}\nhi = {}\nn_cells = {}\n", num(g.lo()), num(g.hi()), g.n_cells()))?;
    Ok(())
}

pub fn read_cfi(dir: &Path, tol: Tolerances) -> Result<Cfi> {
    let lower = read_grid_fn(&dir.join("lower.csv"))?;
    let upper = read_grid_fn(&dir.join("upper.csv"))?;
    let sk = parse_kv(&fs::read_to_string(dir.join("slopes"))?)?;
    let slopes = SlopeInterval::new(kv_f64(&sk, "s_lo")?, kv_f64(&sk, "s_hi")?)?;
    let gk = parse_kv(&fs::read_to_string(dir.join("grid"))?)?;
    let n = kv_f64(&gk, "n_cells")?;
    let grid = Grid::new(kv_f64(&gk, "lo")?, kv_f64(&gk, "hi")?, n as usize)?;
    grid.ensure_same(lower.grid())?;
    Cfi::with_tolerances(lower, upper, slopes, tol)
}

/// `indirect_utility.csv`, `allocation.csv`, `transfers.csv` and `report`.
pub fn write_mechanism(dir: &Path, m: &Mechanism, extra: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_grid_fn(&dir.join("indirect_utility.csv"), &m.u)?;
    write_grid_fn(&dir.join("allocation.csv"), &m.allocation)?;
    write_grid_fn(&dir.join("transfers.csv"), &m.transfer)?;
    fs::write(dir.join("report"), format!("{extra}{m}"))?;
    Ok(())
}
