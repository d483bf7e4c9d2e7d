//! Turning a parsed specification into a problem instance.

use std::path::{Path, PathBuf};

use cfi_core::apps::{
    mu_revenue, mu_welfare, screening_cfi, Contraction, DelegationMenu, DistributionSpec, Menu, ScreeningObjective,
    ValueSpec,
};
use cfi_core::io::{read_cfi, read_measure};
use cfi_core::{Cfi, GridFunction, SignedMeasure, Tolerances};

use crate::spec::{Block, SpecError, SpecResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Application {
    Screening,
    Delegation,
    Contest,
    Persuasion,
    RawCfi,
    DesignMenu,
}

impl Application {
    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "screening" => Application::Screening,
            "delegation" => Application::Delegation,
            "contest" => Application::Contest,
            "persuasion" => Application::Persuasion,
            "raw_cfi" => Application::RawCfi,
            "design_menu" => Application::DesignMenu,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
    pub expect: Option<Direction>,
}

/// Welfare objective before it is laid on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welfare {
    pub pareto: f64,
    pub alpha: f64,
    pub cost: f64,
}

impl Welfare {
    pub fn objective(&self, n_cells: usize, f: &DistributionSpec) -> cfi_core::Result<ScreeningObjective> {
        let g = cfi_core::Grid::new(f.lo, f.hi, n_cells)?;
        Ok(ScreeningObjective::Welfare {
            pareto: GridFunction::constant(g, self.pareto),
            alpha: self.alpha,
            cost: self.cost,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Screening { f: DistributionSpec, menu: Menu, welfare: Option<Welfare> },
    Delegation { f: DistributionSpec, beta: f64, menu: DelegationMenu },
    Contest { f: DistributionSpec, g: DistributionSpec, m: f64 },
    Persuasion { prior: DistributionSpec, lower: Contraction, upper: Contraction, v: ValueSpec },
    RawCfi { cfi: Cfi, mu: SignedMeasure },
    DesignMenu { f: DistributionSpec, welfare: Welfare, prices: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub application: Application,
    pub problem: Problem,
    pub n_cells: usize,
    pub tol: Tolerances,
    pub sweep: Option<Sweep>,
}

fn distribution(b: &Block) -> SpecResult<DistributionSpec> {
    b.expect(&["kind", "lo", "hi", "location", "scale", "weights", "means", "sigmas"], &[], &[])?;
    let kind = b.require_str("kind")?;
    let lo = b.f64_or("lo", 0.0)?;
    let hi = b.f64_or("hi", 1.0)?;
    let made = match kind.value.as_str() {
        "uniform" => DistributionSpec::uniform(lo, hi),
        "logistic" => DistributionSpec::logistic(b.require_f64("location")?, b.require_f64("scale")?, lo, hi),
        "mixture" => {
            let get = |k: &str| -> SpecResult<Vec<f64>> {
                b.f64_list(k)?.ok_or_else(|| SpecError::field(b.line, k, "missing in block `distribution`"))
            };
            DistributionSpec::mixture(get("weights")?, get("means")?, get("sigmas")?, lo, hi)
        }
        other => return Err(SpecError::field(kind.line, "kind", format!("unknown distribution `{other}`"))),
    };
    made.map_err(|e| SpecError::at(b.line, e.to_string()))
}

fn welfare(b: &Block) -> SpecResult<Option<Welfare>> {
    b.expect(&["kind", "pareto", "alpha", "cost"], &[], &[])?;
    let kind = b.require_str("kind")?;
    match kind.value.as_str() {
        "revenue" => Ok(None),
        "welfare" => Ok(Some(Welfare {
            pareto: b.f64_or("pareto", 1.0)?,
            alpha: b.f64_or("alpha", 1.0)?,
            cost: b.f64_or("cost", 0.0)?,
        })),
        other => Err(SpecError::field(kind.line, "kind", format!("unknown objective `{other}`"))),
    }
}

fn screening_menu(b: Option<&Block>) -> SpecResult<Menu> {
    let Some(b) = b else { return Ok(Menu::null()) };
    b.expect(&["item", "price"], &[], &["item"])?;
    let mut menu = Menu::null();
    if let Some(p) = b.f64("price")? {
        menu = Menu::posted_price(p);
    }
    for e in b.all("item") {
        let v = Block::list(e)?;
        if v.len() != 2 {
            return Err(SpecError::field(e.line, "item", "expected `allocation, transfer`"));
        }
        if !(v[0] == 0.0 && v[1] == 0.0) {
            menu.items.push((v[0], v[1]));
        }
    }
    menu.validate().map_err(|e| SpecError::at(b.line, e.to_string()))?;
    Ok(menu)
}

fn delegation_menu(b: Option<&Block>, f: &DistributionSpec) -> SpecResult<DelegationMenu> {
    let mut menu = DelegationMenu::standard(f.lo, f.hi);
    let Some(b) = b else { return Ok(menu) };
    b.expect(&["actions", "interior_actions"], &[], &[])?;
    if let Some(acts) = b.f64_list("actions")? {
        for a in acts {
            menu = menu.with_action(a);
        }
    }
    if let Some(k) = b.usize("interior_actions")? {
        for j in 1..=k {
            menu = menu.with_action(f.lo + (f.hi - f.lo) * j as f64 / (k + 1) as f64);
        }
    }
    Ok(menu)
}

fn value_spec(b: &Block) -> SpecResult<ValueSpec> {
    b.expect(&["kind", "center", "steepness", "a"], &[], &[])?;
    let kind = b.require_str("kind")?;
    match kind.value.as_str() {
        "logistic" => Ok(ValueSpec::Logistic { center: b.require_f64("center")?, steepness: b.require_f64("steepness")? }),
        "quadratic" => Ok(ValueSpec::Quadratic { a: b.require_f64("a")? }),
        other => Err(SpecError::field(kind.line, "kind", format!("unknown value shape `{other}`"))),
    }
}

fn sweep(b: &Block) -> SpecResult<Sweep> {
    b.expect(&["param", "values", "from", "to", "count", "expect"], &[], &[])?;
    let param = b.require_str("param")?.value.clone();
    let values = match b.f64_list("values")? {
        Some(v) => v,
        None => match (b.f64("from")?, b.f64("to")?, b.usize("count")?) {
            (Some(a), Some(z), Some(k)) if k >= 2 => {
                (0..k).map(|i| a + (z - a) * i as f64 / (k - 1) as f64).collect()
            }
            (Some(a), Some(_), Some(1)) => vec![a],
            (_, _, Some(0)) => Vec::new(),
            _ => return Err(SpecError::field(b.line, "values", "give `values` or `from`, `to` and `count`")),
        },
    };
    if values.is_empty() {
        return Err(SpecError::field(b.line, "values", "sweep list is empty"));
    }
    let expect = match b.entry("expect") {
        None => None,
        Some(e) => match e.value.as_str() {
            "nonincreasing" => Some(Direction::Nonincreasing),
            "nondecreasing" => Some(Direction::Nondecreasing),
            "none" => None,
            other => return Err(SpecError::field(e.line, "expect", format!("unknown direction `{other}`"))),
        },
    };
    Ok(Sweep { param, values, expect })
}

fn resolve(base: &Path, e: &crate::spec::Entry) -> PathBuf {
    let p = PathBuf::from(&e.value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Build the problem from a parsed file. Relative paths resolve against `base`.
pub fn build(root: &Block, base: &Path) -> SpecResult<ProblemSpec> {
    root.expect(
        &["application"],
        &["grid", "distribution", "prize", "menu", "objective", "delegation", "contest", "persuasion", "value", "raw", "design", "sweep"],
        &[],
    )?;
    let app_entry = root.require_str("application")?;
    let application = Application::parse(&app_entry.value)
        .ok_or_else(|| SpecError::field(app_entry.line, "application", format!("unknown application `{}`", app_entry.value)))?;

    let mut tol = Tolerances::default();
    let mut n_cells = 200;
    if let Some(g) = root.block("grid") {
        g.expect(&["n_cells", "lp_gap"], &[], &[])?;
        n_cells = g.usize("n_cells")?.unwrap_or(n_cells);
        tol.lp_gap = g.f64_or("lp_gap", tol.lp_gap)?;
        if n_cells < 2 {
            return Err(SpecError::field(g.line, "n_cells", "need at least two cells"));
        }
    }
    let sweep = root.block("sweep").map(sweep).transpose()?;

    let dist = || -> SpecResult<DistributionSpec> { distribution(root.require_block("distribution")?) };
    let problem = match application {
        Application::Screening => {
            let f = dist()?;
            let welfare = root.block("objective").map(welfare).transpose()?.flatten();
            Problem::Screening { f, menu: screening_menu(root.block("menu"))?, welfare }
        }
        Application::Delegation => {
            let f = dist()?;
            let d = root.require_block("delegation")?;
            d.expect(&["beta"], &[], &[])?;
            let menu = delegation_menu(root.block("menu"), &f)?;
            Problem::Delegation { beta: d.require_f64("beta")?, menu, f }
        }
        Application::Contest => {
            let f = dist()?;
            let g = match root.block("prize") {
                Some(b) => distribution(b)?,
                None => DistributionSpec::uniform(0.0, 1.0).expect("unit support"),
            };
            let c = root.require_block("contest")?;
            c.expect(&["m"], &[], &[])?;
            Problem::Contest { f, g, m: c.f64_or("m", 0.0)? }
        }
        Application::Persuasion => {
            let prior = dist()?;
            let p = root.require_block("persuasion")?;
            p.expect(&["lambda_lower", "lambda_upper"], &[], &[])?;
            let contraction = |key: &str, default: Option<f64>| -> SpecResult<Contraction> {
                let l = match default {
                    Some(d) => p.f64_or(key, d)?,
                    None => p.require_f64(key)?,
                };
                let line = p.entry(key).map_or(p.line, |e| e.line);
                Contraction::new(prior.clone(), l).map_err(|e| SpecError::field(line, key, e.to_string()))
            };
            let lower = contraction("lambda_lower", None)?;
            let upper = contraction("lambda_upper", Some(1.0))?;
            let v = value_spec(root.require_block("value")?)?;
            Problem::Persuasion { prior, lower, upper, v }
        }
        Application::RawCfi => {
            let r = root.require_block("raw")?;
            r.expect(&["cfi", "measure"], &[], &[])?;
            let cfi_dir = resolve(base, r.require_str("cfi")?);
            let mu_dir = resolve(base, r.require_str("measure")?);
            let cfi = read_cfi(&cfi_dir, tol).map_err(|e| SpecError::field(r.line, "cfi", e.to_string()))?;
            let mu = read_measure(&mu_dir, *cfi.grid()).map_err(|e| SpecError::field(r.line, "measure", e.to_string()))?;
            Problem::RawCfi { cfi, mu }
        }
        Application::DesignMenu => {
            let f = dist()?;
            let o = root.require_block("objective")?;
            let w = welfare(o)?
                .ok_or_else(|| SpecError::field(o.line, "kind", "menu design needs a welfare objective"))?;
            let d = root.block("design");
            let (lo, hi, steps) = match d {
                Some(d) => {
                    d.expect(&["price_lo", "price_hi", "steps"], &[], &[])?;
                    (d.f64_or("price_lo", 0.0)?, d.f64_or("price_hi", f.hi)?, d.usize("steps")?.unwrap_or(101))
                }
                None => (0.0, f.hi, 101),
            };
            if steps < 1 || !(hi >= lo) {
                return Err(SpecError::at(d.map_or(root.line, |d| d.line), "design needs price_lo <= price_hi and steps >= 1"));
            }
            let prices = if steps == 1 {
                vec![lo]
            } else {
                (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
            };
            Problem::DesignMenu { f, welfare: w, prices }
        }
    };
    Ok(ProblemSpec { application, problem, n_cells, tol, sweep })
}

impl ProblemSpec {
    /// The interval and objective measure, for checking a supplied candidate.
    pub fn instance(&self) -> cfi_core::Result<(Cfi, SignedMeasure)> {
        let n = self.n_cells;
        let (c, mu) = match &self.problem {
            Problem::Screening { f, menu, welfare } => {
                let c = screening_cfi(f, menu, n)?;
                let mu = match welfare {
                    None => mu_revenue(f, *c.grid()),
                    Some(w) => match w.objective(n, f)? {
                        ScreeningObjective::Welfare { pareto, alpha, cost } => mu_welfare(f, *c.grid(), &pareto, alpha, cost)?,
                        ScreeningObjective::Revenue => unreachable!("welfare objective"),
                    },
                };
                (c, mu)
            }
            Problem::Delegation { f, beta, menu } => cfi_core::apps::delegation_cfi(f, *beta, menu, n)?,
            Problem::Contest { f, g, m } => cfi_core::apps::contest_cfi(f, g, *m, n)?,
            Problem::Persuasion { prior, lower, upper, v } => cfi_core::apps::persuasion_cfi(prior, lower, upper, v, n)?,
            Problem::RawCfi { cfi, mu } => (cfi.clone(), mu.clone()),
            Problem::DesignMenu { .. } => {
                return Err(cfi_core::Error::Invalid("menu design has no single interval to verify against".into()))
            }
        };
        let c = Cfi::with_tolerances(c.lower().clone(), c.upper().clone(), c.slopes(), self.tol)?;
        Ok((c, mu))
    }
}
