//! Dispatching a problem to its pipeline and writing the artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cfi_core::apps::{
    certify, right_slopes, solve_contest, solve_delegation, solve_persuasion_sshaped, solve_screening, Mechanism,
    Menu, ScreeningObjective, SolveOptions,
};
use cfi_core::io::{write_cfi, write_columns, write_mechanism, write_measure};
use cfi_core::lp::cfi_lp;
use cfi_core::solve::{concavify_solve, design_lower_boundary, one_kink_family, AffineBound};
use cfi_core::{Cfi, Error, GridFunction, SignedMeasure};

use crate::problem::{Problem, ProblemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CERTIFICATION: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The certificate failed but the oracle agrees with the objective.
    Uncertified,
    CertificationFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success | Status::Uncertified => EXIT_OK,
            Status::CertificationFailure => EXIT_CERTIFICATION,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Success => "SUCCESS",
            Status::Uncertified => "UNCERTIFIED",
            Status::CertificationFailure => "CERTIFICATION_FAILURE",
        }
    }
}

/// A solved instance plus the headline numbers a sweep records.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub mechanism: Mechanism,
    pub objective: f64,
    pub cutoff: Option<f64>,
    /// Extra artifact files as `(name, contents)`.
    pub extra_files: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: Status,
    pub objective: f64,
    pub cutoffs: Vec<(String, f64)>,
    pub certified: bool,
    pub oracle_gap: Option<f64>,
    pub wall_time: f64,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status = {}", self.status.name());
        let _ = writeln!(s, "objective = {:.12}", self.objective);
        for (k, v) in &self.cutoffs {
            let _ = writeln!(s, "cutoff.{k} = {v:.9}");
        }
        let _ = writeln!(s, "certified = {}", self.certified);
        match self.oracle_gap {
            Some(g) => {
                let _ = writeln!(s, "oracle_gap = {g:.3e}");
            }
            None => {
                let _ = writeln!(s, "oracle_gap = skipped");
            }
        }
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time);
        for p in &self.artifacts {
            let _ = writeln!(s, "artifact = {}", p.display());
        }
        s
    }
}

/// Where a failure happened, for the exit code.
#[derive(Debug)]
pub enum RunError {
    Spec(String),
    Solver(String),
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Spec(_) => EXIT_SPEC,
            RunError::Solver(_) | RunError::Output(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Spec(m) => write!(f, "specification error: {m}"),
            RunError::Solver(m) => write!(f, "solver failure: {m}"),
            RunError::Output(m) => write!(f, "cannot write artifacts: {m}"),
        }
    }
}

/// Errors raised while the instance is being assembled are input problems;
/// the rest are solver failures.
fn classify(e: Error) -> RunError {
    match e {
        Error::Solver(_) => RunError::Solver(e.to_string()),
        Error::Io(_) => RunError::Output(e.to_string()),
        _ => RunError::Spec(e.to_string()),
    }
}

fn solve_raw(c: &Cfi, mu: &SignedMeasure, oracle: bool) -> cfi_core::Result<Mechanism> {
    let (u, partition, constructive) = match AffineBound::detect(c) {
        Some(b) => {
            let s = concavify_solve(c, mu, b)?;
            (s.u, Some(s.partition), true)
        }
        None => (cfi_lp(c, mu)?.0, None, false),
    };
    let (report, extreme, oracle) = certify(c, &u, mu, partition.as_ref(), oracle)?;
    let s = c.slopes();
    Ok(Mechanism {
        value: mu.integrate(&u)?,
        allocation: right_slopes(&u).map(|x| x.clamp(s.s_lo, s.s_hi)),
        transfer: GridFunction::constant(*c.grid(), 0.0),
        cfi: c.clone(),
        measure: mu.clone(),
        u,
        cutoffs: Vec::new(),
        intervals: Vec::new(),
        report,
        extreme,
        oracle,
        constructive,
    })
}

pub fn solve(spec: &ProblemSpec, oracle: bool) -> Result<Outcome, RunError> {
    let opts = SolveOptions { n_cells: spec.n_cells, oracle, tol: spec.tol };
    // Assemble first so that malformed inputs are reported as such.
    if !matches!(spec.problem, Problem::DesignMenu { .. }) {
        spec.instance().map_err(classify)?;
    }
    let solver = |e: Error| RunError::Solver(e.to_string());
    let pick = |m: Mechanism, key: &str| {
        let cutoff = m.cutoff(key);
        Outcome { objective: m.value, cutoff, mechanism: m, extra_files: Vec::new() }
    };
    Ok(match &spec.problem {
        Problem::Screening { f, menu, welfare } => {
            let objective = match welfare {
                None => ScreeningObjective::Revenue,
                Some(w) => w.objective(spec.n_cells, f).map_err(classify)?,
            };
            pick(solve_screening(f, menu, &objective, &opts).map_err(solver)?, "theta_star")
        }
        Problem::Delegation { f, beta, menu } => pick(solve_delegation(f, *beta, menu, &opts).map_err(solver)?, "theta_star"),
        Problem::Contest { f, g, m } => pick(solve_contest(f, g, *m, &opts).map_err(solver)?, "theta_star"),
        Problem::Persuasion { prior, lower, upper, v } => {
            pick(solve_persuasion_sshaped(prior, lower, upper, v, &opts).map_err(solver)?, "x_star")
        }
        Problem::RawCfi { .. } => {
            let (c, mu) = spec.instance().map_err(classify)?;
            pick(solve_raw(&c, &mu, oracle).map_err(solver)?, "")
        }
        Problem::DesignMenu { f, welfare, prices } => {
            let template = cfi_core::apps::screening_cfi(f, &Menu::null(), spec.n_cells).map_err(classify)?;
            let g = *template.grid();
            let inner = cfi_core::apps::mu_revenue(f, g);
            let outer = match welfare.objective(spec.n_cells, f).map_err(classify)? {
                ScreeningObjective::Welfare { pareto, alpha, cost } => {
                    cfi_core::apps::mu_welfare(f, g, &pareto, alpha, cost).map_err(classify)?
                }
                ScreeningObjective::Revenue => unreachable!("welfare objective"),
            };
            let params: Vec<Vec<f64>> = prices.iter().map(|&p| vec![p]).collect();
            let d = design_lower_boundary(&params, one_kink_family(g), &inner, &outer, &template).map_err(solver)?;
            let p = d.param[0];
            let mut m = solve_screening(f, &Menu::posted_price(p), &ScreeningObjective::Revenue, &opts).map_err(solver)?;
            m.cutoffs.insert(0, ("price".into(), p));
            let scan = write_columns(("price", "outer_value"), d.scan.iter().map(|(q, v)| (q[0], *v)));
            Outcome { objective: d.value, cutoff: Some(p), mechanism: m, extra_files: vec![("design_scan.csv".into(), scan)] }
        }
    })
}

pub fn status_of(m: &Mechanism) -> Status {
    if m.certified() {
        Status::Success
    } else if m.oracle.is_some() && m.oracle_matches() {
        Status::Uncertified
    } else {
        Status::CertificationFailure
    }
}

/// Solve and write the artifacts into `out`.
pub fn run(spec: &ProblemSpec, out: &Path, oracle: bool, header: &str) -> Result<(RunReport, Outcome), RunError> {
    let start = Instant::now();
    let outcome = solve(spec, oracle)?;
    let m = &outcome.mechanism;
    let write = |e: Error| RunError::Output(e.to_string());
    write_mechanism(out, m, header).map_err(write)?;
    write_cfi(&out.join("interval"), &m.cfi).map_err(write)?;
    write_measure(&out.join("measure"), &m.measure).map_err(write)?;
    let mut artifacts: Vec<PathBuf> = ["indirect_utility.csv", "allocation.csv", "transfers.csv", "report"]
        .iter()
        .map(|f| out.join(f))
        .collect();
    artifacts.push(out.join("interval"));
    artifacts.push(out.join("measure"));
    for (name, body) in &outcome.extra_files {
        fs::write(out.join(name), body).map_err(|e| RunError::Output(e.to_string()))?;
        artifacts.push(out.join(name));
    }
    let report = RunReport {
        status: status_of(m),
        objective: outcome.objective,
        cutoffs: m.cutoffs.clone(),
        certified: m.certified(),
        oracle_gap: m.oracle_gap(),
        wall_time: start.elapsed().as_secs_f64(),
        artifacts,
    };
    fs::write(out.join("summary"), report.render()).map_err(|e| RunError::Output(e.to_string()))?;
    Ok((report, outcome))
}
