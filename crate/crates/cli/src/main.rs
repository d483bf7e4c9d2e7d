//! `cfi`: solve, sweep and verify problems over convex function intervals.

mod problem;
mod run;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cfi_core::cfi::verify_extreme;
use cfi_core::io::read_grid_fn;
use cfi_core::solve::verify_optimality;

use problem::{Direction, ProblemSpec};
use run::{RunError, EXIT_NOT_CERTIFIED, EXIT_OK};

const OUT_ENV: &str = "CFI_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "cfi", version, about = "Optimization over convex function intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and write its artifacts.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve once per value of the problem file's sweep block.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a candidate indirect utility against the problem's interval and objective.
    Verify {
        spec: PathBuf,
        /// `x,value` CSV on the problem's grid.
        #[arg(long)]
        candidate: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Debug)]
struct Common {
    /// Number of grid cells (overrides the problem file).
    #[arg(long)]
    grid: Option<usize>,
    /// Relative band for agreement with the simplex oracle (overrides the problem file).
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory; defaults to $CFI_OUT_DIR, then `cfi_out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check against the simplex oracle.
    #[arg(long, value_enum, default_value = "on")]
    oracle: Switch,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("cfi_out"))
    }
}

fn load(path: &Path, common: &Common) -> Result<(ProblemSpec, spec::Block), RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Spec(format!("{}: {e}", path.display())))?;
    let root = spec::parse(&text).map_err(|e| RunError::Spec(format!("{}: {e}", path.display())))?;
    let ps = build(&root, path, common)?;
    Ok((ps, root))
}

fn build(root: &spec::Block, path: &Path, common: &Common) -> Result<ProblemSpec, RunError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut ps = problem::build(root, base).map_err(|e| RunError::Spec(format!("{}: {e}", path.display())))?;
    if let Some(n) = common.grid {
        if n < 2 {
            return Err(RunError::Spec("--grid needs at least two cells".into()));
        }
        ps.n_cells = n;
    }
    if let Some(t) = common.tol {
        if !(t > 0.0) {
            return Err(RunError::Spec("--tol must be positive".into()));
        }
        ps.tol.lp_gap = t;
    }
    Ok(ps)
}

fn cmd_run(spec_path: &Path, common: &Common) -> Result<i32, RunError> {
    let (ps, _) = load(spec_path, common)?;
    let out = common.out_dir();
    let header = format!("spec = {}\n", spec_path.display());
    let (report, outcome) = run::run(&ps, &out, common.oracle == Switch::On, &header)?;
    print!("{}", report.render());
    if report.status.exit_code() != EXIT_OK {
        eprintln!("certification failed and the oracle disagrees; see {}", out.join("report").display());
        eprint!("{}", outcome.mechanism.report);
    } else if !report.certified {
        eprintln!("warning: certificate failed although the oracle agrees");
    }
    Ok(report.status.exit_code())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.12e}"))
}

fn cmd_sweep(spec_path: &Path, common: &Common) -> Result<i32, RunError> {
    let (ps, root) = load(spec_path, common)?;
    let sw = ps.sweep.clone().ok_or_else(|| RunError::Spec("spec has no `sweep { ... }` block".into()))?;
    let out = common.out_dir();
    fs::create_dir_all(&out).map_err(|e| RunError::Output(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Solver(e.to_string()))?;
    let oracle = common.oracle == Switch::On;

    let jobs: Vec<Result<ProblemSpec, RunError>> = sw
        .values
        .iter()
        .map(|&v| {
            let mut r = root.clone();
            r.set(&sw.param, &format!("{v}")).map_err(RunError::Spec)?;
            build(&r, spec_path, common)
        })
        .collect();
    let results: Vec<Result<(run::RunReport, Option<f64>), RunError>> = pool.install(|| {
        jobs.into_par_iter()
            .enumerate()
            .map(|(k, job)| {
                let ps = job?;
                let dir = out.join(format!("run_{k:03}"));
                let header = format!("spec = {}\n{} = {}\n", spec_path.display(), sw.param, sw.values[k]);
                run::run(&ps, &dir, oracle, &header).map(|(r, o)| (r, o.cutoff))
            })
            .collect()
    });

    let mut csv = String::from("param,value,cutoff,objective\n");
    let mut code = EXIT_OK;
    let mut cutoffs = Vec::new();
    for (k, r) in results.iter().enumerate() {
        let v = sw.values[k];
        match r {
            Ok((rep, c)) => {
                let c = c.filter(|x| x.is_finite());
                csv.push_str(&format!("{},{:.12e},{},{:.12e}\n", sw.param, v, fmt_opt(c), rep.objective));
                cutoffs.push(c);
                code = code.max(rep.status.exit_code());
            }
            Err(e) => {
                eprintln!("{} = {v}: {e}", sw.param);
                csv.push_str(&format!("{},{:.12e},nan,nan\n", sw.param, v));
                cutoffs.push(None);
                code = code.max(e.exit_code());
            }
        }
    }
    fs::write(out.join("sweep.csv"), &csv).map_err(|e| RunError::Output(e.to_string()))?;
    let mut summary = format!("param = {}\nruns = {}\n", sw.param, sw.values.len());
    if let Some(dir) = sw.expect {
        // one grid step of slack on a unit-length support
        let band = 1e-12 + 1.0 / ps.n_cells as f64;
        let ok = cutoffs.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => match dir {
                Direction::Nonincreasing => b <= a + band,
                Direction::Nondecreasing => b >= a - band,
            },
            _ => false,
        });
        summary.push_str(&format!("expect = {dir:?}\nmonotone = {ok}\n"));
    }
    fs::write(out.join("sweep_report"), &summary).map_err(|e| RunError::Output(e.to_string()))?;
    print!("{csv}{summary}");
    Ok(code)
}

fn cmd_verify(spec_path: &Path, candidate: &Path, common: &Common) -> Result<i32, RunError> {
    let (ps, _) = load(spec_path, common)?;
    let (c, mu) = ps.instance().map_err(|e| RunError::Spec(e.to_string()))?;
    let u = read_grid_fn(candidate).map_err(|e| RunError::Spec(format!("{}: {e}", candidate.display())))?;
    if !u.grid().same_as(c.grid()) {
        return Err(RunError::Spec(format!(
            "candidate has {} cells on [{}, {}], interval has {} on [{}, {}]",
            u.grid().n_cells(),
            u.grid().lo(),
            u.grid().hi(),
            c.grid().n_cells(),
            c.grid().lo(),
            c.grid().hi()
        )));
    }
    if let Some(why) = c.membership_violation(&u) {
        return Err(RunError::Spec(format!("candidate is outside the interval: {why}")));
    }
    let extreme = verify_extreme(&c, &u);
    let report = verify_optimality(&c, &u, &mu).map_err(|e| RunError::Solver(e.to_string()))?;
    print!("{extreme}");
    println!("objective = {:.12}", mu.integrate(&u).map_err(|e| RunError::Solver(e.to_string()))?);
    print!("{report}");
    println!("certified = {}", report.overall);
    Ok(if report.overall { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { spec, common } => cmd_run(spec, common),
        Command::Sweep { spec, common } => cmd_sweep(spec, common),
        Command::Verify { spec, candidate, common } => cmd_verify(spec, candidate, common),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
