//! The `ssnstar` command line tool.
//!
//! ```text
//! ssnstar gen   --n 150 --beta 1 --seed 0 --out p.json
//! ssnstar solve --problem p.json --method newton-dr --tol 1e-8 --trace t.csv
//! ssnstar bench --n-list 150 --beta-list 1,1e-2 --instances 5 --methods heuristic,dr --out r.csv
//! ssnstar diag  --problem p.json --x x.json
//! ```
//!
//! Exit status is 0 on success, 1 if `solve` does not converge and 2 for
//! usage, input and I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use ssnstar::probgen::{characteristic_values, oligopoly_problem_spec, random_problem_spec, OligopolyParams, RandomFamilyParams};
use ssnstar::{GammaRule, Method, ProblemSpec, SolverConfig, TraceRow};

use crate::grid::{format_summary, run_bench, write_csv, write_json, BenchGrid};
use crate::verify::verify_solution;
use crate::{io_err, BenchError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ssnstar", version, about = "Semismooth* Newton solvers for generalized equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a problem file.
    Gen(GenArgs),
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Run a benchmark grid over random instances.
    Bench(BenchArgs),
    /// Characteristic values at a point.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Random,
    /// Five-player synthetic oligopoly with solution (10, 20, 30, 40, 50).
    Oligopoly,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "random")]
    family: Family,
    /// Dimension; required for the random family.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oligopoly only: concave production cost for player 1.
    #[arg(long)]
    concave_player1: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// `auto` for ‖∇f(x)‖₁/√n at every iterate, or a fixed positive value.
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let gamma_rule = match self.gamma.as_str() {
            "auto" => GammaRule::Adaptive,
            v => GammaRule::Fixed(
                v.parse()
                    .map_err(|_| BenchError::Invalid(format!("--gamma must be 'auto' or a number, got '{v}'")))?,
            ),
        };
        let config = SolverConfig {
            eps_tol: self.tol,
            gamma_rule,
            max_iter: self.max_iter,
            time_limit_seconds: self.time_limit,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    method: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Starting point as a JSON array; the origin if omitted.
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Write the final iterate as a JSON array.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write zeros in the trace's wall_seconds column.
    #[arg(long)]
    trace_no_time: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    beta_list: Vec<f64>,
    /// Use seeds 0..K.
    #[arg(long, conflicts_with = "seeds")]
    instances: Option<u64>,
    /// Explicit seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', default_value = "heuristic,hybrid-fb,hybrid-dr,hybrid-pm,newton-dr,fb,dr,pm")]
    methods: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Use the time limit 1e-4·n² seconds per run.
    #[arg(long, conflicts_with = "time_limit")]
    scaled_time_limit: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the rows as JSON next to the CSV file.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DiagArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Point as a JSON array, normally a computed solution.
    #[arg(long)]
    x: PathBuf,
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(&a, out),
        Command::Solve(a) => solve(&a, out),
        Command::Bench(a) => bench(&a, out),
        Command::Diag(a) => diag(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let v: Vec<f64> = serde_json::from_str(&read_text(path)?)?;
    Ok(DVector::from_vec(v))
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = match a.family {
        Family::Random => random_problem_spec(&RandomFamilyParams {
            n: a.n.ok_or_else(|| BenchError::Invalid("--n is required for the random family".into()))?,
            beta: a.beta,
            seed: a.seed,
        })?,
        Family::Oligopoly => {
            let mut params = OligopolyParams::synthetic_default();
            params.concave_player1 = a.concave_player1;
            oligopoly_problem_spec(&params)?
        }
    };
    let text = spec.to_json()? + "\n";
    match &a.out {
        Some(path) => write_text(path, &text)?,
        None => out.write_all(text.as_bytes()).map_err(io_err("<stdout>"))?,
    }
    Ok(EXIT_OK)
}

fn trace_csv(trace: &[TraceRow], zero_time: bool) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in trace {
        let mut row = row.clone();
        if zero_time {
            row.wall_seconds = 0.0;
        }
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| BenchError::Invalid(e.to_string()))
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let method: Method = a.method.parse()?;
    let config = a.solver.config()?;
    let problem = ProblemSpec::from_json(&read_text(&a.problem)?)?.build()?;
    let x0 = match &a.x0 {
        Some(path) => read_vector(path)?,
        None => DVector::zeros(problem.dim()),
    };
    let rep = method.solve(&problem, &x0, &config)?;
    let tol = 100.0 * config.eps_tol * (1.0 + rep.final_gamma);
    let check = verify_solution(&problem, &rep.x_final, tol)?;

    if let Some(path) = &a.trace {
        std::fs::write(path, trace_csv(&rep.trace, a.trace_no_time)?).map_err(io_err(path))?;
    }
    if let Some(path) = &a.x_out {
        write_text(path, &(serde_json::to_string(rep.x_final.as_slice())? + "\n"))?;
    }
    let report = format!(
        "method      {method}\nstatus      {}\nN           {}\nG           {}\nF           {}\njac_evals   {}\n\
         iterations  {}\nresidual    {:e}\ngamma       {}\nverified    {} (max distance {:e}, tol {:e})\nseconds     {:.3}\n",
        rep.status,
        rep.newton_count,
        rep.global_count,
        rep.f_evals,
        rep.jac_evals,
        rep.iterations,
        rep.final_residual,
        rep.final_gamma,
        check.ok,
        check.max_distance(),
        tol,
        rep.wall_seconds,
    );
    out.write_all(report.as_bytes()).map_err(io_err("<stdout>"))?;
    Ok(if rep.converged && check.ok { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let methods = a.methods.iter().map(|m| m.parse()).collect::<ssnstar::Result<Vec<Method>>>()?;
    let seeds = match (&a.seeds, a.instances) {
        (Some(s), _) => s.clone(),
        (None, Some(k)) => (0..k).collect(),
        (None, None) => (0..5).collect(),
    };
    let mut config = a.solver.config()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    // the scaled limit depends on n, so run one grid per dimension
    for &n in &a.n_list {
        if a.scaled_time_limit {
            config.time_limit_seconds = Some(1e-4 * (n * n) as f64);
        }
        let grid = BenchGrid {
            n_list: vec![n],
            beta_list: a.beta_list.clone(),
            seeds: seeds.clone(),
            methods: methods.clone(),
            config: config.clone(),
        };
        let res = run_bench(&grid)?;
        rows.extend(res.rows);
        summary.extend(res.summary);
    }
    rows.sort_by(|x, y| (&x.method, x.n, x.beta.to_bits(), x.seed).cmp(&(&y.method, y.n, y.beta.to_bits(), y.seed)));
    summary.sort_by(|x, y| (&x.method, x.n, x.beta.to_bits()).cmp(&(&y.method, y.n, y.beta.to_bits())));
    write_csv(&rows, &a.out)?;
    if a.json {
        write_json(&rows, &a.out.with_extension("json"))?;
    }
    out.write_all(format_summary(&summary).as_bytes()).map_err(io_err("<stdout>"))?;
    Ok(EXIT_OK)
}

fn diag(a: &DiagArgs, out: &mut dyn Write) -> Result<i32> {
    let problem = ProblemSpec::from_json(&read_text(&a.problem)?)?.build()?;
    let x = read_vector(&a.x)?;
    let d = characteristic_values(&problem, &x)?;
    let text = serde_json::to_string_pretty(&d)? + "\n";
    out.write_all(text.as_bytes()).map_err(io_err("<stdout>"))?;
    Ok(EXIT_OK)
}
