//! Benchmark grids over `(method, n, β, seed)`.
//!
//! Every cell generates its random-family instance from the seed, solves from
//! the origin and verifies the result. Cells run in parallel; the number of
//! worker threads can be capped with the `SSNSTAR_THREADS` environment
//! variable.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ssnstar::probgen::{gen_random_problem, RandomFamilyParams};
use ssnstar::{Method, SolverConfig};

use crate::verify::verify_solution;
use crate::{io_err, BenchError, Result};

pub const THREADS_ENV: &str = "SSNSTAR_THREADS";

#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub n_list: Vec<usize>,
    pub beta_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub config: SolverConfig,
}

impl BenchGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(BenchError::Invalid(format!("{what} must not be empty")));
        if self.n_list.is_empty() {
            return empty("n list");
        }
        if self.beta_list.is_empty() {
            return empty("beta list");
        }
        if self.seeds.is_empty() {
            return empty("seed list");
        }
        if self.methods.is_empty() {
            return empty("method list");
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n == 0) {
            return Err(BenchError::Invalid(format!("dimension must be positive, got {n}")));
        }
        if let Some(b) = self.beta_list.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(BenchError::Invalid(format!("beta must be positive, got {b}")));
        }
        self.config.validate()?;
        Ok(())
    }

    fn cells(&self) -> Vec<(Method, usize, f64, u64)> {
        let mut cells = Vec::new();
        for &method in &self.methods {
            for &n in &self.n_list {
                for &beta in &self.beta_list {
                    for &seed in &self.seeds {
                        cells.push((method, n, beta, seed));
                    }
                }
            }
        }
        cells
    }
}

/// One solver run. `converged` is only set if the final point also passes
/// [`verify_solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub converged: bool,
    #[serde(rename = "N")]
    pub newton: usize,
    #[serde(rename = "G")]
    pub global: usize,
    #[serde(rename = "F")]
    pub f_evals: u64,
    pub jac_evals: u64,
    pub iterations: usize,
    /// `inf` if the run failed before producing a residual.
    pub final_residual: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub n: usize,
    pub beta: f64,
    pub instances: usize,
    pub converged: usize,
    pub mean_newton: f64,
    pub mean_global: f64,
    pub mean_f_evals: f64,
    pub mean_wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// Worker count from `SSNSTAR_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(BenchError::Invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

fn run_cell(method: Method, n: usize, beta: f64, seed: u64, config: &SolverConfig) -> ResultRow {
    let mut row = ResultRow {
        method: method.name().to_string(),
        n,
        beta,
        seed,
        converged: false,
        newton: 0,
        global: 0,
        f_evals: 0,
        jac_evals: 0,
        iterations: 0,
        final_residual: f64::INFINITY,
        wall_seconds: 0.0,
    };
    let Ok(problem) = gen_random_problem(&RandomFamilyParams { n, beta, seed }) else {
        return row;
    };
    let Ok(rep) = method.solve(&problem, &DVector::zeros(n), config) else {
        return row;
    };
    let tol = 100.0 * config.eps_tol * (1.0 + rep.final_gamma);
    let verified = verify_solution(&problem, &rep.x_final, tol).is_ok_and(|v| v.ok);
    row.converged = rep.converged && verified;
    row.newton = rep.newton_count;
    row.global = rep.global_count;
    row.f_evals = rep.f_evals;
    row.jac_evals = rep.jac_evals;
    row.iterations = rep.iterations;
    row.final_residual = rep.final_residual;
    row.wall_seconds = rep.wall_seconds;
    row
}

fn sort_key(r: &ResultRow) -> (String, usize, u64, u64) {
    // β > 0, so the bit pattern orders like the value
    (r.method.clone(), r.n, r.beta.to_bits(), r.seed)
}

pub fn run_bench(grid: &BenchGrid) -> Result<BenchOutput> {
    grid.validate()?;
    let cells = grid.cells();
    let work = || -> Vec<ResultRow> {
        cells
            .par_iter()
            .map(|&(m, n, beta, seed)| run_cell(m, n, beta, seed, &grid.config))
            .collect()
    };
    let mut rows = match thread_cap()? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| BenchError::Invalid(e.to_string()))?
            .install(work),
        None => work(),
    };
    rows.sort_by_key(sort_key);
    let summary = summarize(&rows);
    Ok(BenchOutput { rows, summary })
}

/// Means per `(method, n, β)` over all instances.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for group in rows.chunk_by(|a, b| a.method == b.method && a.n == b.n && a.beta == b.beta) {
        let k = group.len() as f64;
        let mean = |f: &dyn Fn(&ResultRow) -> f64| group.iter().map(f).sum::<f64>() / k;
        out.push(SummaryRow {
            method: group[0].method.clone(),
            n: group[0].n,
            beta: group[0].beta,
            instances: group.len(),
            converged: group.iter().filter(|r| r.converged).count(),
            mean_newton: mean(&|r| r.newton as f64),
            mean_global: mean(&|r| r.global as f64),
            mean_f_evals: mean(&|r| r.f_evals as f64),
            mean_wall_seconds: mean(&|r| r.wall_seconds),
        });
    }
    out
}

/// Plain-text table of the summary, one line per `(method, n, β)`.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<10} {:>6} {:>8} {:>6} {:>9} {:>9} {:>10} {:>10}\n",
        "method", "n", "beta", "solved", "N", "G", "F", "seconds"
    );
    for r in summary {
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>8.0e} {:>3}/{:<2} {:>9.1} {:>9.1} {:>10.1} {:>10.3}",
            r.method, r.n, r.beta, r.converged, r.instances, r.mean_newton, r.mean_global, r.mean_f_evals,
            r.mean_wall_seconds
        );
    }
    s
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_json(rows: &[ResultRow], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(rows)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}
