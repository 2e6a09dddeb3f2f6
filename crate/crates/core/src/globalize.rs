//! Globalized drivers.
//!
//! Every driver evaluates `u_γ` and `r_γ` at each iterate, records one
//! [`TraceRow`] per iterate and stops once `r_γ(x) ≤ eps_tol`.
//!
//! - [`heuristic_solve`]: Newton with a nonmonotone backtracking line search.
//! - [`hybrid_solve`]: Newton steps guarded by a benchmark residual, falling
//!   back to a splitting step.
//! - [`newton_dr_solve`]: alternating Douglas-Rachford and Newton steps at a
//!   fixed `γ`.
//! - [`splitting_solve`]: the pure fixed-point iteration of one operator.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{column_sum_gamma, u_gamma_at, ApproxResult, EvalCount, EvalPoint, GeProblem};
use crate::splitting::{t_dr_from, t_fb_from, t_pm_at, SplitOperator, SplitStepResult};
use crate::ssn::{newton_direction_at, NewtonStep};

/// Maximum number of trial step sizes per line search.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// `δ^(k) = 0.1 / max(k, 1)`.
    Harmonic,
    Constant(f64),
}

impl DeltaRule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            DeltaRule::Harmonic => 0.1 / k.max(1) as f64,
            DeltaRule::Constant(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Fixed(f64),
    /// `γ^(k) = ‖∇f(x^(k))‖₁ / √n`.
    Adaptive,
}

impl GammaRule {
    fn needs_jacobian(&self) -> bool {
        matches!(self, GammaRule::Adaptive)
    }

    fn gamma(&self, jac: Option<&DMatrix<f64>>) -> f64 {
        match (self, jac) {
            (GammaRule::Fixed(g), _) => *g,
            (GammaRule::Adaptive, Some(j)) => column_sum_gamma(j),
            (GammaRule::Adaptive, None) => unreachable!("adaptive rule without a Jacobian"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Line-search parameter `ν`.
    pub nu: f64,
    /// Mixing weight `ξ` of the Newton/Douglas-Rachford driver.
    pub xi: f64,
    /// `None` picks the harmonic rule for [`heuristic_solve`] and the
    /// constant `5e-4` for [`hybrid_solve`].
    pub delta_rule: Option<DeltaRule>,
    /// Trial step sizes are `beta_base^j`, `j = 0, 1, ...`.
    pub beta_base: f64,
    pub gamma_rule: GammaRule,
    pub eps_tol: f64,
    /// Maximum number of steps (trace rows after the first).
    pub max_iter: usize,
    pub time_limit_seconds: Option<f64>,
    /// Parameter `σ` of the projection operator.
    pub sigma: f64,
    /// Relative tolerance of the inner solve in the Douglas-Rachford step.
    pub tol_inner: f64,
    /// Treat every Newton system as singular. Only useful for testing the
    /// fallback paths.
    pub disable_newton: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 0.1,
            xi: 0.9,
            delta_rule: None,
            beta_base: 0.5,
            gamma_rule: GammaRule::Adaptive,
            eps_tol: 1e-8,
            max_iter: 5000,
            time_limit_seconds: None,
            sigma: 0.9,
            tol_inner: 1e-12,
            disable_newton: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        open_unit("nu", self.nu)?;
        open_unit("xi", self.xi)?;
        open_unit("beta_base", self.beta_base)?;
        open_unit("sigma", self.sigma)?;
        if let Some(DeltaRule::Constant(d)) = self.delta_rule {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidParameter(format!("delta must lie in (0,1), got {d}")));
            }
        }
        if let GammaRule::Fixed(g) = self.gamma_rule {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.eps_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("eps_tol must be positive, got {}", self.eps_tol)));
        }
        if !(self.tol_inner > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_inner must be positive, got {}",
                self.tol_inner
            )));
        }
        if let Some(t) = self.time_limit_seconds {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("time limit must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// The starting point.
    Start,
    Newton,
    /// A step of a splitting operator.
    Global,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Start => "start",
            StepKind::Newton => "newton",
            StepKind::Global => "global",
        })
    }
}

/// State at iterate `iter`, reached by a step of kind `step_kind` with
/// step size `alpha` (`0` on the start row, `1` for splitting steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub step_kind: StepKind,
    pub alpha: f64,
    pub gamma: f64,
    pub norm_u: f64,
    pub residual: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    TimeLimit,
    Aborted(String),
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Converged => f.write_str("converged"),
            RunStatus::MaxIterations => f.write_str("iteration limit reached"),
            RunStatus::TimeLimit => f.write_str("time limit reached"),
            RunStatus::Aborted(why) => write!(f, "aborted: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub x_final: DVector<f64>,
    pub converged: bool,
    pub status: RunStatus,
    /// Accepted Newton steps (`N`).
    pub newton_count: usize,
    /// Newton systems solved successfully, accepted or not.
    pub newton_directions: usize,
    /// Splitting steps (`G`).
    pub global_count: usize,
    /// Evaluations of `f` (`F`).
    pub f_evals: u64,
    pub jac_evals: u64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub final_residual: f64,
    pub final_gamma: f64,
    /// Benchmark residuals `r_N^(l)` of [`hybrid_solve`]; empty otherwise.
    pub benchmark_residuals: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Solver selection by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Full-step local Newton method.
    Ssn,
    Heuristic,
    HybridFb,
    HybridDr,
    HybridPm,
    NewtonDr,
    Fb,
    Dr,
    Pm,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ssn,
        Method::Heuristic,
        Method::HybridFb,
        Method::HybridDr,
        Method::HybridPm,
        Method::NewtonDr,
        Method::Fb,
        Method::Dr,
        Method::Pm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ssn => "ssn",
            Method::Heuristic => "heuristic",
            Method::HybridFb => "hybrid-fb",
            Method::HybridDr => "hybrid-dr",
            Method::HybridPm => "hybrid-pm",
            Method::NewtonDr => "newton-dr",
            Method::Fb => "fb",
            Method::Dr => "dr",
            Method::Pm => "pm",
        }
    }

    pub fn solve(&self, problem: &GeProblem, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunReport> {
        use SplitOperator::*;
        match self {
            Method::Ssn => ssn_solve(problem, x0, config),
            Method::Heuristic => heuristic_solve(problem, x0, config),
            Method::HybridFb => hybrid_solve(problem, x0, config, ForwardBackward),
            Method::HybridDr => hybrid_solve(problem, x0, config, DouglasRachford),
            Method::HybridPm => hybrid_solve(problem, x0, config, Projection),
            Method::NewtonDr => newton_dr_solve(problem, x0, config),
            Method::Fb => splitting_solve(problem, x0, config, ForwardBackward),
            Method::Dr => splitting_solve(problem, x0, config, DouglasRachford),
            Method::Pm => splitting_solve(problem, x0, config, Projection),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Bookkeeping shared by all drivers.
struct Run<'a> {
    problem: &'a GeProblem,
    config: &'a SolverConfig,
    started: Instant,
    counts0: EvalCount,
    trace: Vec<TraceRow>,
    newton: usize,
    directions: usize,
    global: usize,
    benchmark: Vec<f64>,
}

impl<'a> Run<'a> {
    fn start(problem: &'a GeProblem, x0: &DVector<f64>, config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        problem.check_dim(x0)?;
        Ok(Run {
            problem,
            config,
            started: Instant::now(),
            counts0: problem.eval_count(),
            trace: Vec::new(),
            newton: 0,
            directions: 0,
            global: 0,
            benchmark: Vec::new(),
        })
    }

    fn record(&mut self, kind: StepKind, alpha: f64, a: &ApproxResult) {
        match kind {
            StepKind::Newton => self.newton += 1,
            StepKind::Global => self.global += 1,
            StepKind::Start => {}
        }
        self.trace.push(TraceRow {
            iter: self.trace.len(),
            step_kind: kind,
            alpha,
            gamma: a.gamma,
            norm_u: a.norm_u,
            residual: a.residual,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        });
    }

    fn steps(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    /// Stopping decision after the latest row has been recorded.
    fn check(&self, a: &ApproxResult) -> Option<RunStatus> {
        if a.residual <= self.config.eps_tol {
            return Some(RunStatus::Converged);
        }
        if self.steps() >= self.config.max_iter {
            return Some(RunStatus::MaxIterations);
        }
        match self.config.time_limit_seconds {
            Some(t) if self.started.elapsed().as_secs_f64() > t => Some(RunStatus::TimeLimit),
            _ => None,
        }
    }

    fn direction(&mut self, a: &ApproxResult, jac: &DMatrix<f64>) -> Result<NewtonStep> {
        if self.config.disable_newton {
            return Err(Error::SingularSystem {
                pivot: 0.0,
                threshold: 0.0,
            });
        }
        let step = newton_direction_at(self.problem, a, jac)?;
        self.directions += 1;
        Ok(step)
    }

    fn finish(self, x: DVector<f64>, status: RunStatus) -> RunReport {
        let used = self.problem.eval_count() - self.counts0;
        let last = self.trace.last().expect("trace has a start row");
        RunReport {
            converged: status == RunStatus::Converged,
            status,
            x_final: x,
            newton_count: self.newton,
            newton_directions: self.directions,
            global_count: self.global,
            f_evals: used.values,
            jac_evals: used.jacobians,
            iterations: self.steps(),
            wall_seconds: self.started.elapsed().as_secs_f64(),
            final_residual: last.residual,
            final_gamma: last.gamma,
            benchmark_residuals: self.benchmark,
            trace: self.trace,
        }
    }
}

/// First `β_j = base^j` above `floor` for which `accept` yields a value.
fn backtrack<T>(base: f64, floor: f64, mut accept: impl FnMut(f64) -> Option<T>) -> Option<(f64, T)> {
    let mut beta = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        if beta <= floor {
            return None;
        }
        if let Some(t) = accept(beta) {
            return Some((beta, t));
        }
        beta *= base;
    }
    None
}

/// Trial point `x + βΔx` with its approximation step at `γ`.
fn trial(problem: &GeProblem, x: &DVector<f64>, dx: &DVector<f64>, beta: f64, gamma: f64) -> (EvalPoint, ApproxResult) {
    let point = problem.eval_point(x + dx * beta);
    let approx = u_gamma_at(problem, &point, gamma);
    (point, approx)
}

/// Jacobian at `point` if the gamma rule needs it, followed by `γ` and `u_γ`.
fn assess(problem: &GeProblem, rule: GammaRule, point: &EvalPoint) -> (Option<DMatrix<f64>>, ApproxResult) {
    let jac = rule.needs_jacobian().then(|| problem.f_jacobian(&point.x));
    let gamma = rule.gamma(jac.as_ref());
    let approx = u_gamma_at(problem, point, gamma);
    (jac, approx)
}

fn split_step(
    problem: &GeProblem,
    op: SplitOperator,
    point: &EvalPoint,
    approx: &ApproxResult,
    jac: &mut Option<DMatrix<f64>>,
    config: &SolverConfig,
) -> Result<SplitStepResult> {
    match op {
        SplitOperator::ForwardBackward => Ok(t_fb_from(point, approx)),
        SplitOperator::DouglasRachford => t_dr_from(problem, point, approx, config.tol_inner),
        SplitOperator::Projection => {
            let j = jac.get_or_insert_with(|| problem.f_jacobian(&point.x));
            t_pm_at(problem, point, approx.gamma, column_sum_gamma(j), config.sigma)
        }
    }
}

/// Full-step Newton method; `γ^(k)` follows the gamma rule at every iterate.
pub fn ssn_solve(problem: &GeProblem, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunReport> {
    let mut run = Run::start(problem, x0, config)?;
    let mut point = problem.eval_point(x0.clone());
    let mut kind = StepKind::Start;
    loop {
        let (jac, approx) = assess(problem, config.gamma_rule, &point);
        run.record(kind, if kind == StepKind::Start { 0.0 } else { 1.0 }, &approx);
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }
        let jac = jac.unwrap_or_else(|| problem.f_jacobian(&point.x));
        let step = match run.direction(&approx, &jac) {
            Ok(s) => s,
            Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
        };
        point = problem.eval_point(&point.x + &step.delta_x);
        kind = StepKind::Newton;
    }
}

/// Newton's method with the line search
/// `r_γ(x + β_jΔx) ≤ (1 + δ^(k) - νβ_j) r_γ(x)`.
pub fn heuristic_solve(problem: &GeProblem, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunReport> {
    let delta_rule = config.delta_rule.unwrap_or(DeltaRule::Harmonic);
    let mut run = Run::start(problem, x0, config)?;
    let mut point = problem.eval_point(x0.clone());
    let mut kind = StepKind::Start;
    let mut alpha = 0.0;
    loop {
        let (jac, approx) = assess(problem, config.gamma_rule, &point);
        run.record(kind, alpha, &approx);
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }
        let jac = jac.unwrap_or_else(|| problem.f_jacobian(&point.x));
        let step = match run.direction(&approx, &jac) {
            Ok(s) => s,
            Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
        };
        let delta = delta_rule.at(run.steps());
        let (gamma, r) = (approx.gamma, approx.residual);
        let found = backtrack(config.beta_base, 0.0, |beta| {
            let (p, a) = trial(problem, &point.x, &step.delta_x, beta, gamma);
            (a.residual <= (1.0 + delta - config.nu * beta) * r).then_some(p)
        });
        match found {
            Some((beta, p)) => {
                point = p;
                kind = StepKind::Newton;
                alpha = beta;
            }
            None => {
                let why = Error::LineSearchFailure(MAX_BACKTRACKS).to_string();
                return Ok(run.finish(point.x, RunStatus::Aborted(why)));
            }
        }
    }
}

/// Newton steps accepted against a benchmark residual `r_N`, otherwise one
/// step of `op`.
///
/// A Newton step with size `β_j > δ^(l)` is accepted when
/// `r_γ(x + β_jΔx) ≤ (1 - νβ_j) r_N^(l)`; `r_N` then becomes that residual.
/// All benchmark comparisons use `γ^(0)`, so that `r_N` keeps one scale
/// while the iteration itself follows the gamma rule.
pub fn hybrid_solve(
    problem: &GeProblem,
    x0: &DVector<f64>,
    config: &SolverConfig,
    op: SplitOperator,
) -> Result<RunReport> {
    let delta_rule = config.delta_rule.unwrap_or(DeltaRule::Constant(5e-4));
    let mut run = Run::start(problem, x0, config)?;
    let mut point = problem.eval_point(x0.clone());
    let mut kind = StepKind::Start;
    let mut alpha = 0.0;
    let mut gamma_n = 0.0;
    loop {
        let (mut jac, approx) = assess(problem, config.gamma_rule, &point);
        if run.trace.is_empty() {
            run.benchmark.push(approx.residual);
            gamma_n = approx.gamma;
        }
        run.record(kind, alpha, &approx);
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }

        let j = jac.get_or_insert_with(|| problem.f_jacobian(&point.x));
        let accepted = match run.direction(&approx, j) {
            Ok(step) => {
                let delta = delta_rule.at(run.benchmark.len() - 1);
                let r_n = *run.benchmark.last().unwrap();
                backtrack(config.beta_base, delta, |beta| {
                    let (p, a) = trial(problem, &point.x, &step.delta_x, beta, gamma_n);
                    (a.residual <= (1.0 - config.nu * beta) * r_n).then_some((p, a.residual))
                })
            }
            Err(_) => None,
        };
        match accepted {
            Some((beta, (p, r))) => {
                run.benchmark.push(r);
                point = p;
                kind = StepKind::Newton;
                alpha = beta;
            }
            None => {
                let step = match split_step(problem, op, &point, &approx, &mut jac, config) {
                    Ok(s) => s,
                    Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
                };
                if step.degenerate {
                    return Ok(finish_degenerate(run, point.x, &approx));
                }
                point = problem.eval_point(step.x_next);
                kind = StepKind::Global;
                alpha = 1.0;
            }
        }
    }
}

fn finish_degenerate(run: Run<'_>, x: DVector<f64>, approx: &ApproxResult) -> RunReport {
    let status = if approx.residual <= run.config.eps_tol {
        RunStatus::Converged
    } else {
        RunStatus::Aborted("projection direction vanished".into())
    };
    run.finish(x, status)
}

/// Alternates `x^(2k+1) = T^DR_{1/γ}(x^(2k))` with a Newton step from
/// `x^(2k+1)` whose size is the first `β_j` satisfying
/// `‖u(x^(2k+1) + β_jΔx)‖ ≤ (1 - νβ_j)(ξ‖u^(2k)‖ + (1-ξ)‖u^(2k+1)‖)`.
///
/// `γ` stays fixed; the adaptive rule is evaluated once at `x0`.
pub fn newton_dr_solve(problem: &GeProblem, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunReport> {
    let mut run = Run::start(problem, x0, config)?;
    let mut point = problem.eval_point(x0.clone());
    let (_, mut approx) = assess(problem, config.gamma_rule, &point);
    let gamma = approx.gamma;
    run.record(StepKind::Start, 0.0, &approx);
    loop {
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }
        let dr = match t_dr_from(problem, &point, &approx, config.tol_inner) {
            Ok(s) => s,
            Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
        };
        let u_even = approx.norm_u;
        point = problem.eval_point(dr.x_next);
        approx = u_gamma_at(problem, &point, gamma);
        run.record(StepKind::Global, 1.0, &approx);
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }

        let jac = problem.f_jacobian(&point.x);
        let step = match run.direction(&approx, &jac) {
            Ok(s) => s,
            Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
        };
        let bound = config.xi * u_even + (1.0 - config.xi) * approx.norm_u;
        let found = backtrack(config.beta_base, 0.0, |beta| {
            let (p, a) = trial(problem, &point.x, &step.delta_x, beta, gamma);
            (a.norm_u <= (1.0 - config.nu * beta) * bound).then_some((p, a))
        });
        match found {
            Some((beta, (p, a))) => {
                point = p;
                approx = a;
                run.record(StepKind::Newton, beta, &approx);
            }
            None => {
                let why = Error::LineSearchFailure(MAX_BACKTRACKS).to_string();
                return Ok(run.finish(point.x, RunStatus::Aborted(why)));
            }
        }
    }
}

/// Pure fixed-point iteration `x^(k+1) = T(x^(k))`.
pub fn splitting_solve(
    problem: &GeProblem,
    x0: &DVector<f64>,
    config: &SolverConfig,
    op: SplitOperator,
) -> Result<RunReport> {
    let mut run = Run::start(problem, x0, config)?;
    let mut point = problem.eval_point(x0.clone());
    let mut kind = StepKind::Start;
    loop {
        let (mut jac, approx) = assess(problem, config.gamma_rule, &point);
        run.record(kind, if kind == StepKind::Start { 0.0 } else { 1.0 }, &approx);
        if let Some(status) = run.check(&approx) {
            return Ok(run.finish(point.x, status));
        }
        let step = match split_step(problem, op, &point, &approx, &mut jac, config) {
            Ok(s) => s,
            Err(e) => return Ok(run.finish(point.x, RunStatus::Aborted(e.to_string()))),
        };
        if step.degenerate {
            return Ok(finish_degenerate(run, point.x, &approx));
        }
        point = problem.eval_point(step.x_next);
        kind = StepKind::Global;
    }
}
