//! Semismooth* Newton step and the local (full-step) method.
//!
//! With `u = u_γ(x)`, `d̂ = x + u` and the diagonal selection `G` evaluated at
//! `d̂`, the Newton direction solves the reduced system
//!
//! ```text
//! ((I - G)∇f(x) + G) Δx = (γ(I - G) + G) u
//! ```
//!
//! and the new iterate is `x + Δx`. The `2n × 2n` block system this comes
//! from is never formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{u_gamma, ApproxResult, GeProblem};

/// Relative pivot threshold below which the Newton matrix counts as singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub delta_x: DVector<f64>,
    pub g_diag: DVector<f64>,
    /// `‖CΔx - rhs‖₂`.
    pub linear_residual: f64,
    /// `‖rhs‖₂`, kept for the backward-error check.
    pub rhs_norm: f64,
}

/// Approximation step: `x̂ = x`, `d̂ = x + u_γ(x)`, `ŷ = (-γu, u)`.
pub fn approximation_step(problem: &GeProblem, x: &DVector<f64>, gamma: f64) -> ApproxResult {
    u_gamma(problem, x, gamma)
}

/// Solves the reduced Newton system by LU with partial pivoting.
pub fn newton_direction(
    jac: &DMatrix<f64>,
    g_diag: &DVector<f64>,
    gamma: f64,
    u: &DVector<f64>,
) -> Result<NewtonStep> {
    let n = u.len();
    if jac.nrows() != n || jac.ncols() != n || g_diag.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if g_diag.len() != n { g_diag.len() } else { jac.nrows() },
        });
    }
    let mut c = jac.clone();
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let g = g_diag[i];
        c.row_mut(i).scale_mut(1.0 - g);
        c[(i, i)] += g;
        rhs[i] = (gamma * (1.0 - g) + g) * u[i];
    }
    let norm_inf = c
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let threshold = PIVOT_TOL * norm_inf;

    let lu = c.clone().lu();
    let pivot = lu.u().diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(pivot > threshold) {
        return Err(Error::SingularSystem { pivot, threshold });
    }
    let delta_x = lu
        .solve(&rhs)
        .ok_or(Error::SingularSystem { pivot, threshold })?;
    let linear_residual = (&c * &delta_x - &rhs).norm();
    Ok(NewtonStep {
        delta_x,
        g_diag: g_diag.clone(),
        linear_residual,
        rhs_norm: rhs.norm(),
    })
}

/// Newton direction at `x` given the approximation step there and `∇f(x)`.
pub fn newton_direction_at(
    problem: &GeProblem,
    approx: &ApproxResult,
    jac: &DMatrix<f64>,
) -> Result<NewtonStep> {
    let g = problem.q().g_diag(&approx.d_hat)?;
    newton_direction(jac, &g, approx.gamma, &approx.u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolveReport {
    pub x_final: DVector<f64>,
    /// Number of Newton steps taken.
    pub iterations: usize,
    /// `‖u_γ(x^{(k)})‖` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Full-step semismooth* Newton method with a fixed `γ`, stopping once
/// `‖u‖ ≤ eps`.
///
/// Running out of iterations is not an error; the report has
/// `converged = false`.
pub fn local_solve(
    problem: &GeProblem,
    x0: &DVector<f64>,
    gamma: f64,
    eps: f64,
    max_iter: usize,
) -> Result<LocalSolveReport> {
    local_solve_with(problem, x0, gamma, eps, max_iter, |_, _| {})
}

/// [`local_solve`] with a callback invoked after every approximation step.
pub fn local_solve_with(
    problem: &GeProblem,
    x0: &DVector<f64>,
    gamma: f64,
    eps: f64,
    max_iter: usize,
    mut on_iterate: impl FnMut(usize, &ApproxResult),
) -> Result<LocalSolveReport> {
    problem.check_dim(x0)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut k = 0;
    loop {
        let approx = approximation_step(problem, &x, gamma);
        history.push(approx.norm_u);
        on_iterate(k, &approx);
        if approx.norm_u <= eps {
            return Ok(LocalSolveReport {
                x_final: x,
                iterations: k,
                residual_history: history,
                converged: true,
            });
        }
        if k >= max_iter {
            return Ok(LocalSolveReport {
                x_final: x,
                iterations: k,
                residual_history: history,
                converged: false,
            });
        }
        let jac = problem.f_jacobian(&x);
        let step = newton_direction_at(problem, &approx, &jac)?;
        x += &step.delta_x;
        k += 1;
    }
}
