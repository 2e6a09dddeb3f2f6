//! Fixed-point operators of monotone splitting methods.
//!
//! - forward-backward: `T^FB_λ(x) = (I + λ∂q)^{-1}(x - λf(x)) = x + u_{1/λ}(x)`
//! - Douglas-Rachford: `T^DR_λ(x) = (I + λf)^{-1}(T^FB_λ(x) + λf(x))`
//! - hyperplane projection: project `x` onto `{z | ⟨v, z - x̂⟩ = 0}` where
//!   `x̂ = x + u_γ(x)` and `v = -γ(x̂ - x) + f(x̂) - f(x) ∈ H(x̂)`.
//!
//! The `*_at` variants take a point whose `f` value is already known and,
//! where useful, the approximation step at that point, so that drivers do not
//! pay for the same evaluation twice.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{column_sum_gamma, u_gamma_at, ApproxResult, EvalPoint, GeProblem};

pub const MAX_INNER_ITERATIONS: usize = 50;
pub const MAX_GAMMA_DOUBLINGS: usize = 60;
const MAX_INNER_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitOperator {
    ForwardBackward,
    DouglasRachford,
    Projection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStepResult {
    pub x_next: DVector<f64>,
    /// `u_γ(x)` computed inside the step.
    pub u_used: DVector<f64>,
    pub gamma_used: f64,
    pub inner_iterations: usize,
    /// Set by the projection step when `v` vanishes numerically; `x` is
    /// returned unchanged and is treated as a solution.
    pub degenerate: bool,
}

pub fn t_fb(problem: &GeProblem, x: &DVector<f64>, lambda: f64) -> SplitStepResult {
    let point = problem.eval_point(x.clone());
    let approx = u_gamma_at(problem, &point, 1.0 / lambda);
    t_fb_from(&point, &approx)
}

/// Forward-backward step reusing an approximation step at `γ = 1/λ`.
pub fn t_fb_from(point: &EvalPoint, approx: &ApproxResult) -> SplitStepResult {
    SplitStepResult {
        x_next: &point.x + &approx.u,
        u_used: approx.u.clone(),
        gamma_used: approx.gamma,
        inner_iterations: 0,
        degenerate: false,
    }
}

/// `(I + λf)^{-1}(v)` by damped Newton started at `v`.
///
/// Returns the root and the number of Newton iterations used.
pub fn resolvent_f(
    problem: &GeProblem,
    v: &DVector<f64>,
    lambda: f64,
    tol_inner: f64,
) -> Result<(DVector<f64>, usize)> {
    let n = v.len();
    let target = tol_inner * (1.0 + v.norm());
    let mut z = v.clone();
    let mut fz = problem.f_value(&z);
    let mut res = &z + &fz * lambda - v;
    let mut res_norm = res.norm();
    for it in 0..MAX_INNER_ITERATIONS {
        if res_norm <= target {
            return Ok((z, it));
        }
        let mut jac: DMatrix<f64> = problem.f_jacobian(&z) * lambda;
        for i in 0..n {
            jac[(i, i)] += 1.0;
        }
        let step = jac.lu().solve(&(-&res)).ok_or(Error::InnerSolveFailure {
            iterations: it,
            residual: res_norm,
        })?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_INNER_HALVINGS {
            let trial = &z + &step * alpha;
            let f_trial = problem.f_value(&trial);
            let r_trial = &trial + &f_trial * lambda - v;
            let r_trial_norm = r_trial.norm();
            if r_trial_norm < res_norm {
                z = trial;
                fz = f_trial;
                res = r_trial;
                res_norm = r_trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let _ = fz;
    if res_norm <= target {
        return Ok((z, MAX_INNER_ITERATIONS));
    }
    Err(Error::InnerSolveFailure {
        iterations: MAX_INNER_ITERATIONS,
        residual: res_norm,
    })
}

pub fn t_dr(problem: &GeProblem, x: &DVector<f64>, lambda: f64, tol_inner: f64) -> Result<SplitStepResult> {
    let point = problem.eval_point(x.clone());
    let approx = u_gamma_at(problem, &point, 1.0 / lambda);
    t_dr_from(problem, &point, &approx, tol_inner)
}

/// Douglas-Rachford step reusing an approximation step at `γ = 1/λ`.
pub fn t_dr_from(
    problem: &GeProblem,
    point: &EvalPoint,
    approx: &ApproxResult,
    tol_inner: f64,
) -> Result<SplitStepResult> {
    let lambda = 1.0 / approx.gamma;
    let v = &point.x + &approx.u + &point.fx * lambda;
    let (x_next, inner) = resolvent_f(problem, &v, lambda, tol_inner)?;
    Ok(SplitStepResult {
        x_next,
        u_used: approx.u.clone(),
        gamma_used: approx.gamma,
        inner_iterations: inner,
        degenerate: false,
    })
}

pub fn t_pm(problem: &GeProblem, x: &DVector<f64>, gamma0: f64, sigma: f64) -> Result<SplitStepResult> {
    let point = problem.eval_point(x.clone());
    let jac = problem.f_jacobian(x);
    t_pm_at(problem, &point, gamma0, column_sum_gamma(&jac), sigma)
}

/// Hyperplane-projection step.
///
/// `jac_floor` is `‖∇f(x)‖₁/√n`; trial values are
/// `χ_j = max(gamma0, jac_floor)·2^j` until the σ-condition
/// `‖f(x̂) - f(x)‖ ≤ σ·max{‖-γu + f(x̂) - f(x)‖, γ‖u‖}` holds.
pub fn t_pm_at(
    problem: &GeProblem,
    point: &EvalPoint,
    gamma0: f64,
    jac_floor: f64,
    sigma: f64,
) -> Result<SplitStepResult> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma must lie in (0,1), got {sigma}")));
    }
    let x = &point.x;
    let mut gamma = gamma0.max(jac_floor);
    for _ in 0..=MAX_GAMMA_DOUBLINGS {
        let approx = u_gamma_at(problem, point, gamma);
        if approx.norm_u == 0.0 {
            return Ok(degenerate(point, approx));
        }
        let x_hat = &approx.d_hat;
        let f_hat = problem.f_value(x_hat);
        let df = &f_hat - &point.fx;
        let v = &df - &approx.u * gamma;
        let lhs = df.norm();
        let rhs = sigma * v.norm().max(gamma * approx.norm_u);
        if lhs <= rhs {
            let v_norm2 = v.norm_squared();
            if v_norm2.sqrt() <= 1e-14 * (1.0 + point.fx.norm()) {
                return Ok(degenerate(point, approx));
            }
            let offset = x - x_hat;
            #[cfg(not(feature = "pm-literal-sign"))]
            let coef = v.dot(&offset) / v_norm2;
            #[cfg(feature = "pm-literal-sign")]
            let coef = -v.dot(&offset) / v_norm2;
            return Ok(SplitStepResult {
                x_next: x - &v * coef,
                u_used: approx.u,
                gamma_used: gamma,
                inner_iterations: 0,
                degenerate: false,
            });
        }
        gamma *= 2.0;
    }
    Err(Error::GammaSearchFailure(MAX_GAMMA_DOUBLINGS))
}

fn degenerate(point: &EvalPoint, approx: ApproxResult) -> SplitStepResult {
    SplitStepResult {
        x_next: point.x.clone(),
        gamma_used: approx.gamma,
        u_used: approx.u,
        inner_iterations: 0,
        degenerate: true,
    }
}
