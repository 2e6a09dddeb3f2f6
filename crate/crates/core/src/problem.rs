//! Problem model: smooth part, separable subdifferential, approximation step.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polyline::CoordinatePolyline;

/// Smooth single-valued part `f` of the generalized equation.
///
/// Implementations must be deterministic functions of `x`.
pub trait SmoothMap: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Product of per-coordinate polygonal subdifferentials.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSubdifferential {
    lines: Vec<CoordinatePolyline>,
}

impl SeparableSubdifferential {
    pub fn new(lines: Vec<CoordinatePolyline>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::InvalidProblem("dimension must be at least 1".into()));
        }
        Ok(SeparableSubdifferential { lines })
    }

    pub fn dim(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[CoordinatePolyline] {
        &self.lines
    }

    pub fn line(&self, i: usize) -> &CoordinatePolyline {
        &self.lines[i]
    }

    /// Componentwise resolvent `(I + λ∂q)^{-1}(w)`.
    pub fn resolvent(&self, w: &DVector<f64>, lambda: f64) -> DVector<f64> {
        DVector::from_iterator(
            w.len(),
            self.lines.iter().zip(w.iter()).map(|(line, &wi)| line.prox(wi, lambda)),
        )
    }

    /// Diagonal of `G` at the point `d`.
    pub fn g_diag(&self, d: &DVector<f64>) -> Result<DVector<f64>> {
        let entries = self
            .lines
            .iter()
            .zip(d.iter())
            .map(|(line, &di)| line.g_entry(di))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(entries))
    }

    /// `min_i μ_q(d_i)`.
    pub fn mu_q(&self, d: &DVector<f64>) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (line, &di) in self.lines.iter().zip(d.iter()) {
            best = best.min(line.mu_q(di)?);
        }
        Ok(best)
    }
}

/// Snapshot of the evaluation counters of a [`GeProblem`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCount {
    pub values: u64,
    pub jacobians: u64,
}

impl std::ops::Sub for EvalCount {
    type Output = EvalCount;

    fn sub(self, rhs: EvalCount) -> EvalCount {
        EvalCount {
            values: self.values - rhs.values,
            jacobians: self.jacobians - rhs.jacobians,
        }
    }
}

/// The generalized equation `0 ∈ f(x) + ∂q(x)`.
///
/// All evaluations of `f` and `∇f` go through [`GeProblem::f_value`] and
/// [`GeProblem::f_jacobian`], which bump atomic counters.
pub struct GeProblem {
    f: Box<dyn SmoothMap>,
    q: SeparableSubdifferential,
    value_count: AtomicU64,
    jacobian_count: AtomicU64,
}

impl std::fmt::Debug for GeProblem {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("GeProblem")
            .field("n", &self.dim())
            .field("counts", &self.eval_count())
            .finish()
    }
}

impl GeProblem {
    pub fn new(f: Box<dyn SmoothMap>, q: SeparableSubdifferential) -> Result<Self> {
        if f.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                got: f.dim(),
            });
        }
        Ok(GeProblem {
            f,
            q,
            value_count: AtomicU64::new(0),
            jacobian_count: AtomicU64::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn q(&self) -> &SeparableSubdifferential {
        &self.q
    }

    pub fn f_value(&self, x: &DVector<f64>) -> DVector<f64> {
        self.value_count.fetch_add(1, Ordering::Relaxed);
        self.f.value(x)
    }

    pub fn f_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.jacobian_count.fetch_add(1, Ordering::Relaxed);
        self.f.jacobian(x)
    }

    pub fn eval_count(&self) -> EvalCount {
        EvalCount {
            values: self.value_count.load(Ordering::Relaxed),
            jacobians: self.jacobian_count.load(Ordering::Relaxed),
        }
    }

    /// Evaluates `f` once and bundles it with `x`.
    pub fn eval_point(&self, x: DVector<f64>) -> EvalPoint {
        let fx = self.f_value(&x);
        EvalPoint { x, fx }
    }

    pub fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A point together with the value of `f` there.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub x: DVector<f64>,
    pub fx: DVector<f64>,
}

/// Outcome of the approximation step at scaling `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult {
    /// `u_γ(x)`, the minimizer of `γ/2‖u‖² + ⟨f(x),u⟩ + q(x+u)`.
    pub u: DVector<f64>,
    /// `d̂ = x + u`.
    pub d_hat: DVector<f64>,
    pub gamma: f64,
    pub norm_u: f64,
    /// `r_γ(x) = sqrt(1+γ²)‖u‖`.
    pub residual: f64,
}

impl ApproxResult {
    /// `ŷ = (-γu, u)` as one vector of length `2n`.
    pub fn y_hat(&self) -> DVector<f64> {
        let n = self.u.len();
        DVector::from_fn(2 * n, |k, _| {
            if k < n {
                -self.gamma * self.u[k]
            } else {
                self.u[k - n]
            }
        })
    }
}

/// `r_γ = sqrt(1+γ²)‖u‖₂`.
pub fn residual(gamma: f64, u: &DVector<f64>) -> f64 {
    (1.0 + gamma * gamma).sqrt() * u.norm()
}

/// Approximation step from a point whose `f` value is already known.
pub fn u_gamma_at(problem: &GeProblem, point: &EvalPoint, gamma: f64) -> ApproxResult {
    debug_assert!(gamma > 0.0);
    let n = problem.dim();
    let u = DVector::from_fn(n, |i, _| {
        let xi = point.x[i];
        let z = problem.q().line(i).breakpoint_point(gamma, gamma * xi - point.fx[i]);
        z - xi
    });
    let d_hat = &point.x + &u;
    let norm_u = u.norm();
    ApproxResult {
        residual: (1.0 + gamma * gamma).sqrt() * norm_u,
        u,
        d_hat,
        gamma,
        norm_u,
    }
}

/// `u_γ(x)`; costs exactly one evaluation of `f`.
pub fn u_gamma(problem: &GeProblem, x: &DVector<f64>, gamma: f64) -> ApproxResult {
    let point = problem.eval_point(x.clone());
    u_gamma_at(problem, &point, gamma)
}

/// `λ_min((J + Jᵀ)/2)`, i.e. `min ⟨Ju,u⟩` over unit vectors.
pub fn mu_f_local(jac: &DMatrix<f64>) -> f64 {
    let sym = (jac + jac.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// `‖J‖₁ / √n`, the adaptive scaling used by the drivers.
pub fn column_sum_gamma(jac: &DMatrix<f64>) -> f64 {
    let n = jac.ncols().max(1);
    let norm1 = jac
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let g = norm1 / (n as f64).sqrt();
    if g > 0.0 && g.is_finite() {
        g
    } else {
        1.0
    }
}
