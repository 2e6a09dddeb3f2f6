//! Seeded problem generators and characteristic values.
//!
//! # Random family
//!
//! For dimension `n`, `β > 0` and a 64-bit seed, the generator draws from
//! ChaCha8 seeded with `seed_from_u64(seed)`. Every uniform variate is
//! `u = (next_u64 >> 11) · 2⁻⁵³ ∈ [0, 1)`, and the stream is consumed as
//!
//! 1. the entries of `C ∈ ℝⁿˣⁿ`, row-major, `C_ij = 2u - 1`,
//! 2. for each coordinate `i` in order: `m_i = 1 + ⌊10u⌋`, then `ξ₁`, `η₁`,
//!    then for `j = 1, ..., 2m_i - 1` the increments `Δξ_j, Δη_j` for odd `j`
//!    and `Δη_j` alone for even `j`.
//!
//! Draws on half-open intervals `(0, b]` use `b(1 - u)`. A zero draw for
//! `Δη_j` on odd `j` is redrawn so every non-vertical segment is strictly
//! increasing.
//!
//! With `A = (β/n)CCᵀ` the smooth part is `f(x) = 4(xᵀAx)Ax + (C - Cᵀ)x`.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyline::{CoordinatePolyline, INFINITY_SENTINEL};
use crate::problem::{mu_f_local, GeProblem};
use crate::serial::{FSpec, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFamilyParams {
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Uniform(ChaCha8Rng::seed_from_u64(seed))
    }

    /// `[0, 1)`.
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `[lo, hi)`.
    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// `(0, b]`.
    fn open_closed(&mut self, b: f64) -> f64 {
        b * (1.0 - self.unit())
    }

    /// `[0, b]` without zero.
    fn nonzero(&mut self, b: f64) -> f64 {
        loop {
            let v = b * self.unit();
            if v > 0.0 {
                return v;
            }
        }
    }
}

fn draw_c(rng: &mut Uniform, n: usize) -> DMatrix<f64> {
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        entries.push(rng.range(-1.0, 1.0));
    }
    DMatrix::from_row_slice(n, n, &entries)
}

/// The matrix `C` of the random family; the first `n²` draws of the stream.
pub fn random_matrix_c(n: usize, seed: u64) -> DMatrix<f64> {
    draw_c(&mut Uniform::new(seed), n)
}

fn draw_polyline(rng: &mut Uniform, beta: f64) -> CoordinatePolyline {
    let m = 1 + (10.0 * rng.unit()) as usize;
    let mf = m as f64;
    let mut xi = Vec::with_capacity(2 * m);
    let mut eta = Vec::with_capacity(2 * m);
    xi.push(rng.range(-mf / 2.0, mf / 2.0));
    eta.push(rng.range(-1.5 * beta * mf, 0.0));
    for j in 1..2 * m {
        let (dxi, deta) = if j % 2 == 1 {
            let dxi = rng.open_closed(1.0);
            (dxi, rng.nonzero(beta))
        } else {
            (0.0, rng.open_closed(beta))
        };
        xi.push(xi[j - 1] + dxi);
        eta.push(eta[j - 1] + deta);
    }
    CoordinatePolyline::new(xi, eta).expect("generated polyline is valid")
}

fn check_random(params: &RandomFamilyParams) -> Result<()> {
    if params.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(params.beta > 0.0 && params.beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {}", params.beta)));
    }
    Ok(())
}

/// Serializable description of a random-family instance.
pub fn random_problem_spec(params: &RandomFamilyParams) -> Result<ProblemSpec> {
    check_random(params)?;
    let mut rng = Uniform::new(params.seed);
    let _ = draw_c(&mut rng, params.n);
    let q = (0..params.n).map(|_| draw_polyline(&mut rng, params.beta)).collect();
    Ok(ProblemSpec {
        n: params.n,
        f: FSpec::RandomQuartic {
            beta: params.beta,
            seed: Some(params.seed),
            c: None,
        },
        q,
    })
}

pub fn gen_random_problem(params: &RandomFamilyParams) -> Result<GeProblem> {
    random_problem_spec(params)?.build()
}

/// Oligopoly-shaped problem: production of player `i` is boxed in `[b_i, d_i]`
/// with friction `β_i|x_i - a_i|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OligopolyParams {
    /// Reference productions.
    pub a: Vec<f64>,
    pub beta_costs: Vec<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub market: FSpec,
    pub concave_player1: bool,
}

impl OligopolyParams {
    /// Five players, `a = (10, 20, 30, 40, 50)`, boxes `[0, 100]`, market map
    /// `f(x) = M(x - a)` with `M = I + ¼·11ᵀ`. The solution is `x̄ = a`.
    pub fn synthetic_default() -> Self {
        let n = 5;
        let a: Vec<f64> = (1..=n).map(|i| 10.0 * i as f64).collect();
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.25 } else { 0.25 });
        let c = -(&m * DVector::from_column_slice(&a));
        OligopolyParams {
            beta_costs: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            b: vec![0.0; n],
            d: vec![100.0; n],
            market: FSpec::affine(&m, &c),
            a,
            concave_player1: false,
        }
    }

    pub fn n_players(&self) -> usize {
        self.a.len()
    }
}

/// Polyline of `∂(β|· - a| + δ_[b,d])`; without friction the vertical
/// segment at `a` disappears and a single flat segment remains.
pub fn oligopoly_polyline(a: f64, beta: f64, b: f64, d: f64) -> Result<CoordinatePolyline> {
    if !(b < a && a < d) {
        return Err(Error::InvalidParameter(format!("need b < a < d, got b={b}, a={a}, d={d}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("friction must be nonnegative, got {beta}")));
    }
    if beta == 0.0 {
        return CoordinatePolyline::new(vec![b, d], vec![0.0, 0.0]);
    }
    CoordinatePolyline::new(vec![b, a, a, d], vec![-beta, -beta, beta, beta])
}

pub fn oligopoly_problem_spec(params: &OligopolyParams) -> Result<ProblemSpec> {
    let n = params.n_players();
    if n == 0 || [params.beta_costs.len(), params.b.len(), params.d.len()].iter().any(|&l| l != n) {
        return Err(Error::InvalidParameter("oligopoly vectors must share a positive length".into()));
    }
    let q = (0..n)
        .map(|i| oligopoly_polyline(params.a[i], params.beta_costs[i], params.b[i], params.d[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProblemSpec {
        n,
        f: FSpec::Oligopoly {
            base: Box::new(params.market.clone()),
            concave_player1: params.concave_player1,
        },
        q,
    })
}

pub fn gen_oligopoly_problem(params: &OligopolyParams) -> Result<GeProblem> {
    oligopoly_problem_spec(params)?.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖∇f(x̄)‖₂`.
    pub norm_jac: f64,
    /// `‖∇f(x̄)⁻¹‖₂`, or `1e308` for a singular Jacobian.
    pub norm_jac_inv: f64,
    pub mu_f_at: f64,
    /// `min_i μ_q(x̄_i)`, `1e308` standing in for infinity.
    pub mu_q_at: f64,
}

pub fn characteristic_values(problem: &GeProblem, x_bar: &DVector<f64>) -> Result<Diagnostics> {
    problem.check_dim(x_bar)?;
    let jac = problem.f_jacobian(x_bar);
    let sv = jac.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let norm_jac_inv = if smin > smax * f64::EPSILON * jac.nrows() as f64 && smin > 0.0 {
        1.0 / smin
    } else {
        INFINITY_SENTINEL
    };
    Ok(Diagnostics {
        norm_jac: smax,
        norm_jac_inv,
        mu_f_at: mu_f_local(&jac),
        mu_q_at: problem.q().mu_q(x_bar)?.min(INFINITY_SENTINEL),
    })
}
