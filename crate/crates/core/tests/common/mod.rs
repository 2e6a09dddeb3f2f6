#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use ssnstar::globalize::{newton_dr_solve, GammaRule, SolverConfig};
use ssnstar::probgen::{gen_random_problem, random_problem_spec, RandomFamilyParams};
use ssnstar::{FSpec, GeProblem, ProblemSpec};

pub struct Draws(ChaCha8Rng);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Draws(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.uniform(lo, hi))
    }
}

pub fn random_problem(n: usize, beta: f64, seed: u64) -> GeProblem {
    gen_random_problem(&RandomFamilyParams { n, beta, seed }).unwrap()
}

/// High-accuracy solution from the origin.
pub fn reference_solution(problem: &GeProblem) -> DVector<f64> {
    let config = SolverConfig {
        eps_tol: 1e-13,
        ..SolverConfig::default()
    };
    let rep = newton_dr_solve(problem, &DVector::zeros(problem.dim()), &config).unwrap();
    assert!(rep.converged, "reference solve failed: {}", rep.status);
    rep.x_final
}

/// Max over coordinates of the distance of `(x_i, -f_i(x))` to the graph of `∂q_i`.
pub fn inclusion_error(problem: &GeProblem, x: &DVector<f64>) -> f64 {
    let fx = problem.f_value(x);
    (0..x.len())
        .map(|i| problem.q().line(i).graph_distance(x[i], -fx[i]))
        .fold(0.0, f64::max)
}

pub fn fixed(gamma: f64) -> SolverConfig {
    SolverConfig {
        gamma_rule: GammaRule::Fixed(gamma),
        ..SolverConfig::default()
    }
}

/// Affine `f(x) = Mx + c` with `M = I + S`, `S` skew, on random polylines.
pub fn affine_problem(n: usize, seed: u64) -> GeProblem {
    let mut draws = Draws::new(seed);
    let s = DMatrix::from_fn(n, n, |_, _| draws.uniform(-1.0, 1.0));
    let m = DMatrix::identity(n, n) + (&s - s.transpose());
    let c = draws.vector(n, -2.0, 2.0);
    let q = random_problem_spec(&RandomFamilyParams { n, beta: 1.0, seed }).unwrap().q;
    ProblemSpec { n, f: FSpec::affine(&m, &c), q }.build().unwrap()
}
