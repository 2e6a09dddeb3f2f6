//! Ground-truth check of `0 ∈ f(x) + ∂q(x)`.

use nalgebra::DVector;
use ssnstar::GeProblem;

use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub tol: f64,
    /// Distance of `(x_i, -f_i(x))` to the graph of `∂q_i`, per coordinate.
    pub distances: Vec<f64>,
}

impl Verification {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }

    /// Coordinates whose distance exceeds the tolerance.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.distances.len()).filter(|&i| !(self.distances[i] <= self.tol)).collect()
    }
}

pub fn verify_solution(problem: &GeProblem, x: &DVector<f64>, tol: f64) -> Result<Verification> {
    if !(tol > 0.0) {
        return Err(BenchError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    problem.check_dim(x)?;
    let fx = problem.f_value(x);
    let distances: Vec<f64> = (0..x.len())
        .map(|i| problem.q().line(i).graph_distance(x[i], -fx[i]))
        .collect();
    let ok = distances.iter().all(|d| *d <= tol);
    Ok(Verification { ok, tol, distances })
}
