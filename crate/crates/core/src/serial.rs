//! JSON problem format.
//!
//! ```json
//! {"n": 2,
//!  "f": {"kind": "affine", "M": [[1.0, 0.0], [0.0, 1.0]], "c": [0.0, 0.0]},
//!  "q": [{"m": 1, "xi": [-1.0, 1.0], "eta": [-1.0, 1.0]},
//!        {"m": 1, "xi": [-1.0, 1.0], "eta": [-1.0, 1.0]}]}
//! ```
//!
//! `f` is one of
//!
//! - `{"kind": "random-quartic", "beta": β, "seed": s}` or with an explicit
//!   row-major `"C"` instead of the seed,
//! - `{"kind": "affine", "M": [[..]..], "c": [..]}`,
//! - `{"kind": "oligopoly", "base": <f>, "concave_player1": bool}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{AffineMap, OligopolyMap, QuarticMap};
use crate::polyline::CoordinatePolyline;
use crate::probgen::random_matrix_c;
use crate::problem::{GeProblem, SeparableSubdifferential, SmoothMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FSpec {
    RandomQuartic {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<Vec<Vec<f64>>>,
    },
    Affine {
        #[serde(rename = "M")]
        m: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
    Oligopoly {
        base: Box<FSpec>,
        #[serde(default)]
        concave_player1: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub f: FSpec,
    pub q: Vec<CoordinatePolyline>,
}

fn square_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidProblem(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl FSpec {
    pub fn build(&self, n: usize) -> Result<Box<dyn SmoothMap>> {
        match self {
            FSpec::RandomQuartic { beta, seed, c } => {
                if !(*beta > 0.0) {
                    return Err(Error::InvalidProblem(format!("beta must be positive, got {beta}")));
                }
                let c = match (seed, c) {
                    (_, Some(rows)) => square_matrix(rows, n, "C")?,
                    (Some(s), None) => random_matrix_c(n, *s),
                    (None, None) => {
                        return Err(Error::InvalidProblem("random-quartic needs a seed or C".into()))
                    }
                };
                Ok(Box::new(QuarticMap::from_matrix_c(&c, *beta)?))
            }
            FSpec::Affine { m, c } => {
                let m = square_matrix(m, n, "M")?;
                if c.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: c.len(),
                    });
                }
                Ok(Box::new(AffineMap::new(m, DVector::from_column_slice(c))?))
            }
            FSpec::Oligopoly {
                base,
                concave_player1,
            } => Ok(Box::new(OligopolyMap::new(base.build(n)?, *concave_player1))),
        }
    }

    pub fn affine(m: &DMatrix<f64>, c: &DVector<f64>) -> FSpec {
        FSpec::Affine {
            m: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            c: c.iter().copied().collect(),
        }
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<GeProblem> {
        if self.q.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.q.len(),
            });
        }
        let q = SeparableSubdifferential::new(self.q.clone())?;
        GeProblem::new(self.f.build(self.n)?, q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
