//! Monotone polygonal subdifferential graphs of one coordinate.
//!
//! The graph of `∂q_i` is the polygonal line through
//! `(ξ_1, -∞), (ξ_1, η_1), …, (ξ_2m, η_2m), (ξ_2m, +∞)`. Using 1-based
//! segment indices `j = 1..2m-1`, odd segments are non-vertical
//! (`Δξ_j > 0`, `Δη_j ≥ 0`) and even segments are vertical
//! (`Δξ_j = 0`, `Δη_j > 0`). In the 0-based storage used below the
//! non-vertical segments start at even positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stand-in for `+∞` in reported monotonicity constants.
pub const INFINITY_SENTINEL: f64 = 1e308;

/// Absolute tolerance used to decide whether a point sits on a breakpoint.
#[inline]
pub fn breakpoint_tol(xi: f64) -> f64 {
    1e-12 * (1.0 + xi.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolylineRecord", into = "PolylineRecord")]
pub struct CoordinatePolyline {
    xi: Vec<f64>,
    eta: Vec<f64>,
}

/// Wire form `{m, xi, eta}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolylineRecord {
    pub m: usize,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl TryFrom<PolylineRecord> for CoordinatePolyline {
    type Error = Error;

    fn try_from(rec: PolylineRecord) -> Result<Self> {
        if rec.xi.len() != 2 * rec.m {
            return Err(Error::InvalidPolyline(format!(
                "m = {} but {} abscissae given",
                rec.m,
                rec.xi.len()
            )));
        }
        CoordinatePolyline::new(rec.xi, rec.eta)
    }
}

impl From<CoordinatePolyline> for PolylineRecord {
    fn from(line: CoordinatePolyline) -> Self {
        PolylineRecord {
            m: line.segment_pairs(),
            xi: line.xi,
            eta: line.eta,
        }
    }
}

impl CoordinatePolyline {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if xi.is_empty() || !xi.len().is_multiple_of(2) {
            return Err(Error::InvalidPolyline(format!(
                "need an even, positive number of vertices, got {}",
                xi.len()
            )));
        }
        if xi.len() != eta.len() {
            return Err(Error::InvalidPolyline(format!(
                "{} abscissae but {} ordinates",
                xi.len(),
                eta.len()
            )));
        }
        if let Some(v) = xi.iter().chain(eta.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidPolyline(format!("non-finite vertex coordinate {v}")));
        }
        for k in 0..xi.len() - 1 {
            let dxi = xi[k + 1] - xi[k];
            let deta = eta[k + 1] - eta[k];
            // k even <=> 1-based segment index odd
            let ok = if k % 2 == 0 {
                dxi > 0.0 && deta >= 0.0
            } else {
                dxi == 0.0 && deta > 0.0
            };
            if !ok {
                return Err(Error::InvalidPolyline(format!(
                    "segment {} has Δξ = {dxi}, Δη = {deta}",
                    k + 1
                )));
            }
        }
        Ok(CoordinatePolyline { xi, eta })
    }

    /// Number `m` of (non-vertical, vertical) segment pairs.
    pub fn segment_pairs(&self) -> usize {
        self.xi.len() / 2
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `dom ∂q_i = [ξ_1, ξ_2m]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.xi[0], self.xi[self.xi.len() - 1])
    }

    fn check_domain(&self, d: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if d < lo - breakpoint_tol(lo) || d > hi + breakpoint_tol(hi) || d.is_nan() {
            return Err(Error::OutsideDomain { value: d, lo, hi });
        }
        Ok(())
    }

    /// Resolvent `(I + λ∂q_i)^{-1}(w)`.
    ///
    /// Binary search on the strictly increasing keys `ξ_j + λη_j`, then linear
    /// interpolation on the bracketing segment.
    pub fn prox(&self, w: f64, lambda: f64) -> f64 {
        debug_assert!(lambda > 0.0);
        let last = self.xi.len() - 1;
        let key = |k: usize| self.xi[k] + lambda * self.eta[k];
        // first vertex whose key exceeds w
        let (mut lo, mut hi) = (0usize, self.xi.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if key(mid) <= w {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        match lo {
            0 => self.xi[0],
            j if j > last => self.xi[last],
            j => {
                let p = j - 1;
                let dxi = self.xi[p + 1] - self.xi[p];
                let deta = self.eta[p + 1] - self.eta[p];
                let t = (w - key(p)) / (dxi + lambda * deta);
                (self.xi[p] + t * dxi).clamp(self.xi[p], self.xi[p + 1])
            }
        }
    }

    /// Point `x_i + u_i` solving `0 ∈ γ(z - x_i) + f_i + ∂q_i(z)`, given
    /// `s = γx_i - f_i`.
    ///
    /// Scans for the first vertex with `s < γξ_j + η_j` and interpolates on
    /// the preceding segment in the γ-scaled coordinates.
    pub fn breakpoint_point(&self, gamma: f64, s: f64) -> f64 {
        let last = self.xi.len() - 1;
        let key = |k: usize| gamma * self.xi[k] + self.eta[k];
        let Some(j) = (0..=last).find(|&k| s < key(k)) else {
            return self.xi[last];
        };
        if j == 0 {
            return self.xi[0];
        }
        let p = j - 1;
        let dxi = self.xi[p + 1] - self.xi[p];
        let deta = self.eta[p + 1] - self.eta[p];
        let t = (s - key(p)) / (gamma * dxi + deta);
        (self.xi[p] + t * dxi).clamp(self.xi[p], self.xi[p + 1])
    }

    /// True if `d` is (within tolerance) a vertex abscissa where the graph has
    /// a vertical piece: the two endpoints of the domain and every vertical
    /// segment.
    pub fn on_vertical(&self, d: f64) -> bool {
        let last = self.xi.len() - 1;
        let near = |k: usize| (d - self.xi[k]).abs() <= breakpoint_tol(self.xi[k]);
        near(0) || near(last) || (1..last).step_by(2).any(near)
    }

    /// Diagonal entry of the coderivative selection `G` at abscissa `d`.
    pub fn g_entry(&self, d: f64) -> Result<f64> {
        self.check_domain(d)?;
        if self.on_vertical(d) {
            return Ok(1.0);
        }
        for k in (0..self.xi.len() - 1).step_by(2) {
            if d >= self.xi[k] && d <= self.xi[k + 1] {
                let dxi = self.xi[k + 1] - self.xi[k];
                let deta = self.eta[k + 1] - self.eta[k];
                return Ok(deta / (dxi + deta));
            }
        }
        // only reachable through rounding right at a tolerance boundary
        Ok(1.0)
    }

    /// Local strong-monotonicity constant of `∂q_i` at `d`: the smallest slope
    /// among non-vertical segments whose closed ξ-range contains `d`.
    pub fn mu_q(&self, d: f64) -> Result<f64> {
        self.check_domain(d)?;
        let mut best = INFINITY_SENTINEL;
        for k in (0..self.xi.len() - 1).step_by(2) {
            let lo = self.xi[k] - breakpoint_tol(self.xi[k]);
            let hi = self.xi[k + 1] + breakpoint_tol(self.xi[k + 1]);
            if d >= lo && d <= hi {
                let slope = (self.eta[k + 1] - self.eta[k]) / (self.xi[k + 1] - self.xi[k]);
                best = best.min(slope);
            }
        }
        Ok(best)
    }

    /// Euclidean distance from `(p, p_star)` to the graph, rays included.
    pub fn graph_distance(&self, p: f64, p_star: f64) -> f64 {
        let last = self.xi.len() - 1;
        let down = {
            let (x0, y0) = (self.xi[0], self.eta[0]);
            if p_star <= y0 {
                (p - x0).abs()
            } else {
                (p - x0).hypot(p_star - y0)
            }
        };
        let up = {
            let (x1, y1) = (self.xi[last], self.eta[last]);
            if p_star >= y1 {
                (p - x1).abs()
            } else {
                (p - x1).hypot(p_star - y1)
            }
        };
        let segments = (0..last).map(|k| {
            segment_distance(
                (p, p_star),
                (self.xi[k], self.eta[k]),
                (self.xi[k + 1], self.eta[k + 1]),
            )
        });
        segments.fold(down.min(up), f64::min)
    }
}

fn segment_distance(pt: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((pt.0 - a.0) * dx + (pt.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (pt.0 - (a.0 + t * dx)).hypot(pt.1 - (a.1 + t * dy))
}
