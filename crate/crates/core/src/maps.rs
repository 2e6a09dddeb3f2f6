//! Concrete smooth maps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::SmoothMap;

/// `f(x) = Mx + c`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    m: DMatrix<f64>,
    c: DVector<f64>,
}

impl AffineMap {
    pub fn new(m: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() != c.len() {
            return Err(Error::InvalidProblem(format!(
                "affine map needs a square matrix matching c: M is {}x{}, c has {}",
                m.nrows(),
                m.ncols(),
                c.len()
            )));
        }
        Ok(AffineMap { m, c })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.c
    }
}

impl SmoothMap for AffineMap {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x + &self.c
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.m.clone()
    }
}

/// `f(x) = ∇h(x) + Sx` with `h(x) = (xᵀAx)²` and skew-symmetric `S`.
///
/// For the random family `A = (β/n)CCᵀ` and `S = C - Cᵀ`.
#[derive(Debug, Clone)]
pub struct QuarticMap {
    a: DMatrix<f64>,
    skew: DMatrix<f64>,
}

impl QuarticMap {
    pub fn from_matrix_c(c: &DMatrix<f64>, beta: f64) -> Result<Self> {
        if !c.is_square() || c.nrows() == 0 {
            return Err(Error::InvalidProblem("C must be a nonempty square matrix".into()));
        }
        let n = c.nrows();
        let a = (c * c.transpose()) * (beta / n as f64);
        let skew = c - c.transpose();
        Ok(QuarticMap { a, skew })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn skew(&self) -> &DMatrix<f64> {
        &self.skew
    }
}

impl SmoothMap for QuarticMap {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let ax = &self.a * x;
        let quad = x.dot(&ax);
        ax * (4.0 * quad) + &self.skew * x
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let ax = &self.a * x;
        let quad = x.dot(&ax);
        let mut jac = &self.a * (4.0 * quad) + &self.skew;
        jac.ger(8.0, &ax, &ax, 1.0);
        jac
    }
}

/// Market map of an oligopoly, optionally with the first player's production
/// cost replaced by the concave `c₁(x₁) = -x₁²/50 + 15x₁`.
///
/// `f_i` is the derivative of player `i`'s loss with respect to its own
/// production, so the cost derivative `c₁'(x₁) = -x₁/25 + 15` enters `f_1`
/// with a plus sign.
pub struct OligopolyMap {
    base: Box<dyn SmoothMap>,
    concave_player1: bool,
}

impl OligopolyMap {
    pub fn new(base: Box<dyn SmoothMap>, concave_player1: bool) -> Self {
        OligopolyMap {
            base,
            concave_player1,
        }
    }
}

impl SmoothMap for OligopolyMap {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = self.base.value(x);
        if self.concave_player1 {
            v[0] += -x[0] / 25.0 + 15.0;
        }
        v
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.base.jacobian(x);
        if self.concave_player1 {
            j[(0, 0)] -= 1.0 / 25.0;
        }
        j
    }
}

/// Smooth map from a pair of closures.
pub struct FnMap<F, J> {
    n: usize,
    value: F,
    jacobian: J,
}

impl<F, J> FnMap<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    pub fn new(n: usize, value: F, jacobian: J) -> Self {
        FnMap { n, value, jacobian }
    }
}

impl<F, J> SmoothMap for FnMap<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.value)(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_at_origin() {
        let c = DMatrix::from_row_slice(3, 3, &[0.1, -0.5, 0.3, 0.9, 0.2, -0.7, 0.4, 0.6, -0.2]);
        let f = QuarticMap::from_matrix_c(&c, 1.0).unwrap();
        let zero = DVector::zeros(3);
        assert_eq!(f.value(&zero), DVector::zeros(3));
        assert_eq!(f.jacobian(&zero), &c - c.transpose());
    }

    #[test]
    fn concave_modifier_touches_first_component_only() {
        let base = AffineMap::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let f = OligopolyMap::new(Box::new(base), true);
        let x = DVector::from_vec(vec![50.0, 3.0]);
        assert_eq!(f.value(&x).as_slice(), &[50.0 - 2.0 + 15.0, 3.0]);
        let j = f.jacobian(&x);
        assert_eq!(j[(0, 0)], 1.0 - 0.04);
        assert_eq!(j[(1, 1)], 1.0);
    }

    #[test]
    fn affine_rejects_bad_shapes() {
        assert!(AffineMap::new(DMatrix::zeros(2, 3), DVector::zeros(2)).is_err());
        assert!(AffineMap::new(DMatrix::zeros(2, 2), DVector::zeros(3)).is_err());
    }
}
