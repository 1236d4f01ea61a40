//! Dense complex determinants and solves on top of `nalgebra`'s partially
//! pivoted LU.

use nalgebra::{DMatrix, DVector};

use crate::kernel::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

/// Pivot ratios above this flag a determinant as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

/// A determinant together with the largest/smallest pivot magnitude ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    pub value: C64,
    pub pivot_ratio: f64,
}

impl Determinant {
    pub fn ill_conditioned(&self) -> bool {
        !(self.pivot_ratio <= ILL_CONDITIONED)
    }
}

pub fn determinant(m: &CMatrix) -> Determinant {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return Determinant {
            value: C64::new(1.0, 0.0),
            pivot_ratio: 1.0,
        };
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let pivot_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Determinant {
        value: lu.determinant(),
        pivot_ratio,
    }
}

/// Solves `m x = rhs`; `None` when the LU factorization hits a zero pivot.
pub fn solve(m: &CMatrix, rhs: &CVector) -> Option<CVector> {
    if m.nrows() == 0 {
        return Some(CVector::zeros(0));
    }
    m.clone().lu().solve(rhs)
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(CMatrix::zeros(0, 0));
    }
    m.clone().lu().try_inverse()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry magnitude of a vector; 0 when empty.
pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Hadamard bound `∏_i ‖row_i‖₂`, an upper bound on `|det m|`.
pub fn hadamard_bound(m: &CMatrix) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

/// [`hadamard_bound`] for a matrix of magnitudes.
pub fn hadamard_bound_real(m: &RMatrix) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}
