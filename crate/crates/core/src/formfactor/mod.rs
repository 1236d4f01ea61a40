//! Determinant representations of form factors of `T_ss(z)`.

mod diagonal;
mod local;
mod offdiagonal;
pub mod tau;
mod twisted;

pub use diagonal::{
    ff_diagonal, ff_diagonal_cofactor, hab, norm_squared, tau_kappa_total_derivative, theta_ext,
};
pub use local::{ff_local, projector_completeness};
pub use offdiagonal::{
    ff_offdiagonal, ff_offdiagonal_at, n_matrix_offdiag, offdiag_factor, omega, y_vector, Omega,
};
pub use tau::{lambda_eigen, tau, tau_kappa_partials, tau_root_gradient};
pub use twisted::{
    modified_row_p, n_matrix_twisted, n_matrix_twisted_magnitude, scalar_product_kappa_derivative,
    scalar_product_twisted, ScalarProduct,
};

use crate::bethe::BetheState;
use crate::error::{Error, Result};
use crate::kernel::C64;
use crate::linalg::Determinant;

/// A determinant with its prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetValue {
    pub value: C64,
    /// Pivot ratio of the determinant.
    pub cond: f64,
    /// Magnitude bound: `|prefactor|` times the Hadamard bound of the matrix.
    pub scale: f64,
}

impl DetValue {
    pub(crate) fn new(prefactor: C64, det: Determinant, hadamard: f64) -> Self {
        DetValue {
            value: prefactor * det.value,
            cond: det.pivot_ratio,
            scale: prefactor.norm() * hadamard,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorResult {
    pub value: C64,
    pub s: usize,
    pub z: C64,
    pub a: usize,
    pub b: usize,
    pub cond: f64,
    pub scale: f64,
    /// Modified row, off-diagonal only (0-based).
    pub p: Option<usize>,
    pub left: Option<String>,
    pub right: Option<String>,
}

fn check_s(s: usize) -> Result<()> {
    if (1..=3).contains(&s) {
        Ok(())
    } else {
        Err(Error::Construction(format!(
            "operator index s = {s} outside 1..=3"
        )))
    }
}

fn require_standard(state: &BetheState, what: &str) -> Result<()> {
    if !state.on_shell() {
        return Err(Error::Precondition(format!(
            "{what}: state is not on-shell"
        )));
    }
    if !state.twist().is_identity() {
        return Err(Error::Precondition(format!(
            "{what}: state is not at the identity twist"
        )));
    }
    Ok(())
}

fn require_same_sector(c: &BetheState, b: &BetheState) -> Result<()> {
    if c.a() != b.a() || c.b() != b.b() {
        return Err(Error::SizeMismatch {
            what: "sector sizes of the two states",
            left: c.a() * 1000 + c.b(),
            right: b.a() * 1000 + b.b(),
        });
    }
    if c.model() != b.model() {
        return Err(Error::Precondition(
            "states belong to different models".into(),
        ));
    }
    Ok(())
}

/// Relative distance below which roots of two states count as shared.
pub const SHARED_ROOT_TOL: f64 = 1e-8;

/// True when no u-root and no v-root is common to both states.
pub fn roots_disjoint(c: &BetheState, b: &BetheState) -> bool {
    let close = |x: &C64, y: &C64| (x - y).norm() < SHARED_ROOT_TOL * x.norm().max(1.0);
    !c.u().iter().any(|x| b.u().iter().any(|y| close(x, y)))
        && !c.v().iter().any(|x| b.v().iter().any(|y| close(x, y)))
}

fn require_disjoint(c: &BetheState, b: &BetheState) -> Result<()> {
    require_same_sector(c, b)?;
    if c.same_roots(b, SHARED_ROOT_TOL) {
        return Err(Error::AllZero);
    }
    if !roots_disjoint(c, b) {
        return Err(Error::Precondition(
            "the states share a Bethe root; the off-diagonal determinant is singular there".into(),
        ));
    }
    Ok(())
}
