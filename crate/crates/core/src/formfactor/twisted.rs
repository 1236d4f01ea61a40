use super::offdiagonal::{merged_args, n_hat_u_terms, n_hat_v_terms, omega};
use super::{check_s, require_disjoint, require_standard};
use crate::bethe::{continue_in_twist, BetheState};
use crate::error::{Error, Result};
use crate::kernel::{delta_prod, prod_h, prod_kernel, DeltaKind, Kernel, C64};
use crate::linalg::{determinant, hadamard_bound_real, CMatrix, CVector, RMatrix};
use crate::model::Twist;
use crate::numeric::cpow;

/// Scalar product of a twisted and a standard on-shell vector, exact to
/// first order in `κ₃/κ₁ - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProduct {
    pub value: C64,
    pub cond: f64,
    /// `|prefactor|` times the Hadamard bound of [`n_matrix_twisted_magnitude`].
    pub scale: f64,
    /// `κ₃/κ₁`, raised to powers on its principal branch.
    pub twist_ratio: C64,
    pub log_twist_ratio: C64,
}

/// `N(κ)`: the twisted `τ_κ` enters the first `a` rows, the standard `τ`
/// the last `b`; the off-diagonal blocks carry `(κ₃/κ₁)^{±w/c}`.
pub fn n_matrix_twisted(
    state_c: &BetheState,
    state_b: &BetheState,
    twist: &Twist,
) -> Result<CMatrix> {
    twisted_entries(state_c, state_b, twist).map(|(m, _)| m)
}

/// Entrywise `|first term| + |second term|` of [`n_matrix_twisted`]: the
/// size of each entry before the cancellation that makes `N(1)` singular.
pub fn n_matrix_twisted_magnitude(
    state_c: &BetheState,
    state_b: &BetheState,
    twist: &Twist,
) -> Result<RMatrix> {
    twisted_entries(state_c, state_b, twist).map(|(_, m)| m)
}

fn twisted_entries(
    state_c: &BetheState,
    state_b: &BetheState,
    twist: &Twist,
) -> Result<(CMatrix, RMatrix)> {
    require_disjoint(state_c, state_b)?;
    let model = state_c.model();
    let cv = model.coupling().value();
    let (a, n) = (state_c.a(), state_c.a() + state_c.b());
    let w = merged_args(state_c, state_b);
    let zeta = twist.kappa(3) / twist.kappa(1);
    let (k1, k2) = (twist.kappa(1), twist.kappa(2));
    let one = C64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    let mut mag = RMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let ((x, y), factor) = match (j < a, k < a) {
                (true, true) => (
                    n_hat_u_terms(model, j, w[k], state_c.u(), state_c.v(), k1, k2)?,
                    one,
                ),
                (true, false) => (
                    n_hat_u_terms(model, j, w[k], state_c.u(), state_c.v(), k1, k2)?,
                    cpow(zeta, w[k] / cv),
                ),
                (false, true) => (
                    n_hat_v_terms(model, j - a, w[k], state_b.u(), state_b.v())?,
                    cpow(zeta, -w[k] / cv),
                ),
                (false, false) => (
                    n_hat_v_terms(model, j - a, w[k], state_b.u(), state_b.v())?,
                    one,
                ),
            };
            m[(j, k)] = (x + y) * factor;
            mag[(j, k)] = (x.norm() + y.norm()) * factor.norm();
        }
    }
    Ok((m, mag))
}

/// `t(v̄^C,ū^B) Δ'_a(ū^C) Δ'_b(v̄^B) Δ_a(ū^B) Δ_b(v̄^C) det N(κ)`.
///
/// `state_c` solves the equations twisted by `twist`; `state_b` the
/// standard ones.
pub fn scalar_product_twisted(
    state_c: &BetheState,
    state_b: &BetheState,
    twist: &Twist,
) -> Result<ScalarProduct> {
    require_standard(state_b, "scalar product")?;
    let c = state_c.coupling();
    let (m, mag) = twisted_entries(state_c, state_b, twist)?;
    let pref = prod_kernel(Kernel::T, state_c.v(), state_b.u(), c)?
        * delta_prod(DeltaKind::Primed, state_c.u(), c)?
        * delta_prod(DeltaKind::Primed, state_b.v(), c)?
        * delta_prod(DeltaKind::Plain, state_b.u(), c)?
        * delta_prod(DeltaKind::Plain, state_c.v(), c)?;
    let det = determinant(&m);
    let ratio = twist.kappa(3) / twist.kappa(1);
    Ok(ScalarProduct {
        value: pref * det.value,
        cond: det.pivot_ratio,
        scale: pref.norm() * hadamard_bound_real(&mag),
        twist_ratio: ratio,
        log_twist_ratio: ratio.ln(),
    })
}

/// Row `p` of `N(κ)` after adding `Ω_j/Ω_p` times every other row; it
/// vanishes identically at `κ = 1`.
pub fn modified_row_p(
    state_c: &BetheState,
    state_b: &BetheState,
    twist: &Twist,
    p: usize,
) -> Result<CVector> {
    let om = omega(state_c, state_b)?;
    let c = state_c.coupling();
    let cv = c.value();
    if p >= om.values.len() || om.values[p].norm() < c.dist_eps() {
        return Err(Error::Construction(format!("row {p} has vanishing Ω")));
    }
    let pre = cv / om.values[p];
    let (k1, k2, k3) = (twist.kappa(1), twist.kappa(2), twist.kappa(3));
    let (uc, vc, ub, vb) = (state_c.u(), state_c.v(), state_b.u(), state_b.v());
    let a = ub.len();
    let mut row = CVector::zeros(a + vc.len());
    for (k, &x) in ub.iter().enumerate() {
        let ratio = prod_kernel(Kernel::F, vb, &[x], c)? / prod_kernel(Kernel::F, vc, &[x], c)?;
        let pw = cpow(k1 / k3, x / cv);
        row[k] =
            pre * prod_h(vc, &[x], c) * prod_h(&[x], ub, c) * (ratio * (1.0 - pw) + pw - k2 / k1);
    }
    for (k, &x) in vc.iter().enumerate() {
        let ratio = prod_kernel(Kernel::F, &[x], uc, c)? / prod_kernel(Kernel::F, &[x], ub, c)?;
        let pw = k2 / k1 * cpow(k3 / k1, x / cv);
        row[a + k] =
            pre * prod_h(vc, &[x], c) * prod_h(&[x], ub, c) * (ratio * (pw - k2 / k3) + 1.0 - pw);
    }
    Ok(row)
}

/// Central difference of the scalar product in `κ_s` at `κ = 1`, following
/// `state_c` to `κ ± eps·e_s` by continuation.
pub fn scalar_product_kappa_derivative(
    s: usize,
    state_c: &BetheState,
    state_b: &BetheState,
    eps: f64,
) -> Result<C64> {
    check_s(s)?;
    require_standard(state_c, "scalar product derivative")?;
    let id = Twist::identity();
    let plus = id.bumped(s, eps);
    let minus = id.bumped(s, -eps);
    let cp = continue_in_twist(state_c, plus, 1)?;
    let cm = continue_in_twist(state_c, minus, 1)?;
    let sp = scalar_product_twisted(&cp, state_b, &plus)?.value;
    let sm = scalar_product_twisted(&cm, state_b, &minus)?.value;
    Ok((sp - sm) / (2.0 * eps))
}
