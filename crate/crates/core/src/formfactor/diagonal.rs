use super::tau::{tau_kappa_partials, tau_root_gradient};
use super::{check_s, require_standard, DetValue, FormFactorResult};
use crate::bethe::{root_derivatives_dkappa, BetheState};
use crate::error::{Error, Result};
use crate::kernel::{prod_f_distinct_pairs, prod_kernel, Coupling, Kernel, C64};
use crate::linalg::{determinant, hadamard_bound, inverse, CMatrix, CVector};
use crate::model::Twist;

/// `(-1)^a c^{a+b} f(v̄,ū) ∏_{j≠k} f(u_j,u_k) ∏_{j≠k} f(v_j,v_k)`.
pub fn hab(u: &[C64], v: &[C64], c: Coupling) -> Result<C64> {
    let sign = if u.len() % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign
        * c.value().powi((u.len() + v.len()) as i32)
        * prod_kernel(Kernel::F, v, u, c)?
        * prod_f_distinct_pairs(u, c)?
        * prod_f_distinct_pairs(v, c)?)
}

/// `θ` bordered by `last_row`, the `s`-dependent column and `corner`.
pub(crate) fn bordered(
    theta: &CMatrix,
    last_row: &CVector,
    s: usize,
    a: usize,
    corner: C64,
) -> CMatrix {
    let n = theta.nrows();
    let one = C64::new(1.0, 0.0);
    let delta = |k: usize| if s == k { one } else { C64::new(0.0, 0.0) };
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(theta);
    for k in 0..n {
        m[(n, k)] = last_row[k];
        m[(k, n)] = if k < a {
            delta(1) - delta(2)
        } else {
            delta(3) - delta(2)
        };
    }
    m[(n, n)] = corner;
    m
}

/// `Θ^(s)`: `θ` extended by `∂τ(z)` in the roots, the `δ`-column and `∂τ_κ/∂κ_s`.
pub fn theta_ext(s: usize, z: C64, state: &BetheState) -> Result<CMatrix> {
    check_s(s)?;
    let th = state.theta()?;
    let grad = tau_root_gradient(state.model(), z, state.u(), state.v(), &Twist::identity())?;
    let corner = tau_kappa_partials(state.model(), z, state.u(), state.v())?[s - 1];
    Ok(bordered(&th, &grad, s, state.a(), corner))
}

/// `H_{a,b} det θ`.
pub fn norm_squared(state: &BetheState) -> Result<DetValue> {
    require_standard(state, "norm")?;
    let th = state.theta()?;
    let h = hab(state.u(), state.v(), state.coupling())?;
    Ok(DetValue::new(h, determinant(&th), hadamard_bound(&th)))
}

/// `H_{a,b} det Θ^(s)`, the expectation value of `T_ss(z)` times the norm.
pub fn ff_diagonal(s: usize, z: C64, state: &BetheState) -> Result<FormFactorResult> {
    require_standard(state, "diagonal form factor")?;
    let m = theta_ext(s, z, state)?;
    let h = hab(state.u(), state.v(), state.coupling())?;
    let d = DetValue::new(h, determinant(&m), hadamard_bound(&m));
    Ok(FormFactorResult {
        value: d.value,
        s,
        z,
        a: state.a(),
        b: state.b(),
        cond: d.cond,
        scale: d.scale,
        p: None,
        left: state.label.clone(),
        right: state.label.clone(),
    })
}

/// The same quantity by cofactor expansion of `det Θ^(s)` along the last
/// row and column: `H (Θ_nn det θ - Σ_jk Θ_jn Θ_nk θ̂_jk)`.
pub fn ff_diagonal_cofactor(s: usize, z: C64, state: &BetheState) -> Result<C64> {
    require_standard(state, "diagonal form factor")?;
    let m = theta_ext(s, z, state)?;
    let n = m.nrows() - 1;
    let th = m.view((0, 0), (n, n)).into_owned();
    let det = determinant(&th).value;
    let inv = inverse(&th).ok_or(Error::SingularJacobian)?;
    let mut acc = m[(n, n)] * det;
    for j in 0..n {
        for k in 0..n {
            // cofactor θ̂_jk = (θ⁻¹)_kj det θ
            acc -= m[(j, n)] * m[(n, k)] * inv[(k, j)] * det;
        }
    }
    Ok(hab(state.u(), state.v(), state.coupling())? * acc)
}

/// `dτ_κ/dκ_s` at `κ = 1`, including the motion of the roots.
pub fn tau_kappa_total_derivative(s: usize, z: C64, state: &BetheState) -> Result<C64> {
    check_s(s)?;
    require_standard(state, "total κ-derivative")?;
    let partial = tau_kappa_partials(state.model(), z, state.u(), state.v())?[s - 1];
    let grad = tau_root_gradient(state.model(), z, state.u(), state.v(), &Twist::identity())?;
    let d = &root_derivatives_dkappa(state)?[s - 1];
    Ok(partial + grad.dot(d))
}
