use super::tau::tau;
use super::{
    check_s, require_disjoint, require_same_sector, require_standard, DetValue, FormFactorResult,
};
use crate::bethe::BetheState;
use crate::error::{Error, Result};
use crate::kernel::{
    delta_prod, g, prod_g_inv, prod_h, prod_kernel, without, Coupling, DeltaKind, Kernel, C64,
};
use crate::linalg::{determinant, hadamard_bound, CMatrix};
use crate::model::{ModelSpec, Ratio, Twist};

/// Components of the null vector and the row it selects.
#[derive(Debug, Clone, PartialEq)]
pub struct Omega {
    pub values: Vec<C64>,
    /// `argmax |Ω_k|`, 0-based.
    pub p: usize,
}

impl Omega {
    /// Rows usable for the modified row, largest `|Ω_k|` first.
    pub fn admissible_rows(&self, eps: f64) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.values[k].norm() > eps)
            .collect();
        rows.sort_by(|&i, &j| self.values[j].norm().total_cmp(&self.values[i].norm()));
        rows
    }
}

/// `Ω_k = ∏_l (u^C_k - u^B_l) / ∏_{l≠k} (u^C_k - u^C_l)` and
/// `Ω_{a+k} = ∏_m (v^B_k - v^C_m) / ∏_{m≠k} (v^B_k - v^B_m)`.
pub fn omega(state_c: &BetheState, state_b: &BetheState) -> Result<Omega> {
    require_same_sector(state_c, state_b)?;
    let (uc, ub, vc, vb) = (state_c.u(), state_b.u(), state_c.v(), state_b.v());
    let mut values = Vec::with_capacity(uc.len() + vc.len());
    for k in 0..uc.len() {
        let num: C64 = ub.iter().map(|&x| uc[k] - x).product();
        let den: C64 = without(uc, k).iter().map(|&x| uc[k] - x).product();
        values.push(num / den);
    }
    for k in 0..vb.len() {
        let num: C64 = vc.iter().map(|&x| vb[k] - x).product();
        let den: C64 = without(vb, k).iter().map(|&x| vb[k] - x).product();
        values.push(num / den);
    }
    let (p, max) = values
        .iter()
        .enumerate()
        .map(|(k, x)| (k, x.norm()))
        .fold((0, 0.0), |acc, (k, n)| if n > acc.1 { (k, n) } else { acc });
    if max < state_c.coupling().dist_eps() {
        return Err(Error::AllZero);
    }
    Ok(Omega { values, p })
}

/// `c g⁻¹(w,ū) g⁻¹(v̄,w) ∂τ_κ(w|ū,v̄)/∂u_j`, with the poles at `w ∈ v̄`
/// cancelled analytically.
pub(crate) fn n_hat_u(
    model: &ModelSpec,
    j: usize,
    w: C64,
    u: &[C64],
    v: &[C64],
    k1: C64,
    k2: C64,
) -> Result<C64> {
    n_hat_u_terms(model, j, w, u, v, k1, k2).map(|(x, y)| x + y)
}

/// The two terms of [`n_hat_u`].
pub(crate) fn n_hat_u_terms(
    model: &ModelSpec,
    j: usize,
    w: C64,
    u: &[C64],
    v: &[C64],
    k1: C64,
    k2: C64,
) -> Result<(C64, C64)> {
    let c = model.coupling();
    let rest = without(u, j);
    let sign = if rest.len() % 2 == 0 { 1.0 } else { -1.0 };
    let first = if k1.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        k1 * sign
            * model.eval_r(Ratio::R1, w)?
            * prod_g_inv(v, &[w], c)
            * prod_h(&rest, &[w], c)
            * g(u[j], w, c)?
    };
    let second = k2 * prod_h(v, &[w], c) * prod_h(&[w], &rest, c) * g(w, u[j], c)?;
    Ok((first, second))
}

/// `-c g⁻¹(v̄,w) g⁻¹(w,ū) ∂τ(w|ū,v̄)/∂v_j`, regularized likewise.
pub(crate) fn n_hat_v(model: &ModelSpec, j: usize, w: C64, u: &[C64], v: &[C64]) -> Result<C64> {
    n_hat_v_terms(model, j, w, u, v).map(|(x, y)| x + y)
}

/// The two terms of [`n_hat_v`].
pub(crate) fn n_hat_v_terms(
    model: &ModelSpec,
    j: usize,
    w: C64,
    u: &[C64],
    v: &[C64],
) -> Result<(C64, C64)> {
    let c = model.coupling();
    let rest = without(v, j);
    let sign = if rest.len() % 2 == 0 { 1.0 } else { -1.0 };
    let first = prod_h(&[w], u, c) * prod_h(&rest, &[w], c) * g(v[j], w, c)?;
    let second = sign
        * model.eval_r(Ratio::R3, w)?
        * prod_g_inv(&[w], u, c)
        * prod_h(&[w], &rest, c)
        * g(w, v[j], c)?;
    Ok((first, second))
}

/// Merged arguments `w = (ū^B, v̄^C)`.
pub(crate) fn merged_args(state_c: &BetheState, state_b: &BetheState) -> Vec<C64> {
    state_b.u().iter().chain(state_c.v()).copied().collect()
}

/// `Y^(s)_k` for the modified row.
pub fn y_vector(s: usize, state_c: &BetheState, state_b: &BetheState) -> Result<Vec<C64>> {
    check_s(s)?;
    let c = state_c.coupling();
    let cv = c.value();
    let d = |k: usize| if s == k { 1.0 } else { 0.0 };
    let mut y = Vec::with_capacity(state_b.a() + state_c.b());
    for &ub in state_b.u() {
        let ratio = prod_kernel(Kernel::F, state_b.v(), &[ub], c)?
            / prod_kernel(Kernel::F, state_c.v(), &[ub], c)?;
        y.push(cv * (d(1) - d(2)) + (d(1) - d(3)) * ub * (1.0 - ratio));
    }
    for &vc in state_c.v() {
        let ratio = prod_kernel(Kernel::F, &[vc], state_c.u(), c)?
            / prod_kernel(Kernel::F, &[vc], state_b.u(), c)?;
        y.push(cv * (d(3) - d(2)) + (d(1) - d(3)) * (vc + cv) * (1.0 - ratio));
    }
    Ok(y)
}

/// `h(v̄^C, w_k) h(w_k, ū^B)`.
pub(crate) fn row_p_weight(w: C64, state_c: &BetheState, state_b: &BetheState, c: Coupling) -> C64 {
    prod_h(state_c.v(), &[w], c) * prod_h(&[w], state_b.u(), c)
}

/// `N^(s)` with row `p` (0-based) replaced by the `Y^(s)` row.
pub fn n_matrix_offdiag(
    s: usize,
    state_c: &BetheState,
    state_b: &BetheState,
    p: usize,
) -> Result<CMatrix> {
    check_s(s)?;
    require_disjoint(state_c, state_b)?;
    let model = state_c.model();
    let c = model.coupling();
    let (a, n) = (state_c.a(), state_c.a() + state_c.b());
    if p >= n {
        return Err(Error::Construction(format!("row {p} outside 0..{n}")));
    }
    let w = merged_args(state_c, state_b);
    let y = y_vector(s, state_c, state_b)?;
    let one = C64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let at = |e: Error| match e {
                Error::Pole { factor, x, y } => Error::Pole {
                    factor: format!("N[{j},{k}]: {factor}"),
                    x,
                    y,
                },
                other => other,
            };
            m[(j, k)] = if j == p {
                row_p_weight(w[k], state_c, state_b, c) * y[k]
            } else if j < a {
                n_hat_u(model, j, w[k], state_c.u(), state_c.v(), one, one).map_err(at)?
            } else {
                n_hat_v(model, j - a, w[k], state_b.u(), state_b.v()).map_err(at)?
            };
        }
    }
    Ok(m)
}

/// `Ω_p⁻¹ t(v̄^C,ū^B) Δ'_a(ū^C) Δ_a(ū^B) Δ'_b(v̄^C) Δ_b(v̄^B) det N^(s)`:
/// the form factor without its `τ_C(z) - τ_B(z)` factor.
pub fn offdiag_factor(
    s: usize,
    state_c: &BetheState,
    state_b: &BetheState,
    p: usize,
) -> Result<DetValue> {
    let om = omega(state_c, state_b)?;
    let c = state_c.coupling();
    if om.values[p].norm() < c.dist_eps() {
        return Err(Error::Construction(format!(
            "Ω_{p} vanishes; row {p} cannot be modified"
        )));
    }
    let m = n_matrix_offdiag(s, state_c, state_b, p)?;
    let pref = prod_kernel(Kernel::T, state_c.v(), state_b.u(), c)?
        * delta_prod(DeltaKind::Primed, state_c.u(), c)?
        * delta_prod(DeltaKind::Plain, state_b.u(), c)?
        * delta_prod(DeltaKind::Primed, state_c.v(), c)?
        * delta_prod(DeltaKind::Plain, state_b.v(), c)?
        / om.values[p];
    Ok(DetValue::new(pref, determinant(&m), hadamard_bound(&m)))
}

/// Form factor of `T_ss(z)` between different on-shell states, with the
/// modified row chosen as `argmax |Ω|`.
pub fn ff_offdiagonal(
    s: usize,
    z: C64,
    state_c: &BetheState,
    state_b: &BetheState,
) -> Result<FormFactorResult> {
    let p = omega(state_c, state_b)?.p;
    ff_offdiagonal_at(s, z, state_c, state_b, p)
}

/// As [`ff_offdiagonal`] with an explicit modified row.
pub fn ff_offdiagonal_at(
    s: usize,
    z: C64,
    state_c: &BetheState,
    state_b: &BetheState,
    p: usize,
) -> Result<FormFactorResult> {
    require_standard(state_c, "off-diagonal form factor")?;
    require_standard(state_b, "off-diagonal form factor")?;
    let id = Twist::identity();
    let dtau = tau(state_c.model(), z, state_c.u(), state_c.v(), &id)?
        - tau(state_b.model(), z, state_b.u(), state_b.v(), &id)?;
    let fac = offdiag_factor(s, state_c, state_b, p)?;
    Ok(FormFactorResult {
        value: dtau * fac.value,
        s,
        z,
        a: state_c.a(),
        b: state_c.b(),
        cond: fac.cond,
        scale: dtau.norm() * fac.scale,
        p: Some(p),
        left: state_c.label.clone(),
        right: state_b.label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formfactor::tau::tau_root_gradient;
    use crate::model::{SiteRep, XxxChain};
    use crate::numeric::rel_err;
    use std::sync::Arc;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mixed() -> Arc<ModelSpec> {
        Arc::new(
            XxxChain::with_reps(
                vec![cx(0.05, 0.1), cx(0.4, -0.2), cx(-0.3, 0.05), cx(0.7, 0.3)],
                vec![
                    SiteRep::Fundamental,
                    SiteRep::Fundamental,
                    SiteRep::Conjugate,
                    SiteRep::Conjugate,
                ],
                Coupling::new(cx(1.0, 0.2)).unwrap(),
            )
            .unwrap()
            .into(),
        )
    }

    fn off_shell(m: &Arc<ModelSpec>, u: Vec<C64>, v: Vec<C64>) -> BetheState {
        BetheState::new_unchecked(m.clone(), u, v, Twist::identity()).unwrap()
    }

    #[test]
    fn omega_small_cases() {
        let m = mixed();
        let c = off_shell(&m, vec![cx(0.3, 0.2)], vec![]);
        let b = off_shell(&m, vec![cx(-0.1, 0.5)], vec![]);
        let om = omega(&c, &b).unwrap();
        assert_eq!(om.values, vec![cx(0.4, -0.3)]);
        assert_eq!(omega(&c, &c), Err(Error::AllZero));
        let uc = [cx(0.3, 0.2), cx(0.9, -0.1)];
        let ub = [cx(-0.1, 0.5), cx(0.2, 0.2)];
        let c = off_shell(&m, uc.to_vec(), vec![]);
        let b = off_shell(&m, ub.to_vec(), vec![]);
        let om = omega(&c, &b).unwrap();
        let e0 = (uc[0] - ub[0]) * (uc[0] - ub[1]) / (uc[0] - uc[1]);
        let e1 = (uc[1] - ub[0]) * (uc[1] - ub[1]) / (uc[1] - uc[0]);
        assert!(rel_err(om.values[0], e0) < 1e-15 && rel_err(om.values[1], e1) < 1e-15);
        assert_eq!(om.p, if e0.norm() > e1.norm() { 0 } else { 1 });
    }

    #[test]
    fn y_sums_to_zero() {
        let m = mixed();
        let c = off_shell(&m, vec![cx(0.3, 0.2), cx(0.9, -0.1)], vec![cx(0.1, 0.6)]);
        let b = off_shell(&m, vec![cx(-0.1, 0.5), cx(0.2, 0.2)], vec![cx(-0.6, 0.3)]);
        let ys: Vec<Vec<C64>> = (1..=3).map(|s| y_vector(s, &c, &b).unwrap()).collect();
        for k in 0..3 {
            assert!((ys[0][k] + ys[1][k] + ys[2][k]).norm() < 1e-14);
            assert_eq!(ys[1][k], -c.coupling().value());
        }
    }

    #[test]
    fn n_hat_matches_finite_differences() {
        let m = mixed();
        let cpl = m.coupling();
        let u = vec![cx(0.3, 0.2), cx(0.9, -0.1)];
        let v = vec![cx(0.1, 0.6), cx(-0.5, -0.4)];
        let w = cx(-0.2, 0.35);
        let k1 = cx(1.05, 0.02);
        let k2 = cx(0.97, -0.01);
        let tw = Twist::new(k1, k2, cx(1.0, 0.0)).unwrap();
        let grad = tau_root_gradient(&m, w, &u, &v, &tw).unwrap();
        for j in 0..2 {
            let expect =
                cpl.value() * prod_g_inv(&[w], &u, cpl) * prod_g_inv(&v, &[w], cpl) * grad[j];
            assert!(rel_err(n_hat_u(&m, j, w, &u, &v, k1, k2).unwrap(), expect) < 1e-12);
        }
        let grad = tau_root_gradient(&m, w, &u, &v, &Twist::identity()).unwrap();
        for j in 0..2 {
            let expect =
                -cpl.value() * prod_g_inv(&v, &[w], cpl) * prod_g_inv(&[w], &u, cpl) * grad[2 + j];
            assert!(rel_err(n_hat_v(&m, j, w, &u, &v).unwrap(), expect) < 1e-12);
        }
        // finite at w ∈ v̄
        assert!(n_hat_u(&m, 0, v[1], &u, &v, k1, k2).unwrap().is_finite());
    }
}
