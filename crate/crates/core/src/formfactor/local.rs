use super::diagonal::{bordered, hab, norm_squared};
use super::offdiagonal::{offdiag_factor, omega};
use super::tau::{lambda_eigen, lambda_root_gradient, lambda_terms};
use super::{check_s, require_same_sector, require_standard, FormFactorResult};
use crate::bethe::BetheState;
use crate::error::{Error, Result};
use crate::kernel::C64;
use crate::linalg::{determinant, hadamard_bound};

/// Matrix element of the one-site projector `E^{ss}_m` between on-shell
/// states of a fundamental chain, reconstructed from monodromy entries at
/// the inhomogeneities:
/// `∏_{k<m} Λ_C(ξ_k)/Λ_B(ξ_k) · λ₂(ξ_m) F^(s)(ξ_m) / Λ_B(ξ_m)`.
///
/// Normalized like the form factors: for `C = B` the sum over `s` is the norm.
pub fn ff_local(
    s: usize,
    m: usize,
    state_c: &BetheState,
    state_b: &BetheState,
) -> Result<FormFactorResult> {
    check_s(s)?;
    require_standard(state_c, "local form factor")?;
    require_standard(state_b, "local form factor")?;
    require_same_sector(state_c, state_b)?;
    let model = state_b.model();
    let chain = model
        .chain()
        .ok_or_else(|| Error::Unsupported("local operators need an explicit chain".into()))?;
    if !chain.is_fundamental() {
        return Err(Error::Unsupported(
            "local operators need an all-fundamental chain".into(),
        ));
    }
    if m == 0 || m > chain.len() {
        return Err(Error::SiteOutOfRange {
            site: m,
            len: chain.len(),
        });
    }
    let xi = chain.xi();
    let lam = |st: &BetheState, k: usize| lambda_eigen(model, xi[k], st.u(), st.v());
    let mut pref = C64::new(1.0, 0.0);
    for k in 0..m {
        let lb = lam(state_b, k)?;
        if lb.norm() == 0.0 {
            return Err(Error::Precondition(format!(
                "transfer-matrix eigenvalue vanishes at site {}",
                k + 1
            )));
        }
        pref /= lb;
        if k + 1 < m {
            pref *= lam(state_c, k)?;
        }
    }
    let z = xi[m - 1];
    let same = state_c.same_roots(state_b, 1e-12);
    let (value, cond, scale, p) = if same {
        let th = state_b.theta()?;
        let grad = lambda_root_gradient(model, z, state_b.u(), state_b.v())?;
        let corner = lambda_terms(model, z, state_b.u(), state_b.v())?[s - 1];
        let mat = bordered(&th, &grad, s, state_b.a(), corner);
        let h = hab(state_b.u(), state_b.v(), state_b.coupling())?;
        let d = determinant(&mat);
        (
            h * d.value,
            d.pivot_ratio,
            h.norm() * hadamard_bound(&mat),
            None,
        )
    } else {
        let p = omega(state_c, state_b)?.p;
        let dl = lam(state_c, m - 1)? - lam(state_b, m - 1)?;
        let f = offdiag_factor(s, state_c, state_b, p)?;
        (dl * f.value, f.cond, dl.norm() * f.scale, Some(p))
    };
    Ok(FormFactorResult {
        value: pref * value,
        s,
        z,
        a: state_b.a(),
        b: state_b.b(),
        cond,
        scale: pref.norm() * scale,
        p,
        left: state_c.label.clone(),
        right: state_b.label.clone(),
    })
}

/// `(Σ_s ⟨B|E^{ss}_m|B⟩, ‖B‖²)`; the two agree since the projectors sum to one.
pub fn projector_completeness(m: usize, state: &BetheState) -> Result<(C64, C64)> {
    let mut sum = C64::new(0.0, 0.0);
    for s in 1..=3 {
        sum += ff_local(s, m, state, state)?.value;
    }
    Ok((sum, norm_squared(state)?.value))
}
