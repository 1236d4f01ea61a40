//! Transfer-matrix eigenvalues and their derivatives in the Bethe roots.
//!
//! Both the normalized eigenvalue
//! `τ_κ(z) = κ₁ r₁(z) f(ū,z) + κ₂ f(z,ū) f(v̄,z) + κ₃ r₃(z) f(z,v̄)`
//! and the un-normalized `Λ(z) = λ₁ f(ū,z) + λ₂ f(z,ū) f(v̄,z) + λ₃ f(z,v̄)`
//! are weighted sums of the same three products; only the weights differ.

use crate::error::{Error, Result};
use crate::kernel::{f, prod_kernel, Coupling, Kernel, C64};
use crate::linalg::CVector;
use crate::model::{ModelSpec, Ratio, Twist};

/// `[f(ū,z), f(z,ū) f(v̄,z), f(z,v̄)]`.
pub fn eigen_terms(z: C64, u: &[C64], v: &[C64], c: Coupling) -> Result<[C64; 3]> {
    let zs = [z];
    Ok([
        prod_kernel(Kernel::F, u, &zs, c)?,
        prod_kernel(Kernel::F, &zs, u, c)? * prod_kernel(Kernel::F, v, &zs, c)?,
        prod_kernel(Kernel::F, &zs, v, c)?,
    ])
}

/// Gradient of `Σ_i w_i · term_i` in `(ū, v̄)`, by the product rule.
pub fn weighted_root_gradient(
    w: [C64; 3],
    z: C64,
    u: &[C64],
    v: &[C64],
    c: Coupling,
) -> Result<CVector> {
    let cv = c.value();
    let a = u.len();
    let zs = [z];
    let near = |x: C64, what: &str| -> Result<C64> {
        let d = x - z;
        if d.norm() < c.pole_eps() {
            return Err(Error::pole(format!("∂τ: {what}"), x, z));
        }
        Ok(d)
    };
    let mut grad = CVector::zeros(a + v.len());
    let fvz = prod_kernel(Kernel::F, v, &zs, c)?;
    for k in 0..a {
        let d = near(u[k], "u_k - z")?;
        let mut p1 = C64::new(1.0, 0.0);
        let mut p2 = C64::new(1.0, 0.0);
        for (l, &ul) in u.iter().enumerate() {
            if l != k {
                p1 *= f(ul, z, c)?;
                p2 *= f(z, ul, c)?;
            }
        }
        let dd = cv / (d * d);
        grad[k] = -w[0] * dd * p1 + w[1] * dd * p2 * fvz;
    }
    let fzu = prod_kernel(Kernel::F, &zs, u, c)?;
    for k in 0..v.len() {
        let d = near(v[k], "v_k - z")?;
        let mut p2 = C64::new(1.0, 0.0);
        let mut p3 = C64::new(1.0, 0.0);
        for (m, &vm) in v.iter().enumerate() {
            if m != k {
                p2 *= f(vm, z, c)?;
                p3 *= f(z, vm, c)?;
            }
        }
        let dd = cv / (d * d);
        grad[a + k] = -w[1] * fzu * dd * p2 + w[2] * dd * p3;
    }
    Ok(grad)
}

fn tau_weights(model: &ModelSpec, z: C64, twist: &Twist) -> Result<[C64; 3]> {
    Ok([
        twist.kappa(1) * model.eval_r(Ratio::R1, z)?,
        twist.kappa(2),
        twist.kappa(3) * model.eval_r(Ratio::R3, z)?,
    ])
}

fn lambda_weights(model: &ModelSpec, z: C64) -> Result<[C64; 3]> {
    Ok([
        model.eval_lambda(1, z)?,
        model.eval_lambda(2, z)?,
        model.eval_lambda(3, z)?,
    ])
}

/// `τ_κ(z|ū, v̄)`.
pub fn tau(model: &ModelSpec, z: C64, u: &[C64], v: &[C64], twist: &Twist) -> Result<C64> {
    let w = tau_weights(model, z, twist)?;
    let t = eigen_terms(z, u, v, model.coupling())?;
    Ok(w[0] * t[0] + w[1] * t[1] + w[2] * t[2])
}

/// `∂τ_κ/∂κ_s` for `s = 1, 2, 3`.
pub fn tau_kappa_partials(model: &ModelSpec, z: C64, u: &[C64], v: &[C64]) -> Result<[C64; 3]> {
    let t = eigen_terms(z, u, v, model.coupling())?;
    Ok([
        model.eval_r(Ratio::R1, z)? * t[0],
        t[1],
        model.eval_r(Ratio::R3, z)? * t[2],
    ])
}

/// `∂τ_κ(z)/∂u_k` then `∂τ_κ(z)/∂v_k`.
pub fn tau_root_gradient(
    model: &ModelSpec,
    z: C64,
    u: &[C64],
    v: &[C64],
    twist: &Twist,
) -> Result<CVector> {
    let w = tau_weights(model, z, twist)?;
    weighted_root_gradient(w, z, u, v, model.coupling())
}

/// Un-normalized eigenvalue `Λ(z)`, finite at the inhomogeneities.
pub fn lambda_eigen(model: &ModelSpec, z: C64, u: &[C64], v: &[C64]) -> Result<C64> {
    let t = lambda_terms(model, z, u, v)?;
    Ok(t[0] + t[1] + t[2])
}

/// `[λ₁ f(ū,z), λ₂ f(z,ū) f(v̄,z), λ₃ f(z,v̄)]`.
pub fn lambda_terms(model: &ModelSpec, z: C64, u: &[C64], v: &[C64]) -> Result<[C64; 3]> {
    let w = lambda_weights(model, z)?;
    let t = eigen_terms(z, u, v, model.coupling())?;
    Ok([w[0] * t[0], w[1] * t[1], w[2] * t[2]])
}

pub fn lambda_root_gradient(model: &ModelSpec, z: C64, u: &[C64], v: &[C64]) -> Result<CVector> {
    let w = lambda_weights(model, z)?;
    weighted_root_gradient(w, z, u, v, model.coupling())
}
