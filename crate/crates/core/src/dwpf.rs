//! Domain-wall partition function `K_n(x|y)` via Izergin's determinant.

use crate::error::{Error, Result};
use crate::kernel::{delta_prod, prod_h, prod_kernel, t, Coupling, DeltaKind, Kernel, C64};
use crate::linalg::{determinant, CMatrix, Determinant};
use crate::numeric::ResidueCheck;

/// `K_n(x|y) = Δ'_n(x) Δ_n(y) h(x, y) det_n t(x_j, y_k)`; `K_0 = 1`.
pub fn dwpf(xs: &[C64], ys: &[C64], c: Coupling) -> Result<C64> {
    dwpf_with_cond(xs, ys, c).map(|d| d.value)
}

/// As [`dwpf`], keeping the pivot ratio of the `t` matrix.
pub fn dwpf_with_cond(xs: &[C64], ys: &[C64], c: Coupling) -> Result<Determinant> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch {
            what: "DWPF argument sets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n == 0 {
        return Ok(Determinant {
            value: C64::new(1.0, 0.0),
            pivot_ratio: 1.0,
        });
    }
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = t(xs[j], ys[k], c)?;
        }
    }
    let det = determinant(&m);
    let pref = delta_prod(DeltaKind::Primed, xs, c)?
        * delta_prod(DeltaKind::Plain, ys, c)?
        * prod_h(xs, ys, c);
    Ok(Determinant {
        value: pref * det.value,
        pivot_ratio: det.pivot_ratio,
    })
}

/// Residue of `K_n` at `x_n → y_n`.
///
/// Samples `(x_n - y_n) K_n` at `x_n = y_n + δ` for each `δ` and compares the
/// extrapolation to `c f(y_n, ȳ_n) f(x̄_n, y_n) K_{n-1}(x̄_n|ȳ_n)`. The last
/// element of `xs` is ignored.
pub fn residue_check(
    xs: &[C64],
    ys: &[C64],
    c: Coupling,
    deltas: [f64; 2],
) -> Result<ResidueCheck> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::SizeMismatch {
            what: "DWPF residue sets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    let y_n = ys[n - 1];
    let expected = c.value()
        * prod_kernel(Kernel::F, &[y_n], &ys[..n - 1], c)?
        * prod_kernel(Kernel::F, &xs[..n - 1], &[y_n], c)?
        * dwpf(&xs[..n - 1], &ys[..n - 1], c)?;
    let mut x = xs.to_vec();
    let mut samples = Vec::with_capacity(2);
    for delta in deltas {
        x[n - 1] = y_n + delta;
        samples.push((delta, dwpf(&x, ys, c)? * delta));
    }
    Ok(ResidueCheck::from_samples(samples, expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::g;
    use proptest::prelude::*;

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn small_cases() {
        let c = Coupling::unit();
        assert_eq!(dwpf(&[], &[], c).unwrap(), C64::new(1.0, 0.0));
        let c2 = Coupling::new(C64::new(2.0, 0.0)).unwrap();
        let k1 = dwpf(&re(&[3.0]), &re(&[1.0]), c2).unwrap();
        assert!((k1 - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((k1 - g(C64::new(3.0, 0.0), C64::new(1.0, 0.0), c2).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn two_by_two_hand_expansion() {
        // x = (2,3), y = (0,1), c = 1:
        // Δ'(x) = g(3,2) = 1, Δ(y) = g(0,1) = -1, h(x,y) = 3·2·4·3 = 72,
        // det t = (1/6)(1/6) - (1/2)(1/12) = -1/72, so K_2 = 1.
        let c = Coupling::unit();
        let k = dwpf(&re(&[2.0, 3.0]), &re(&[0.0, 1.0]), c).unwrap();
        assert!((k - C64::new(1.0, 0.0)).norm() < 1e-14, "{k}");
    }

    #[test]
    fn size_mismatch_and_pole() {
        let c = Coupling::unit();
        assert!(matches!(
            dwpf(&re(&[1.0]), &re(&[]), c),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(
            dwpf(&re(&[0.0, 2.0]), &re(&[1.0, 5.0]), c),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn residue_at_coincident_pair() {
        // (x_n - y_n) K_n -> c f(y_n, ȳ_n) f(x̄_n, x_n) K_{n-1}, error O(δ).
        let c = Coupling::new(C64::new(0.8, 0.3)).unwrap();
        let xs = vec![C64::new(0.3, 0.1), C64::new(-0.7, 0.4), C64::new(1.1, -0.2)];
        let ys = vec![
            C64::new(-0.2, -0.5),
            C64::new(0.9, 0.6),
            C64::new(0.25, 0.35),
        ];
        let n = xs.len();
        let y_n = ys[n - 1];
        let expected = c.value()
            * prod_kernel(Kernel::F, &[y_n], &ys[..n - 1], c).unwrap()
            * prod_kernel(Kernel::F, &xs[..n - 1], &[y_n], c).unwrap()
            * dwpf(&xs[..n - 1], &ys[..n - 1], c).unwrap();
        let mut errs = vec![];
        for delta in [1e-4, 1e-5] {
            let mut x = xs.clone();
            x[n - 1] = y_n + delta;
            let r = dwpf(&x, &ys, c).unwrap() * delta;
            errs.push((r - expected).norm() / expected.norm());
        }
        assert!(errs[0] < 1e-2 && errs[1] < errs[0] / 5.0, "{errs:?}");
        let chk = residue_check(&xs, &ys, c, [1e-4, 1e-5]).unwrap();
        assert!(chk.rel_err < 1e-7, "{chk:?}");
    }

    fn pt() -> impl Strategy<Value = C64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn symmetric_in_each_set(xs in prop::collection::vec(pt(), 3), ys in prop::collection::vec(pt(), 3), rot in 1usize..3) {
            let c = Coupling::unit();
            let Ok(k) = dwpf(&xs, &ys, c) else { return Ok(()); };
            prop_assume!(k.norm() < 1e6 && k.norm() > 1e-6);
            let mut xr = xs.clone();
            xr.rotate_left(rot);
            let mut ys2 = ys.clone();
            ys2.swap(0, 2);
            let k2 = dwpf(&xr, &ys2, c).unwrap();
            prop_assert!((k2 - k).norm() < 1e-9 * k.norm());
        }
    }
}
