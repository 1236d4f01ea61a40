mod common;

use std::sync::OnceLock;

use common::{chain, disjoint_pairs, fundamental, states};
use su3ff::formfactor::*;
use su3ff::model::SiteRep;
use su3ff::numeric::rel_err;
use su3ff::{BetheState, Twist, C64};

const Z: C64 = C64::new(0.29, -0.17);

fn sectors() -> &'static [Vec<BetheState>] {
    use SiteRep::{Conjugate as C, Fundamental as F};
    static CACHE: OnceLock<Vec<Vec<BetheState>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        vec![
            states(&fundamental(4), 1, 0),
            states(&chain(&[C, C, C, C]), 0, 1),
            states(&chain(&[F, F, C, C]), 1, 1),
            states(&chain(&[F, F, F, C]), 2, 1),
        ]
    })
}

#[test]
fn solver_finds_enough_states() {
    for (sec, counts) in sectors().iter().zip([3, 3, 4, 3]) {
        assert_eq!(
            sec.len(),
            counts,
            "{:?}",
            sec.first().map(|s| (s.a(), s.b()))
        );
        assert!(disjoint_pairs(sec).len() >= 6);
    }
}

#[test]
fn diagonal_matches_cofactor_expansion() {
    for sec in sectors() {
        for st in sec {
            for s in 1..=3 {
                let a = ff_diagonal(s, Z, st).unwrap().value;
                let b = ff_diagonal_cofactor(s, Z, st).unwrap();
                assert!(rel_err(a, b) < 1e-10, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn diagonal_sum_is_eigenvalue_times_norm() {
    for sec in sectors() {
        for st in sec {
            let sum: C64 = (1..=3).map(|s| ff_diagonal(s, Z, st).unwrap().value).sum();
            let t = tau(st.model(), Z, st.u(), st.v(), &Twist::identity()).unwrap();
            let n = norm_squared(st).unwrap().value;
            assert!(rel_err(sum, t * n) < 1e-10);
        }
    }
}

#[test]
fn diagonal_is_total_kappa_derivative() {
    for sec in sectors() {
        for st in sec {
            let n = norm_squared(st).unwrap().value;
            for s in 1..=3 {
                let ff = ff_diagonal(s, Z, st).unwrap().value;
                let d = tau_kappa_total_derivative(s, Z, st).unwrap();
                assert!(rel_err(ff, d * n) < 1e-9);
            }
        }
    }
}

#[test]
fn offdiagonal_independent_of_row_and_sums_to_zero() {
    for sec in sectors() {
        for (c, b) in disjoint_pairs(sec) {
            {
                let om = omega(c, b).unwrap();
                let rows = om.admissible_rows(1e-6);
                let mut total = C64::new(0.0, 0.0);
                let mut scale = 0.0f64;
                for s in 1..=3 {
                    let base = ff_offdiagonal(s, Z, c, b).unwrap();
                    for &p in &rows {
                        let other = ff_offdiagonal_at(s, Z, c, b, p).unwrap().value;
                        assert!((other - base.value).norm() <= 1e-9 * base.scale.max(1.0));
                    }
                    total += base.value;
                    scale = scale.max(base.scale);
                }
                assert!(total.norm() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn twisted_scalar_product_vanishes_at_identity() {
    for sec in sectors() {
        for (c, b) in disjoint_pairs(sec) {
            {
                {
                    let sp = scalar_product_twisted(c, b, &Twist::identity()).unwrap();
                    assert!(sp.value.norm() <= 1e-10 * sp.scale.max(1.0));
                }
            }
        }
    }
}

#[test]
fn offdiagonal_is_kappa_derivative_of_scalar_product() {
    for sec in sectors() {
        for (c, b) in disjoint_pairs(sec) {
            {
                let dt = tau(c.model(), Z, c.u(), c.v(), &Twist::identity()).unwrap()
                    - tau(b.model(), Z, b.u(), b.v(), &Twist::identity()).unwrap();
                for s in 1..=3 {
                    let ff = ff_offdiagonal(s, Z, c, b).unwrap();
                    let d = scalar_product_kappa_derivative(s, c, b, 1e-5).unwrap();
                    assert!(
                        (ff.value - dt * d).norm() <= 1e-6 * ff.scale.max(1.0),
                        "{} vs {}",
                        ff.value,
                        dt * d
                    );
                }
            }
        }
    }
}

#[test]
fn modified_row_vanishes_and_has_y_derivative() {
    for sec in sectors() {
        let (c, b) = disjoint_pairs(sec)[0];
        let p = omega(c, b).unwrap().p;
        let row = modified_row_p(c, b, &Twist::identity(), p).unwrap();
        assert!(row.iter().all(|z| z.norm() < 1e-10));
        let om = omega(c, b).unwrap();
        let n = n_matrix_twisted(c, b, &Twist::identity()).unwrap();
        let mut acc = n.row(0).transpose() * C64::new(0.0, 0.0);
        for j in 0..om.values.len() {
            acc += n.row(j).transpose() * om.values[j];
        }
        assert!(acc
            .iter()
            .all(|z| z.norm() < 1e-9 * om.values[p].norm().max(1.0)));
        for s in 1..=3 {
            let eps = 1e-6;
            let plus = Twist::identity().bumped(s, eps);
            let minus = Twist::identity().bumped(s, -eps);
            // the row vanishes at κ = 1 for any roots, so root motion drops out
            let rp = modified_row_p(c, b, &plus, p).unwrap();
            let rm = modified_row_p(c, b, &minus, p).unwrap();
            let d = (rp - rm) / C64::new(2.0 * eps, 0.0);
            let nm = n_matrix_offdiag(s, c, b, p).unwrap();
            for k in 0..d.len() {
                let want = nm[(p, k)] / om.values[p];
                assert!(
                    (d[k] - want).norm() < 1e-6 * want.norm().max(1.0),
                    "s={s} k={k}: {} vs {want}",
                    d[k]
                );
            }
        }
    }
}

#[test]
fn local_projectors_complete() {
    for sec in [states(&fundamental(4), 1, 0), states(&fundamental(4), 2, 1)] {
        for st in sec {
            for m in 1..=4 {
                let (sum, norm) = projector_completeness(m, &st).unwrap();
                assert!(rel_err(sum, norm) < 1e-9);
            }
        }
    }
}

#[test]
fn local_projectors_need_fundamental_chain() {
    use SiteRep::{Conjugate as C, Fundamental as F};
    let sec = states(&chain(&[F, F, C, C]), 1, 1);
    assert!(ff_local(1, 1, &sec[0], &sec[0]).is_err());
}

#[test]
fn shared_roots_are_rejected() {
    // at identity twist every (2,1) state on four sites pairs two one-magnon roots
    let sec = states(&fundamental(4), 2, 1);
    assert_eq!(sec.len(), 3);
    assert!(disjoint_pairs(&sec).is_empty());
    assert!(matches!(
        ff_offdiagonal(1, Z, &sec[0], &sec[1]),
        Err(su3ff::Error::Precondition(_))
    ));
}
