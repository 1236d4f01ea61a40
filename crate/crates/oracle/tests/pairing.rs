use std::sync::Arc;

use su3ff::bethe::{search, SearchOptions};
use su3ff::formfactor::{ff_diagonal, ff_local, ff_offdiagonal, norm_squared, roots_disjoint};
use su3ff::model::SiteRep;
use su3ff::numeric::rel_err;
use su3ff::{BetheState, Coupling, ModelSpec, Twist, XxxChain, C64};
use su3ff_oracle::*;

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn chain(reps: &[SiteRep]) -> Arc<ModelSpec> {
    let xi = [
        cx(0.13, 0.05),
        cx(-0.41, 0.22),
        cx(0.37, -0.18),
        cx(-0.07, -0.31),
        cx(0.24, 0.43),
    ];
    let c = Coupling::new(cx(1.0, 0.0)).unwrap();
    Arc::new(
        XxxChain::with_reps(xi[..reps.len()].to_vec(), reps.to_vec(), c)
            .unwrap()
            .into(),
    )
}

fn states(model: &Arc<ModelSpec>, a: usize, b: usize) -> Vec<BetheState> {
    search(
        model.clone(),
        a,
        b,
        Twist::identity(),
        &SearchOptions::default(),
    )
    .states
}

const Z: [C64; 2] = [C64::new(0.29, -0.17), C64::new(-0.8, 0.6)];

#[test]
fn two_site_magnon_matches_one_eigenvalue() {
    let c = Coupling::unit();
    let model: Arc<ModelSpec> = Arc::new(
        XxxChain::new(vec![cx(0.0, 0.0), cx(0.3, 0.0)], c)
            .unwrap()
            .into(),
    );
    let st = BetheState::from_roots(
        model.clone(),
        vec![cx(-0.35, 0.0)],
        vec![],
        Twist::identity(),
    )
    .unwrap();
    assert!(st.on_shell());
    let m = match_state(&st, &MatchOptions::default()).unwrap();
    assert_eq!(m.sector.dim(), 2);
    for (w, tau) in &m.probes {
        let t = sector_transfer(model.chain().unwrap(), *w, &Twist::identity(), &m.sector).unwrap();
        let ev = su3ff_oracle::spectrum::eigenvalues(&t.matrix);
        assert_eq!(
            ev.iter()
                .filter(|l| (*l - tau).norm() < 1e-8 * (1.0 + tau.norm()))
                .count(),
            1
        );
    }
}

#[test]
fn vacuum_ratios() {
    let model = chain(&[SiteRep::Fundamental; 3]);
    let vac = BetheState::vacuum(model, Twist::identity());
    let m = match_state(&vac, &MatchOptions::default()).unwrap();
    assert!((ratio_diag(2, Z[0], &m).unwrap() - 1.0).norm() < 1e-13);
}

#[test]
fn diagonal_ratios_match_form_factors() {
    use SiteRep::{Conjugate as C, Fundamental as F};
    for (reps, a, b) in [
        (vec![F; 3], 1, 0),
        (vec![C; 3], 0, 1),
        (vec![F, F, C], 1, 1),
        (vec![F; 3], 2, 1),
    ] {
        let model = chain(&reps);
        for st in states(&model, a, b) {
            let m = match_state(&st, &MatchOptions::default()).unwrap();
            let n = norm_squared(&st).unwrap().value;
            for z in Z {
                let mut sum = C64::new(0.0, 0.0);
                for s in 1..=3 {
                    let r = ratio_diag(s, z, &m).unwrap();
                    let ff = ff_diagonal(s, z, &st).unwrap().value / n;
                    assert!(rel_err(r, ff) < 1e-8, "{reps:?} s={s}: {r} vs {ff}");
                    sum += r;
                }
                let tau =
                    su3ff::formfactor::tau(&model, z, st.u(), st.v(), &Twist::identity()).unwrap();
                assert!(rel_err(sum, tau) < 1e-10);
            }
        }
    }
}

#[test]
fn offdiagonal_ratios_match_form_factors() {
    use SiteRep::{Conjugate as C, Fundamental as F};
    for (reps, a, b) in [
        (vec![F; 4], 1, 0),
        (vec![C; 4], 0, 1),
        (vec![F, F, C, C], 1, 1),
        (vec![F, F, F, C], 2, 1),
    ] {
        let model = chain(&reps);
        let sts = states(&model, a, b);
        let matched: Vec<_> = sts
            .iter()
            .map(|s| match_state(s, &MatchOptions::default()).unwrap())
            .collect();
        let mut pairs = 0;
        for i in 0..sts.len() {
            for j in 0..sts.len() {
                if i == j || !roots_disjoint(&sts[i], &sts[j]) {
                    continue;
                }
                pairs += 1;
                let (c, bb) = (&sts[i], &sts[j]);
                let norms = norm_squared(c).unwrap().value * norm_squared(bb).unwrap().value;
                for (s, s2) in [(1, 3), (2, 2), (3, 1)] {
                    let r = ratio_offdiag(s, s2, Z[0], Z[1], &matched[i], &matched[j]).unwrap();
                    let ff = ff_offdiagonal(s, Z[0], c, bb).unwrap().value
                        * ff_offdiagonal(s2, Z[1], bb, c).unwrap().value
                        / norms;
                    assert!(rel_err(r, ff) < 1e-8, "{reps:?} ({s},{s2}): {r} vs {ff}");
                }
            }
        }
        assert!(pairs >= 6, "{reps:?}: {pairs}");
    }
}

#[test]
fn local_ratios_match_form_factors() {
    let model = chain(&[SiteRep::Fundamental; 4]);
    for (a, b) in [(1, 0), (2, 0)] {
        let sts = states(&model, a, b);
        let matched: Vec<_> = sts
            .iter()
            .map(|s| match_state(s, &MatchOptions::default()).unwrap())
            .collect();
        for i in 0..sts.len() {
            let n = norm_squared(&sts[i]).unwrap().value;
            for m in 1..=4 {
                for s in 1..=3 {
                    let r = ratio_local_diag(s, m, &matched[i]).unwrap();
                    let ff = ff_local(s, m, &sts[i], &sts[i]).unwrap().value / n;
                    assert!(
                        rel_err(r, ff) < 1e-7 || (r - ff).norm() < 1e-9,
                        "diag m={m} s={s}: {r} vs {ff}"
                    );
                }
            }
            for j in 0..sts.len() {
                if i == j || !roots_disjoint(&sts[i], &sts[j]) {
                    continue;
                }
                let (c, bb) = (&sts[i], &sts[j]);
                let norms = norm_squared(c).unwrap().value * norm_squared(bb).unwrap().value;
                for m in 1..=4 {
                    for s in 1..=3 {
                        let r = ratio_local(s, m, 2, Z[1], &matched[i], &matched[j]).unwrap();
                        let ff = ff_local(s, m, c, bb).unwrap().value
                            * ff_offdiagonal(2, Z[1], bb, c).unwrap().value
                            / norms;
                        assert!(
                            rel_err(r, ff) < 1e-7 || (r - ff).norm() < 1e-9,
                            "off m={m} s={s}: {r} vs {ff}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn disjoint_magnon_pairs_have_vanishing_elements() {
    // on an all-fundamental chain (2,1) states are pairs of one-magnon roots;
    // pairs without a common root are not connected by T_ss
    let model = chain(&[SiteRep::Fundamental; 5]);
    let sts = states(&model, 2, 1);
    assert_eq!(sts.len(), 6);
    for c in &sts {
        for b in &sts {
            if std::ptr::eq(c, b) || !roots_disjoint(c, b) {
                continue;
            }
            let mc = match_state(c, &MatchOptions::default()).unwrap();
            let mb = match_state(b, &MatchOptions::default()).unwrap();
            let r = ratio_offdiag(1, 1, Z[0], Z[1], &mc, &mb).unwrap();
            assert!(r.norm() < 1e-20);
            let f = ff_offdiagonal(1, Z[0], c, b).unwrap();
            assert!(f.value.norm() < 1e-12 * f.scale);
        }
    }
}
