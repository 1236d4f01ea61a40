//! The acceptance suite behind `su3ff verify`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use su3ff::bethe::{continue_in_twist, jacobian_theta, phi, search, SearchOptions};
use su3ff::dwpf::residue_check;
use su3ff::formfactor::{
    ff_diagonal, ff_local, ff_offdiagonal, ff_offdiagonal_at, hab, n_matrix_twisted,
    n_matrix_twisted_magnitude, norm_squared, omega, projector_completeness, roots_disjoint,
    scalar_product_kappa_derivative, scalar_product_twisted, tau, tau_kappa_total_derivative,
    theta_ext,
};
use su3ff::linalg::determinant;
use su3ff::numeric::rel_err;
use su3ff::psum::{gtilde_residue_at_xi, gtilde_residue_at_xi_plus_c, PartitionSum, SumMode};
use su3ff::{BetheState, Coupling, ModelSpec, SiteRep, Twist, XxxChain, C64};
use su3ff_oracle::{
    match_state, ratio_diag, ratio_local, ratio_local_diag, ratio_offdiag, MatchOptions,
    MatchedState,
};

use crate::records::{Check, CriterionRecord};

/// Deliberate defects for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mutation {
    /// Negate the root-gradient border row of the diagonal determinant.
    BorderSign,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Criteria to run; all when empty.
    pub only: Vec<usize>,
    pub mutation: Option<Mutation>,
    /// Re-run criteria 1–8 and compare the measurements for criterion 9.
    pub determinism_rerun: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 7,
            only: Vec::new(),
            mutation: None,
            determinism_rerun: true,
        }
    }
}

/// Id, title and runtime limit in seconds where one is set.
pub const CRITERIA: [(usize, &str, Option<f64>); 9] = [
    (1, "domain-wall partition function residue", Some(1.0)),
    (2, "partition sums and their recursions", Some(10.0)),
    (3, "Bethe solver", None),
    (4, "diagonal form factors against the lattice", Some(60.0)),
    (
        5,
        "off-diagonal form factors against the lattice",
        Some(120.0),
    ),
    (6, "twist-derivative identities", None),
    (7, "scalar product structure at the identity twist", None),
    (8, "local projectors against the lattice", None),
    (9, "full suite runtime and determinism", Some(300.0)),
];

const IDENTITIES: [&[&str]; 9] = [
    &["Izergin determinant", "DWPF pole residue"],
    &[
        "partition sum at unit twist",
        "first-order twist expansion of the partition sum",
        "derivative partition sum closed form",
        "derivative partition sum residue at eta = xi",
        "derivative partition sum residue at eta = xi + c",
    ],
    &["logarithmic Bethe equations", "Gaudin-type Jacobian"],
    &[
        "diagonal form factor determinant",
        "Gaudin norm",
        "transfer matrix eigenvalue",
        "diagonal sum over s",
    ],
    &[
        "off-diagonal form factor determinant",
        "null vector Omega",
        "modified row independence",
        "off-diagonal sum over s",
    ],
    &[
        "eigenvalue twist derivative",
        "twisted scalar product derivative",
        "root motion under the twist",
    ],
    &[
        "twisted scalar product determinant",
        "scalar product at unit twist",
        "Omega null vector",
    ],
    &["quantum inverse problem", "local projector completeness"],
    &[],
];

const XI: [(f64, f64); 5] = [
    (0.13, 0.05),
    (-0.41, 0.22),
    (0.37, -0.18),
    (-0.07, -0.31),
    (0.24, 0.43),
];
const Z: [(f64, f64); 3] = [(0.29, -0.17), (-0.8, 0.6), (1.4, 0.35)];

fn cx(z: (f64, f64)) -> C64 {
    C64::new(z.0, z.1)
}

fn chain(reps: &[SiteRep]) -> Arc<ModelSpec> {
    let xi = XI[..reps.len()].iter().map(|&z| cx(z)).collect();
    Arc::new(
        XxxChain::with_reps(xi, reps.to_vec(), Coupling::unit())
            .expect("fixed test chain")
            .into(),
    )
}

type Key = (Vec<SiteRep>, usize, usize);

/// Solved sectors and lattice matches shared between criteria.
struct Fixtures {
    seed: u64,
    states: RefCell<HashMap<Key, Vec<BetheState>>>,
    matched: RefCell<HashMap<Key, Vec<Option<MatchedState>>>>,
}

impl Fixtures {
    fn new(seed: u64) -> Self {
        Fixtures {
            seed,
            states: RefCell::default(),
            matched: RefCell::default(),
        }
    }

    fn states(&self, reps: &[SiteRep], a: usize, b: usize) -> Vec<BetheState> {
        let key = (reps.to_vec(), a, b);
        if let Some(s) = self.states.borrow().get(&key) {
            return s.clone();
        }
        let opts = SearchOptions {
            rng_seed: self.seed,
            ..SearchOptions::default()
        };
        let found = search(chain(reps), a, b, Twist::identity(), &opts).states;
        self.states.borrow_mut().insert(key, found.clone());
        found
    }

    fn matched(&self, reps: &[SiteRep], a: usize, b: usize) -> Vec<Option<MatchedState>> {
        let key = (reps.to_vec(), a, b);
        if let Some(m) = self.matched.borrow().get(&key) {
            return m.clone();
        }
        let opts = MatchOptions::default();
        let m: Vec<_> = self
            .states(reps, a, b)
            .iter()
            .map(|s| match_state(s, &opts).ok())
            .collect();
        self.matched.borrow_mut().insert(key, m.clone());
        m
    }
}

fn sector_name(reps: &[SiteRep], a: usize, b: usize) -> String {
    let r: String = reps
        .iter()
        .map(|r| match r {
            SiteRep::Fundamental => 'F',
            SiteRep::Conjugate => 'C',
        })
        .collect();
    format!("{r}({a},{b})")
}

/// Running maximum of a relative error, reported as one check.
struct MaxErr {
    label: String,
    worst: f64,
    count: usize,
    error: Option<String>,
}

impl MaxErr {
    fn new(label: impl Into<String>) -> Self {
        MaxErr {
            label: label.into(),
            worst: 0.0,
            count: 0,
            error: None,
        }
    }

    fn push(&mut self, e: f64) {
        self.count += 1;
        if e.is_nan() || e > self.worst {
            self.worst = e;
        }
    }

    fn push_result<T: std::fmt::Display>(&mut self, r: Result<f64, T>) {
        match r {
            Ok(e) => self.push(e),
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(e.to_string());
                }
            }
        }
    }

    fn check(self, tol: f64) -> Check {
        match self.error {
            Some(e) => Check::failed(self.label, &e),
            None if self.count == 0 => Check::failed(self.label, "nothing was measured"),
            None => Check::below(
                format!("{} (max of {})", self.label, self.count),
                self.worst,
                tol,
            ),
        }
    }
}

fn count_check(label: impl Into<String>, count: usize, min: usize) -> Check {
    Check {
        label: label.into(),
        value: count as f64,
        tol: min as f64,
        passed: count >= min,
    }
}

fn random_point(rng: &mut ChaCha8Rng, w: f64) -> C64 {
    C64::new(rng.random_range(-w..w), rng.random_range(-w..w))
}

fn criterion_1(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Coupling::new(C64::new(0.8, 0.3)).expect("nonzero");
    let mut checks = Vec::new();
    for n in 2..=5 {
        let mut e = MaxErr::new(format!("residue rel err, n = {n}"));
        for _ in 0..4 {
            let xs: Vec<C64> = (0..n).map(|_| random_point(&mut rng, 1.5)).collect();
            let ys: Vec<C64> = (0..n).map(|_| random_point(&mut rng, 1.5)).collect();
            e.push_result(residue_check(&xs, &ys, c, [1e-4, 1e-5]).map(|r| r.rel_err));
        }
        checks.push(e.check(1e-6));
    }
    checks
}

fn criterion_2(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let c = Coupling::new(C64::new(1.0, 0.5)).expect("nonzero");
    let w = 0.3 * c.value().norm();
    let one = C64::new(1.0, 0.0);
    let sets = |rng: &mut ChaCha8Rng, n: usize, w: f64| -> (Vec<C64>, Vec<C64>) {
        (
            (0..n).map(|_| random_point(rng, w)).collect(),
            (0..n).map(|_| random_point(rng, w)).collect(),
        )
    };
    let mut checks = Vec::new();
    let mut closed = MaxErr::new("partition sum at unit twist vs closed form, n <= 4");
    for n in 1..=4 {
        for _ in 0..3 {
            let (xi, eta) = sets(&mut rng, n, w);
            closed.push_result(
                PartitionSum::new(&xi, &eta, c)
                    .and_then(|ps| Ok(rel_err(ps.closed_at_one()?, ps.brute(one)?))),
            );
        }
    }
    checks.push(closed.check(1e-10));
    let mut gt = MaxErr::new("derivative sum brute vs closed, n <= 5");
    for n in 1..=5 {
        for _ in 0..3 {
            let (xi, eta) = sets(&mut rng, n, w);
            let gamma = random_point(&mut rng, 1.0);
            gt.push_result(PartitionSum::new(&xi, &eta, c).and_then(|ps| {
                Ok(rel_err(
                    ps.gtilde(gamma, SumMode::Closed)?,
                    ps.gtilde(gamma, SumMode::Brute)?,
                ))
            }));
        }
    }
    checks.push(gt.check(1e-10));
    for n in [2usize, 3] {
        let (xi, eta) = sets(&mut rng, n, 1.5);
        let slope = PartitionSum::new(&xi, &eta, Coupling::unit()).and_then(|ps| {
            let rem = |eps: f64| -> su3ff::Result<f64> {
                let z = C64::new(1.0 + eps, 0.0);
                Ok((ps.brute(z)? - ps.first_order(z)?.value).norm())
            };
            Ok((rem(1e-2)? / rem(1e-3)?).log10())
        });
        let label = format!("first-order remainder slope, n = {n}");
        checks.push(match slope {
            Ok(s) => Check::near(label, s, 2.0, 0.1),
            Err(e) => Check::failed(label, &e.to_string()),
        });
    }
    let mut r1 = MaxErr::new("residue at eta = xi, n <= 4");
    let mut r2 = MaxErr::new("residue at eta = xi + c, n <= 4");
    for n in 1..=4 {
        let (xi, eta) = sets(&mut rng, n, 1.5);
        let gamma = random_point(&mut rng, 1.0);
        r1.push_result(
            gtilde_residue_at_xi(&xi, &eta, gamma, Coupling::unit(), [1e-4, 1e-5])
                .map(|r| r.rel_err),
        );
        r2.push_result(
            gtilde_residue_at_xi_plus_c(&xi, &eta, gamma, Coupling::unit(), [1e-4, 1e-5])
                .map(|r| r.rel_err),
        );
    }
    checks.push(r1.check(1e-6));
    checks.push(r2.check(1e-6));
    checks
}

fn theta_fd_err(model: &ModelSpec, u: &[C64], v: &[C64]) -> su3ff::Result<f64> {
    let th = jacobian_theta(model, u, v)?;
    let x: Vec<C64> = u.iter().chain(v).copied().collect();
    let a = u.len();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let fp = phi(model, &xp[..a], &xp[a..])?;
        let fm = phi(model, &xm[..a], &xm[a..])?;
        for j in 0..x.len() {
            let fd = (fp[j] - fm[j]) / (2.0 * h);
            worst = worst.max((fd - th[(j, k)]).norm() / th[(j, k)].norm().max(1.0));
        }
    }
    Ok(worst)
}

fn criterion_3(fx: &Fixtures) -> Vec<Check> {
    use SiteRep::{Conjugate as C, Fundamental as F};
    let mut checks = Vec::new();
    let two: Arc<ModelSpec> = Arc::new(
        XxxChain::new(
            vec![C64::new(0.0, 0.0), C64::new(0.3, 0.0)],
            Coupling::unit(),
        )
        .expect("two sites")
        .into(),
    );
    let opts = SearchOptions {
        rng_seed: fx.seed,
        ..SearchOptions::default()
    };
    let rep = search(two, 1, 0, Twist::identity(), &opts);
    let label = "closed-form root u = -0.35 on two sites";
    checks.push(match rep.states.as_slice() {
        [st] => Check::below(label, (st.u()[0] - C64::new(-0.35, 0.0)).norm(), 1e-12),
        other => Check::failed(label, &format!("{} states found", other.len())),
    });
    let mut res = MaxErr::new("residual");
    let mut fd = MaxErr::new("Jacobian vs finite differences");
    let mut found = 0;
    let cases: [(Vec<SiteRep>, usize, usize); 7] = [
        (vec![F, F], 1, 0),
        (vec![F, C], 1, 1),
        (vec![F; 3], 1, 0),
        (vec![F, F, C], 1, 1),
        (vec![F; 3], 2, 1),
        (vec![F; 4], 2, 0),
        (vec![F, F, C, C], 1, 1),
    ];
    for (reps, a, b) in cases {
        let sts = fx.states(&reps, a, b);
        found += sts.len();
        for st in &sts {
            res.push(st.residual_norm());
            fd.push_result(theta_fd_err(st.model(), st.u(), st.v()));
        }
    }
    checks.push(count_check("states found on L = 2, 3, 4", found, 7));
    checks.push(res.check(1e-12));
    checks.push(fd.check(1e-7));
    checks
}

fn mutated_diagonal(s: usize, z: C64, st: &BetheState) -> su3ff::Result<C64> {
    let mut m = theta_ext(s, z, st)?;
    let n = m.nrows() - 1;
    for k in 0..n {
        m[(n, k)] = -m[(n, k)];
    }
    Ok(hab(st.u(), st.v(), st.coupling())? * determinant(&m).value)
}

fn diag_sectors(len: usize) -> Vec<(Vec<SiteRep>, usize, usize)> {
    use SiteRep::{Conjugate as C, Fundamental as F};
    let mixed = {
        let mut r = vec![F; len - len / 2];
        r.extend(vec![C; len / 2]);
        r
    };
    vec![
        (vec![F; len], 1, 0),
        (vec![C; len], 0, 1),
        (mixed, 1, 1),
        (vec![F; len], 2, 1),
    ]
}

fn offdiag_sectors() -> Vec<(Vec<SiteRep>, usize, usize)> {
    use SiteRep::{Conjugate as C, Fundamental as F};
    vec![
        (vec![F; 4], 1, 0),
        (vec![C; 4], 0, 1),
        (vec![F, F, C, C], 1, 1),
        (vec![F, F, F, C], 2, 1),
    ]
}

fn criterion_4(fx: &Fixtures, mutation: Option<Mutation>) -> Vec<Check> {
    let mut checks = Vec::new();
    for len in [3, 4] {
        for (reps, a, b) in diag_sectors(len) {
            let name = sector_name(&reps, a, b);
            let sts = fx.states(&reps, a, b);
            let matched = fx.matched(&reps, a, b);
            let mut ratio = MaxErr::new(format!("{name} diagonal vs lattice"));
            let mut sum = MaxErr::new(format!("{name} sum over s vs eigenvalue"));
            for (st, m) in sts.iter().zip(&matched) {
                let Some(m) = m else {
                    ratio.push_result::<&str>(Err("no lattice eigenvector matched"));
                    continue;
                };
                for z in Z.map(cx) {
                    let r = (|| -> Result<(), String> {
                        let n = norm_squared(st).map_err(|e| e.to_string())?.value;
                        let mut acc = C64::new(0.0, 0.0);
                        for s in 1..=3 {
                            let ff = match mutation {
                                Some(Mutation::BorderSign) => mutated_diagonal(s, z, st),
                                None => ff_diagonal(s, z, st).map(|f| f.value),
                            }
                            .map_err(|e| e.to_string())?
                                / n;
                            let o = ratio_diag(s, z, m).map_err(|e| e.to_string())?;
                            ratio.push(rel_err(ff, o));
                            acc += ff;
                        }
                        let t = tau(st.model(), z, st.u(), st.v(), &Twist::identity())
                            .map_err(|e| e.to_string())?;
                        sum.push(rel_err(acc, t));
                        Ok(())
                    })();
                    if let Err(e) = r {
                        ratio.push_result::<String>(Err(e));
                    }
                }
            }
            checks.push(count_check(format!("{name} states"), sts.len(), 1));
            checks.push(ratio.check(1e-8));
            checks.push(sum.check(1e-10));
        }
    }
    checks
}

fn pairs(sts: &[BetheState]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..sts.len() {
        for j in 0..sts.len() {
            if i != j && roots_disjoint(&sts[i], &sts[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

fn criterion_5(fx: &Fixtures) -> Vec<Check> {
    let z = cx(Z[0]);
    let z2 = cx(Z[1]);
    let mut checks = Vec::new();
    for (reps, a, b) in offdiag_sectors() {
        let name = sector_name(&reps, a, b);
        let sts = fx.states(&reps, a, b);
        let matched = fx.matched(&reps, a, b);
        let prs = pairs(&sts);
        let mut spread = MaxErr::new(format!("{name} spread over the modified row / max_s |F_s|"));
        let mut sum = MaxErr::new(format!("{name} |sum over s| / max_s |F_s|"));
        let mut cross = MaxErr::new(format!(
            "{name} cross ratio vs lattice / largest cross ratio"
        ));
        for &(i, j) in &prs {
            let (c, bb) = (&sts[i], &sts[j]);
            let r = (|| -> Result<(), String> {
                let rows = omega(c, bb)
                    .map_err(|e| e.to_string())?
                    .admissible_rows(1e-6);
                let mut base = Vec::with_capacity(3);
                for s in 1..=3 {
                    base.push(
                        ff_offdiagonal(s, z, c, bb)
                            .map_err(|e| e.to_string())?
                            .value,
                    );
                }
                let mag = base.iter().fold(0.0f64, |m, v| m.max(v.norm()));
                let mut worst = 0.0f64;
                for s in 1..=3 {
                    for &p in &rows {
                        let other = ff_offdiagonal_at(s, z, c, bb, p)
                            .map_err(|e| e.to_string())?
                            .value;
                        worst = worst.max((other - base[s - 1]).norm() / mag);
                    }
                }
                spread.push(worst);
                sum.push(base.iter().sum::<C64>().norm() / mag);
                let (Some(mc), Some(mb)) = (&matched[i], &matched[j]) else {
                    return Err("no lattice eigenvector matched".into());
                };
                let norms = norm_squared(c).map_err(|e| e.to_string())?.value
                    * norm_squared(bb).map_err(|e| e.to_string())?.value;
                let mut diffs = Vec::new();
                let mut largest = 0.0f64;
                for s in 1..=3 {
                    for s2 in 1..=3 {
                        let o = ratio_offdiag(s, s2, z, z2, mc, mb).map_err(|e| e.to_string())?;
                        let f = base[s - 1]
                            * ff_offdiagonal(s2, z2, bb, c)
                                .map_err(|e| e.to_string())?
                                .value
                            / norms;
                        diffs.push((f - o).norm());
                        largest = largest.max(o.norm());
                    }
                }
                cross.push(diffs.iter().fold(0.0f64, |m, &d| m.max(d)) / largest);
                Ok(())
            })();
            if let Err(e) = r {
                cross.push_result::<String>(Err(e));
            }
        }
        checks.push(count_check(format!("{name} disjoint pairs"), prs.len(), 3));
        checks.push(spread.check(1e-10));
        checks.push(sum.check(1e-10));
        checks.push(cross.check(1e-8));
    }
    checks
}

fn criterion_6(fx: &Fixtures) -> Vec<Check> {
    let z = cx(Z[0]);
    let mut diag = MaxErr::new("eigenvalue twist derivative vs diagonal / norm");
    let mut off = MaxErr::new("scalar product twist derivative vs off-diagonal");
    for (reps, a, b) in offdiag_sectors() {
        let sts = fx.states(&reps, a, b);
        for st in &sts {
            diag.push_result((|| -> su3ff::Result<f64> {
                let n = norm_squared(st)?.value;
                let mut worst = 0.0f64;
                for s in 1..=3 {
                    let ff = ff_diagonal(s, z, st)?.value / n;
                    worst = worst.max(rel_err(tau_kappa_total_derivative(s, z, st)?, ff));
                }
                Ok(worst)
            })());
        }
        for (i, j) in pairs(&sts) {
            let (c, bb) = (&sts[i], &sts[j]);
            off.push_result((|| -> su3ff::Result<f64> {
                let id = Twist::identity();
                let dt = tau(c.model(), z, c.u(), c.v(), &id)?
                    - tau(bb.model(), z, bb.u(), bb.v(), &id)?;
                let mut worst = 0.0f64;
                for s in 1..=3 {
                    let ff = ff_offdiagonal(s, z, c, bb)?.value;
                    let d = scalar_product_kappa_derivative(s, c, bb, 1e-5)?;
                    worst = worst.max(rel_err(dt * d, ff));
                }
                Ok(worst)
            })());
        }
    }
    vec![diag.check(1e-10), off.check(1e-5)]
}

fn criterion_7(fx: &Fixtures) -> Vec<Check> {
    let z = cx(Z[0]);
    let mut zero = MaxErr::new("|scalar product| at unit twist / term-magnitude bound");
    let mut null = MaxErr::new("|Omega N| / (|Omega| |N| in term magnitudes)");
    let mut slopes = MaxErr::new("|remainder slope - 2|");
    for (reps, a, b) in offdiag_sectors() {
        let sts = fx.states(&reps, a, b);
        for (i, j) in pairs(&sts) {
            let (c, bb) = (&sts[i], &sts[j]);
            let id = Twist::identity();
            zero.push_result(
                scalar_product_twisted(c, bb, &id).map(|sp| sp.value.norm() / sp.scale),
            );
            null.push_result((|| -> su3ff::Result<f64> {
                let om = omega(c, bb)?;
                let n = n_matrix_twisted(c, bb, &id)?;
                let mag = n_matrix_twisted_magnitude(c, bb, &id)?;
                let mut worst = 0.0f64;
                for k in 0..n.ncols() {
                    let res: C64 = (0..n.nrows()).map(|j| om.values[j] * n[(j, k)]).sum();
                    let size: f64 = (0..n.nrows())
                        .map(|j| om.values[j].norm() * mag[(j, k)])
                        .sum();
                    worst = worst.max(res.norm() / size);
                }
                Ok(worst)
            })());
            slopes.push_result((|| -> su3ff::Result<f64> {
                let dt = tau(c.model(), z, c.u(), c.v(), &id)?
                    - tau(bb.model(), z, bb.u(), bb.v(), &id)?;
                // κ₁ or κ₃, whichever the pair responds to more strongly
                let f1 = ff_offdiagonal(1, z, c, bb)?.value;
                let f3 = ff_offdiagonal(3, z, c, bb)?.value;
                let (s, d) = if f1.norm() > f3.norm() {
                    (1, f1 / dt)
                } else {
                    (3, f3 / dt)
                };
                let rem = |eps: f64| -> su3ff::Result<f64> {
                    let tw = id.bumped(s, eps);
                    let ct = continue_in_twist(c, tw, 4)?;
                    let sp = scalar_product_twisted(&ct, bb, &tw)?;
                    Ok((sp.value - eps * d).norm())
                };
                Ok(((rem(1e-2)? / rem(1e-3)?).log10() - 2.0).abs())
            })());
        }
    }
    vec![zero.check(1e-10), null.check(1e-10), slopes.check(0.1)]
}

fn criterion_8(fx: &Fixtures) -> Vec<Check> {
    use SiteRep::Fundamental as F;
    let z2 = cx(Z[1]);
    let reps = [F; 3];
    let mut diag = MaxErr::new("F^3 local diagonal vs lattice");
    let mut off = MaxErr::new("F^3 local off-diagonal vs lattice");
    let mut complete = MaxErr::new("F^3 projector completeness");
    let mut npairs = 0;
    for (a, b) in [(1, 0), (2, 1)] {
        let sts = fx.states(&reps, a, b);
        let matched = fx.matched(&reps, a, b);
        for (i, st) in sts.iter().enumerate() {
            let Some(mi) = &matched[i] else {
                diag.push_result::<&str>(Err("no lattice eigenvector matched"));
                continue;
            };
            for m in 1..=3 {
                complete.push_result(projector_completeness(m, st).map(|(s, n)| rel_err(s, n)));
                diag.push_result((|| -> Result<f64, String> {
                    let n = norm_squared(st).map_err(|e| e.to_string())?.value;
                    let mut worst = 0.0f64;
                    for s in 1..=3 {
                        let f = ff_local(s, m, st, st).map_err(|e| e.to_string())?.value / n;
                        worst = worst.max(rel_err(
                            f,
                            ratio_local_diag(s, m, mi).map_err(|e| e.to_string())?,
                        ));
                    }
                    Ok(worst)
                })());
            }
            for j in 0..sts.len() {
                if i == j || !roots_disjoint(st, &sts[j]) {
                    continue;
                }
                let Some(mj) = &matched[j] else { continue };
                npairs += 1;
                let bb = &sts[j];
                for m in 1..=3 {
                    off.push_result((|| -> Result<f64, String> {
                        let norms = norm_squared(st).map_err(|e| e.to_string())?.value
                            * norm_squared(bb).map_err(|e| e.to_string())?.value;
                        let back = ff_offdiagonal(2, z2, bb, st)
                            .map_err(|e| e.to_string())?
                            .value;
                        let mut worst = 0.0f64;
                        for s in 1..=3 {
                            let f = ff_local(s, m, st, bb).map_err(|e| e.to_string())?.value * back
                                / norms;
                            let o = ratio_local(s, m, 2, z2, mi, mj).map_err(|e| e.to_string())?;
                            worst = worst.max(rel_err(f, o));
                        }
                        Ok(worst)
                    })());
                }
            }
        }
    }
    vec![
        diag.check(1e-7),
        count_check("F^3 disjoint ordered pairs", npairs, 2),
        off.check(1e-7),
        complete.check(1e-12),
    ]
}

fn run_one(id: usize, fx: &Fixtures, opts: &VerifyOptions) -> CriterionRecord {
    let (_, title, limit) = CRITERIA[id - 1];
    let start = Instant::now();
    let mut checks = match id {
        1 => criterion_1(opts.seed),
        2 => criterion_2(opts.seed),
        3 => criterion_3(fx),
        4 => criterion_4(fx, opts.mutation),
        5 => criterion_5(fx),
        6 => criterion_6(fx),
        7 => criterion_7(fx),
        8 => criterion_8(fx),
        _ => unreachable!("criterion 9 is assembled by run"),
    };
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(limit) = limit {
        checks.push(Check::below("runtime s", elapsed, limit));
    }
    CriterionRecord {
        id,
        title,
        passed: checks.iter().all(|c| c.passed),
        elapsed_s: elapsed,
        time_limit_s: limit,
        identities: IDENTITIES[id - 1].to_vec(),
        checks,
    }
}

fn selected(opts: &VerifyOptions, id: usize) -> bool {
    opts.only.is_empty() || opts.only.contains(&id)
}

/// Measurements of a run, with the timing checks left out.
fn fingerprint(records: &[CriterionRecord]) -> Vec<(usize, String, u64)> {
    records
        .iter()
        .flat_map(|r| {
            r.checks
                .iter()
                .filter(|c| c.label != "runtime s")
                .map(move |c| (r.id, c.label.clone(), c.value.to_bits()))
        })
        .collect()
}

/// Runs the selected criteria, calling `emit` as each one finishes.
pub fn run(opts: &VerifyOptions, mut emit: impl FnMut(&CriterionRecord)) -> Vec<CriterionRecord> {
    let start = Instant::now();
    let fx = Fixtures::new(opts.seed);
    let mut out = Vec::new();
    for id in 1..=8 {
        if selected(opts, id) {
            let r = run_one(id, &fx, opts);
            emit(&r);
            out.push(r);
        }
    }
    if selected(opts, 9) {
        let first_pass = start.elapsed().as_secs_f64();
        let mut checks = Vec::new();
        if opts.determinism_rerun {
            let fx2 = Fixtures::new(opts.seed);
            let again: Vec<CriterionRecord> = (1..=8)
                .filter(|&id| selected(opts, id))
                .map(|id| run_one(id, &fx2, opts))
                .collect();
            let (a, b) = (fingerprint(&out), fingerprint(&again));
            let differing =
                a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
            checks.push(Check {
                label: format!(
                    "measurements differing between two runs with seed {} (of {})",
                    opts.seed,
                    a.len()
                ),
                value: differing as f64,
                tol: 0.0,
                passed: differing == 0,
            });
        }
        checks.push(Check::below(
            "suite runtime s",
            first_pass,
            CRITERIA[8].2.unwrap_or(f64::INFINITY),
        ));
        let elapsed = start.elapsed().as_secs_f64();
        let r = CriterionRecord {
            id: 9,
            title: CRITERIA[8].1,
            passed: checks.iter().all(|c| c.passed),
            elapsed_s: elapsed,
            time_limit_s: CRITERIA[8].2,
            identities: Vec::new(),
            checks,
        };
        emit(&r);
        out.push(r);
    }
    out
}
