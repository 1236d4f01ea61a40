//! Nested Bethe equations in logarithmic form, their Jacobian `θ`, a damped
//! Newton solver and continuation of solutions in the twist.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{f, prod_kernel, without, Coupling, Kernel, VarSet, C64};
use crate::linalg::{max_abs_vec, solve as lin_solve, CMatrix, CVector};
use crate::model::{ModelSpec, Ratio, Twist};

/// Residual bound below which a state counts as on-shell.
pub const ON_SHELL_TOL: f64 = 1e-10;

/// Branch integers `ℓ_1..ℓ_a`, `m_1..m_b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Modes {
    pub l: Vec<i64>,
    pub m: Vec<i64>,
}

impl Modes {
    pub fn zeros(a: usize, b: usize) -> Self {
        Modes {
            l: vec![0; a],
            m: vec![0; b],
        }
    }
}

/// How branch integers enter the residual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeChoice {
    /// Solve for the given integers.
    Fixed(Modes),
    /// Accept whichever branch the roots land on; the residual is reduced
    /// modulo `2πi` and the integers are read off at convergence.
    Free,
}

fn log_checked(z: C64, what: &str) -> Result<C64> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::ZeroArgument(what.into()));
    }
    Ok(z.ln())
}

/// `d/dx log f(x, y)` as a function of `d = x - y`.
fn psi(d: C64, c: C64) -> C64 {
    1.0 / (d + c) - 1.0 / d
}

/// `Φ_1..Φ_{a+b}` with principal logarithms of each product.
pub fn phi(model: &ModelSpec, u: &[C64], v: &[C64]) -> Result<CVector> {
    let c = model.coupling();
    let a = u.len();
    let mut out = CVector::zeros(a + v.len());
    for j in 0..a {
        let uj = [u[j]];
        let rest = without(u, j);
        let ratio = prod_kernel(Kernel::F, &uj, &rest, c)? / prod_kernel(Kernel::F, &rest, &uj, c)?;
        out[j] = log_checked(model.eval_r(Ratio::R1, u[j])?, "r1")?
            - log_checked(ratio, "f(u_j, ū_j)/f(ū_j, u_j)")?
            - log_checked(prod_kernel(Kernel::F, v, &uj, c)?, "f(v̄, u_j)")?;
    }
    for j in 0..v.len() {
        let vj = [v[j]];
        let rest = without(v, j);
        let ratio = prod_kernel(Kernel::F, &rest, &vj, c)? / prod_kernel(Kernel::F, &vj, &rest, c)?;
        out[a + j] = log_checked(model.eval_r(Ratio::R3, v[j])?, "r3")?
            - log_checked(ratio, "f(v̄_j, v_j)/f(v_j, v̄_j)")?
            - log_checked(prod_kernel(Kernel::F, &vj, u, c)?, "f(v_j, ū)")?;
    }
    Ok(out)
}

fn targets(twist: &Twist) -> (C64, C64) {
    let lk = |s| twist.kappa(s).ln();
    (lk(2) - lk(1), lk(2) - lk(3))
}

/// `Φ - (log κ₂ - log κ_{1|3} + 2πi n)` for fixed branch integers.
pub fn residual(
    model: &ModelSpec,
    u: &[C64],
    v: &[C64],
    twist: &Twist,
    modes: &Modes,
) -> Result<CVector> {
    if modes.l.len() != u.len() || modes.m.len() != v.len() {
        return Err(Error::SizeMismatch {
            what: "mode numbers vs roots",
            left: modes.l.len() + modes.m.len(),
            right: u.len() + v.len(),
        });
    }
    let (tu, tv) = targets(twist);
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let mut r = phi(model, u, v)?;
    let a = u.len();
    for j in 0..a {
        r[j] -= tu + two_pi_i * modes.l[j] as f64;
    }
    for j in 0..v.len() {
        r[a + j] -= tv + two_pi_i * modes.m[j] as f64;
    }
    Ok(r)
}

/// Residual reduced modulo `2πi`, with the integers it implies.
fn residual_free(
    model: &ModelSpec,
    u: &[C64],
    v: &[C64],
    twist: &Twist,
) -> Result<(CVector, Modes)> {
    let (tu, tv) = targets(twist);
    let mut r = phi(model, u, v)?;
    let a = u.len();
    let mut modes = Modes::zeros(a, v.len());
    for j in 0..r.len() {
        r[j] -= if j < a { tu } else { tv };
        let n = (r[j].im / (2.0 * PI)).round();
        r[j] -= C64::new(0.0, 2.0 * PI * n);
        if j < a {
            modes.l[j] = n as i64;
        } else {
            modes.m[j - a] = n as i64;
        }
    }
    Ok((r, modes))
}

fn residual_for(
    model: &ModelSpec,
    u: &[C64],
    v: &[C64],
    twist: &Twist,
    choice: &ModeChoice,
) -> Result<(CVector, Modes)> {
    match choice {
        ModeChoice::Fixed(m) => Ok((residual(model, u, v, twist, m)?, m.clone())),
        ModeChoice::Free => residual_free(model, u, v, twist),
    }
}

/// Jacobian `θ_{j,k} = ∂Φ_j/∂(ū, v̄)_k`, computed analytically.
pub fn jacobian_theta(model: &ModelSpec, u: &[C64], v: &[C64]) -> Result<CMatrix> {
    let c = model.coupling();
    let cv = c.value();
    let (a, b) = (u.len(), v.len());
    check_kernel_args(u, v, c)?;
    let mut th = CMatrix::zeros(a + b, a + b);
    for j in 0..a {
        let mut diag = model.eval_logderiv_r(Ratio::R1, u[j])?;
        for k in 0..a {
            if k != j {
                let s = psi(u[j] - u[k], cv) + psi(u[k] - u[j], cv);
                diag -= s;
                th[(j, k)] = s;
            }
        }
        for m in 0..b {
            let p = psi(v[m] - u[j], cv);
            diag += p;
            th[(j, a + m)] = -p;
        }
        th[(j, j)] = diag;
    }
    for j in 0..b {
        let mut diag = model.eval_logderiv_r(Ratio::R3, v[j])?;
        for k in 0..b {
            if k != j {
                let s = psi(v[k] - v[j], cv) + psi(v[j] - v[k], cv);
                diag += s;
                th[(a + j, a + k)] = -s;
            }
        }
        for l in 0..a {
            let p = psi(v[j] - u[l], cv);
            diag -= p;
            th[(a + j, l)] = p;
        }
        th[(a + j, a + j)] = diag;
    }
    Ok(th)
}

fn check_kernel_args(u: &[C64], v: &[C64], c: Coupling) -> Result<()> {
    let eps = c.pole_eps();
    let cv = c.value();
    let bad = |x: C64, y: C64, what: &str| -> Result<()> {
        let d = x - y;
        if d.norm() < eps || (d + cv).norm() < eps || (d - cv).norm() < eps {
            Err(Error::pole(what.to_string(), x, y))
        } else {
            Ok(())
        }
    };
    for j in 0..u.len() {
        for k in 0..j {
            bad(u[j], u[k], "θ: u_j - u_k")?;
        }
        for &vm in v {
            bad(vm, u[j], "θ: v_m - u_j")?;
        }
    }
    for j in 0..v.len() {
        for k in 0..j {
            bad(v[j], v[k], "θ: v_j - v_k")?;
        }
    }
    Ok(())
}

/// A solution of the (twisted) Bethe equations.
#[derive(Debug, Clone)]
pub struct BetheState {
    model: Arc<ModelSpec>,
    u: VarSet,
    v: VarSet,
    twist: Twist,
    modes: Modes,
    residual_norm: f64,
    on_shell: bool,
    pub label: Option<String>,
}

impl BetheState {
    /// Evaluates the residual of given roots with fixed branch integers.
    pub fn with_modes(
        model: Arc<ModelSpec>,
        u: Vec<C64>,
        v: Vec<C64>,
        twist: Twist,
        modes: Modes,
    ) -> Result<Self> {
        let c = model.coupling();
        let u = VarSet::new(u, c)?;
        let v = VarSet::new(v, c)?;
        let r = residual(&model, u.as_slice(), v.as_slice(), &twist, &modes)?;
        let residual_norm = max_abs_vec(&r);
        Ok(BetheState {
            model,
            u,
            v,
            twist,
            modes,
            residual_norm,
            on_shell: residual_norm < ON_SHELL_TOL,
            label: None,
        })
    }

    /// Evaluates the residual with branch integers read off from the roots.
    pub fn from_roots(
        model: Arc<ModelSpec>,
        u: Vec<C64>,
        v: Vec<C64>,
        twist: Twist,
    ) -> Result<Self> {
        let (_, modes) = residual_free(&model, &u, &v, &twist)?;
        Self::with_modes(model, u, v, twist, modes)
    }

    /// Roots accepted as given, bypassing the distinctness check.
    pub fn new_unchecked(
        model: Arc<ModelSpec>,
        u: Vec<C64>,
        v: Vec<C64>,
        twist: Twist,
    ) -> Result<Self> {
        let (r, modes) = residual_free(&model, &u, &v, &twist)?;
        let residual_norm = max_abs_vec(&r);
        Ok(BetheState {
            model,
            u: VarSet::new_unchecked(u),
            v: VarSet::new_unchecked(v),
            twist,
            modes,
            residual_norm,
            on_shell: residual_norm < ON_SHELL_TOL,
            label: None,
        })
    }

    pub fn vacuum(model: Arc<ModelSpec>, twist: Twist) -> Self {
        BetheState {
            model,
            u: VarSet::empty(),
            v: VarSet::empty(),
            twist,
            modes: Modes::default(),
            residual_norm: 0.0,
            on_shell: true,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn model_arc(&self) -> &Arc<ModelSpec> {
        &self.model
    }

    pub fn u(&self) -> &[C64] {
        self.u.as_slice()
    }

    pub fn v(&self) -> &[C64] {
        self.v.as_slice()
    }

    pub fn a(&self) -> usize {
        self.u.len()
    }

    pub fn b(&self) -> usize {
        self.v.len()
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn on_shell(&self) -> bool {
        self.on_shell
    }

    pub fn coupling(&self) -> Coupling {
        self.model.coupling()
    }

    pub fn phi(&self) -> Result<CVector> {
        phi(&self.model, self.u(), self.v())
    }

    pub fn residual(&self) -> Result<CVector> {
        residual(&self.model, self.u(), self.v(), &self.twist, &self.modes)
    }

    pub fn theta(&self) -> Result<CMatrix> {
        jacobian_theta(&self.model, self.u(), self.v())
    }

    /// Multiset equality of root sets within `tol` (relative above 1).
    pub fn same_roots(&self, other: &BetheState, tol: f64) -> bool {
        multiset_eq(self.u(), other.u(), tol) && multiset_eq(self.v(), other.v(), tol)
    }
}

fn multiset_eq(xs: &[C64], ys: &[C64], tol: f64) -> bool {
    if xs.len() != ys.len() {
        return false;
    }
    let mut used = vec![false; ys.len()];
    'outer: for &x in xs {
        for (k, &y) in ys.iter().enumerate() {
            if !used[k] && (x - y).norm() < tol * x.norm().max(1.0) {
                used[k] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Initial guess for Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target max-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub modes: ModeChoice,
    /// Multiset tolerance for merging duplicate solutions.
    pub dedup_tol: f64,
    /// Roots larger than this are rejected as escaping to infinity.
    pub max_root: f64,
    /// Largest Newton step, in units of `|c|`.
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 50,
            max_halvings: 8,
            modes: ModeChoice::Free,
            dedup_tol: 1e-8,
            max_root: 1e6,
            max_step: 0.5,
        }
    }
}

/// A converged solution that failed admissibility.
#[derive(Debug, Clone)]
pub struct Rejected {
    pub seed_index: usize,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub reason: String,
}

/// A seed whose iteration did not converge.
#[derive(Debug, Clone)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub error: Error,
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub states: Vec<BetheState>,
    pub rejected: Vec<Rejected>,
    pub failures: Vec<SeedFailure>,
}

struct Converged {
    u: Vec<C64>,
    v: Vec<C64>,
    modes: Modes,
    residual: f64,
}

fn newton(
    model: &ModelSpec,
    a: usize,
    x0: &[C64],
    twist: &Twist,
    choice: &ModeChoice,
    opts: &SolverOptions,
) -> Result<Converged> {
    let eval = |x: &[C64]| -> Result<(CVector, Modes)> {
        residual_for(model, &x[..a], &x[a..], twist, choice)
    };
    let mut x = x0.to_vec();
    let (mut r, mut modes) = eval(&x)?;
    let mut norm = max_abs_vec(&r);
    let mut iter = 0;
    let mut polish = 0;
    while iter < opts.max_iter {
        if norm < opts.tol {
            // a couple of extra steps push the residual to rounding level
            if polish >= 2 {
                break;
            }
            polish += 1;
        }
        iter += 1;
        let th = jacobian_theta(model, &x[..a], &x[a..])?;
        let dx = lin_solve(&th, &(-&r)).ok_or(Error::SingularJacobian)?;
        // cap the step length; the residual decays towards infinite roots
        let scale = model.coupling().value().norm();
        let len = max_abs_vec(&dx);
        let mut step = if len > opts.max_step * scale {
            opts.max_step * scale / len
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<C64> = x
                .iter()
                .zip(dx.iter())
                .map(|(xi, d)| xi + d * step)
                .collect();
            if let Ok((rt, mt)) = eval(&trial) {
                let nt = max_abs_vec(&rt);
                if nt.is_finite() && (nt < norm || (norm < opts.tol && nt <= opts.tol)) {
                    x = trial;
                    r = rt;
                    modes = mt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if norm < opts.tol {
                break;
            }
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: norm,
            });
        }
    }
    if norm >= opts.tol {
        return Err(Error::NoConvergence {
            iterations: iter,
            residual: norm,
        });
    }
    Ok(Converged {
        u: x[..a].to_vec(),
        v: x[a..].to_vec(),
        modes,
        residual: norm,
    })
}

/// Reason a converged root set is unusable downstream, if any.
pub fn admissibility(model: &ModelSpec, u: &[C64], v: &[C64], max_root: f64) -> Option<String> {
    let c = model.coupling();
    let (de, pe) = (c.dist_eps(), c.pole_eps().max(c.dist_eps()));
    let cv = c.value();
    if let Some(x) = u
        .iter()
        .chain(v)
        .find(|x| !x.is_finite() || x.norm() > max_root)
    {
        return Some(format!("root {x} beyond {max_root:e}"));
    }
    for set in [u, v] {
        for j in 0..set.len() {
            for k in 0..j {
                if (set[j] - set[k]).norm() < de {
                    return Some(format!("coincident roots {} and {}", set[k], set[j]));
                }
            }
        }
    }
    for &vm in v {
        for &uj in u {
            let d = vm - uj;
            if d.norm() < pe || (d + cv).norm() < pe {
                return Some(format!("f(v, u) singular or zero at v = {vm}, u = {uj}"));
            }
        }
    }
    for &uj in u {
        match model.eval_r(Ratio::R1, uj) {
            Ok(r) if r.norm() > 0.0 && r.is_finite() => {}
            _ => return Some(format!("r1 singular or zero at u = {uj}")),
        }
    }
    for &vj in v {
        match model.eval_r(Ratio::R3, vj) {
            Ok(r) if r.norm() > 0.0 && r.is_finite() => {}
            _ => return Some(format!("r3 singular or zero at v = {vj}")),
        }
    }
    None
}

/// Complex Gaussian seeds of width `|c|` around the mean inhomogeneity.
pub fn random_seeds(
    model: &ModelSpec,
    a: usize,
    b: usize,
    count: usize,
    rng_seed: u64,
) -> Vec<Seed> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let center = match model.chain() {
        Some(ch) => ch.xi().iter().sum::<C64>() / ch.len() as f64,
        None => C64::new(0.0, 0.0),
    };
    let scale = model.coupling().value().norm();
    let mut draw = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        center + C64::new(re, im) * scale
    };
    (0..count)
        .map(|_| Seed {
            u: (0..a).map(|_| draw()).collect(),
            v: (0..b).map(|_| draw()).collect(),
        })
        .collect()
}

/// Runs Newton iteration from every seed and collects distinct admissible
/// solutions, in seed order.
pub fn solve(
    model: Arc<ModelSpec>,
    a: usize,
    b: usize,
    twist: Twist,
    seeds: &[Seed],
    opts: &SolverOptions,
) -> SolveReport {
    let mut report = SolveReport::default();
    if a == 0 && b == 0 {
        report.states.push(BetheState::vacuum(model, twist));
        return report;
    }
    let outcomes: Vec<(usize, Result<Converged>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            if seed.u.len() != a || seed.v.len() != b {
                return (
                    i,
                    Err(Error::SizeMismatch {
                        what: "seed sizes vs sector",
                        left: seed.u.len() + seed.v.len(),
                        right: a + b,
                    }),
                );
            }
            let x0: Vec<C64> = seed.u.iter().chain(&seed.v).copied().collect();
            (i, newton(&model, a, &x0, &twist, &opts.modes, opts))
        })
        .collect();
    for (seed_index, out) in outcomes {
        match out {
            Err(error) => report.failures.push(SeedFailure { seed_index, error }),
            Ok(conv) => {
                if let Some(reason) = admissibility(&model, &conv.u, &conv.v, opts.max_root) {
                    report.rejected.push(Rejected {
                        seed_index,
                        u: conv.u,
                        v: conv.v,
                        reason,
                    });
                    continue;
                }
                let state = BetheState {
                    model: model.clone(),
                    u: VarSet::new_unchecked(conv.u),
                    v: VarSet::new_unchecked(conv.v),
                    twist,
                    modes: conv.modes,
                    residual_norm: conv.residual,
                    on_shell: conv.residual < ON_SHELL_TOL,
                    label: None,
                };
                if !report
                    .states
                    .iter()
                    .any(|s| s.same_roots(&state, opts.dedup_tol))
                {
                    report.states.push(state);
                }
            }
        }
    }
    report
}

/// Auxiliary twists `(1, e^{z₂}, e^{z₃})` with `z` complex Gaussian of
/// width 0.8, used as homotopy starting points.
pub fn homotopy_twists(count: usize, rng_seed: u64) -> Vec<Twist> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut draw = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        (C64::new(re, im) * 0.8).exp()
    };
    (0..count)
        .map(|_| {
            let (k2, k3) = (draw(), draw());
            Twist::new(C64::new(1.0, 0.0), k2, k3).expect("exponentials are nonzero")
        })
        .collect()
}

/// Solves at `twist`, then also solves at each auxiliary twist and follows
/// every solution back to `twist` in `steps` increments.
///
/// At the identity twist descendant states sit at infinite roots, and random
/// seeds tend to drift there; at a generic twist every state is finite.
/// Paths that fail to come back are dropped.
pub fn solve_with_homotopy(
    model: Arc<ModelSpec>,
    a: usize,
    b: usize,
    twist: Twist,
    seeds: &[Seed],
    opts: &SolverOptions,
    aux: &[Twist],
    steps: usize,
) -> SolveReport {
    let mut report = solve(model.clone(), a, b, twist, seeds, opts);
    for start in aux {
        let side = solve(model.clone(), a, b, *start, seeds, opts);
        let found: Vec<BetheState> = side
            .states
            .par_iter()
            .filter_map(|st| continue_in_twist(st, twist, steps).ok())
            .filter(|st| {
                st.on_shell && admissibility(&model, st.u(), st.v(), opts.max_root).is_none()
            })
            .collect();
        for st in found {
            if !report
                .states
                .iter()
                .any(|s| s.same_roots(&st, opts.dedup_tol))
            {
                report.states.push(st);
            }
        }
    }
    report
}

/// Seeded state search: `seeds` random starts at the target twist plus
/// homotopy from `aux_twists` auxiliary twists.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub seeds: usize,
    pub aux_twists: usize,
    pub steps: usize,
    pub rng_seed: u64,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seeds: 1024,
            aux_twists: 4,
            steps: 20,
            rng_seed: 7,
            solver: SolverOptions::default(),
        }
    }
}

pub fn search(
    model: Arc<ModelSpec>,
    a: usize,
    b: usize,
    twist: Twist,
    opts: &SearchOptions,
) -> SolveReport {
    let seeds = random_seeds(&model, a, b, opts.seeds, opts.rng_seed);
    let aux = homotopy_twists(opts.aux_twists, opts.rng_seed.wrapping_add(4));
    solve_with_homotopy(model, a, b, twist, &seeds, &opts.solver, &aux, opts.steps)
}

/// Refines a state at its own twist with its branch integers held fixed.
pub fn refine(state: &BetheState, opts: &SolverOptions) -> Result<BetheState> {
    let x0: Vec<C64> = state.u().iter().chain(state.v()).copied().collect();
    let choice = ModeChoice::Fixed(state.modes.clone());
    let conv = newton(&state.model, state.a(), &x0, &state.twist, &choice, opts)?;
    Ok(BetheState {
        model: state.model.clone(),
        u: VarSet::new_unchecked(conv.u),
        v: VarSet::new_unchecked(conv.v),
        twist: state.twist,
        modes: conv.modes,
        residual_norm: conv.residual,
        on_shell: conv.residual < ON_SHELL_TOL,
        label: state.label.clone(),
    })
}

/// `d(ū, v̄)/dκ_s` for `s = 1, 2, 3`, from differentiating the logarithmic
/// equations: `θ · dx/dκ_s = (δ_s2/κ₂ - δ_s1/κ₁, δ_s2/κ₂ - δ_s3/κ₃)`.
pub fn root_derivatives_dkappa(state: &BetheState) -> Result<[CVector; 3]> {
    if !state.on_shell {
        return Err(Error::Precondition(
            "root derivatives need an on-shell state".into(),
        ));
    }
    let th = state.theta()?;
    let (a, n) = (state.a(), state.a() + state.b());
    let tw = state.twist;
    let mut out: [CVector; 3] = std::array::from_fn(|_| CVector::zeros(n));
    for s in 1..=3usize {
        let d = |k: usize| {
            if s == k {
                1.0 / tw.kappa(k)
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let rhs = CVector::from_fn(n, |j, _| if j < a { d(2) - d(1) } else { d(2) - d(3) });
        out[s - 1] = lin_solve(&th, &rhs).ok_or(Error::SingularJacobian)?;
    }
    Ok(out)
}

/// Follows a solution from its twist to `target` along a straight line in
/// `κ`, with a tangent predictor and Newton corrector. Starts with `steps` equal increments and halves an increment
/// (at most 12 times in a row) when the corrector fails.
pub fn continue_in_twist(state: &BetheState, target: Twist, steps: usize) -> Result<BetheState> {
    if !state.on_shell {
        return Err(Error::Precondition(
            "continuation needs an on-shell state".into(),
        ));
    }
    if target == state.twist {
        return Ok(state.clone());
    }
    let steps = steps.max(1);
    // branch integers are re-read at every step: the principal logarithms
    // jump when an argument crosses the negative axis
    let opts = SolverOptions {
        modes: ModeChoice::Free,
        max_iter: 30,
        ..SolverOptions::default()
    };
    let start = state.twist;
    let base = 1.0 / steps as f64;
    let min_dt = base / 4096.0;
    let (mut t, mut dt) = (0.0f64, base);
    let mut cur = state.clone();
    let mut taken = 0;
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let next = if t_next >= 1.0 {
            target
        } else {
            start.lerp(&target, t_next)
        };
        let mut x: Vec<C64> = cur.u().iter().chain(cur.v()).copied().collect();
        if let Ok(ds) = root_derivatives_dkappa(&cur) {
            for (s, d) in ds.iter().enumerate() {
                let dk = next.kappa(s + 1) - cur.twist.kappa(s + 1);
                for (xi, di) in x.iter_mut().zip(d.iter()) {
                    *xi += di * dk;
                }
            }
        }
        let attempt =
            newton(&state.model, state.a(), &x, &next, &opts.modes, &opts).and_then(|conv| {
                match admissibility(&state.model, &conv.u, &conv.v, opts.max_root) {
                    Some(reason) => Err(Error::Precondition(reason)),
                    None => Ok(conv),
                }
            });
        match attempt {
            Ok(conv) => {
                taken += 1;
                t = t_next;
                cur = BetheState {
                    model: state.model.clone(),
                    u: VarSet::new_unchecked(conv.u),
                    v: VarSet::new_unchecked(conv.v),
                    twist: next,
                    modes: conv.modes,
                    residual_norm: conv.residual,
                    on_shell: conv.residual < ON_SHELL_TOL,
                    label: state.label.clone(),
                };
                dt = (dt * 1.5).min(base);
            }
            Err(e) => {
                dt *= 0.5;
                if dt < min_dt {
                    return Err(Error::ContinuationFailed {
                        step: taken,
                        steps,
                        reason: format!("stalled at t = {t:.6}: {e}"),
                    });
                }
            }
        }
    }
    Ok(cur)
}

/// `∏ f` evaluated for the multiplicative form of the twisted equations;
/// returns `(lhs, rhs)` pairs per equation.
pub fn multiplicative_check(state: &BetheState) -> Result<Vec<(C64, C64)>> {
    let c = state.coupling();
    let (u, v) = (state.u(), state.v());
    let tw = state.twist;
    let mut out = Vec::with_capacity(u.len() + v.len());
    for j in 0..u.len() {
        let rest = without(u, j);
        let mut rhs = tw.kappa(2) / tw.kappa(1);
        for &x in &rest {
            rhs *= f(u[j], x, c)? / f(x, u[j], c)?;
        }
        for &y in v {
            rhs *= f(y, u[j], c)?;
        }
        out.push((state.model.eval_r(Ratio::R1, u[j])?, rhs));
    }
    for j in 0..v.len() {
        let rest = without(v, j);
        let mut rhs = tw.kappa(2) / tw.kappa(3);
        for &x in &rest {
            rhs *= f(x, v[j], c)? / f(v[j], x, c)?;
        }
        for &y in u {
            rhs *= f(v[j], y, c)?;
        }
        out.push((state.model.eval_r(Ratio::R3, v[j])?, rhs));
    }
    Ok(out)
}
