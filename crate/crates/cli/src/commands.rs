//! Subcommands.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use su3ff::bethe::{
    continue_in_twist, homotopy_twists, random_seeds, solve_with_homotopy, Modes, SolveReport,
};
use su3ff::formfactor::{
    ff_diagonal, ff_local, ff_offdiagonal, norm_squared, roots_disjoint, scalar_product_twisted,
    tau,
};
use su3ff::numeric::rel_err;
use su3ff::psum::{gtilde_residue_at_xi, gtilde_residue_at_xi_plus_c, PartitionSum, SumMode};
use su3ff::{BetheState, Coupling, ModelSpec, Twist, C64};

use crate::config::{ConfigError, Cx, Format, RunConfig};
use crate::records::{
    Check, FfRecord, LemmaRecord, Record, ScalarProductRecord, Sink, StateRecord, SumRuleRecord,
};
use crate::verify::{self, Mutation, VerifyOptions};
use crate::{EXIT_COMPUTATION, EXIT_CONFIG, EXIT_NO_SOLUTION, EXIT_OK};

/// Relative tolerance of the sum rules printed in report footers.
pub const SUM_RULE_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "su3ff",
    version,
    about = "Form factors of diagonal monodromy entries in SU(3) chains"
)]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RNG seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the Bethe equations in the configured sector.
    Solve,
    /// Diagonal form factors of every (or the `--left`) state.
    FfDiag {
        #[command(flatten)]
        sel: Selection,
    },
    /// Off-diagonal form factors between `--left` and `--right`, or all disjoint pairs.
    FfOffdiag {
        #[command(flatten)]
        sel: Selection,
    },
    /// Twisted scalar product; the left state is continued to `task.kappa`.
    ScalarProduct {
        #[command(flatten)]
        sel: Selection,
    },
    /// Form factors of the local projectors on `--site`.
    Local {
        #[command(flatten)]
        sel: Selection,
        /// 1-based site; overrides `task.site`.
        #[arg(long)]
        site: Option<usize>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Criteria to run (repeatable); all by default.
        #[arg(long)]
        only: Vec<usize>,
        /// Inject a defect; the suite is expected to fail.
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
        /// Skip the second pass used for the determinism check.
        #[arg(long)]
        no_rerun: bool,
    },
    /// Partition-sum identities at random points.
    Lemma,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Selection {
    /// JSON-lines state file written by `solve`.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Left state id.
    #[arg(long)]
    pub left: Option<usize>,
    /// Right state id.
    #[arg(long)]
    pub right: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    NoSolution(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::NoSolution(_) => EXIT_NO_SOLUTION,
            Failure::Compute(_) => EXIT_COMPUTATION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::NoSolution(m) => write!(f, "no solution: {m}"),
            Failure::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<su3ff::Error> for Failure {
    fn from(e: su3ff::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("i/o: {e}"))
    }
}

type Outcome = Result<(), Failure>;

/// Parses nothing further; executes `cli` and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("su3ff: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    let cfg = match &cli.config {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    };
    let format = cli
        .format
        .or(cfg.as_ref().map(|c| c.output.format))
        .unwrap_or_default();
    let out_path = cli
        .out
        .clone()
        .or(cfg.as_ref().and_then(|c| c.output.path.clone()));
    let out: Box<dyn Write> = match &out_path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::Config(ConfigError {
                path: "output.path".into(),
                message: format!("{}: {e}", p.display()),
            })
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    };
    let mut sink = Sink::new(format, out);
    let result = match &cli.command {
        Command::Verify {
            only,
            mutate,
            no_rerun,
        } => {
            let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(7);
            cmd_verify(&mut sink, seed, only, *mutate, !no_rerun)
        }
        Command::Lemma => {
            let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(7);
            let n_max = cfg.as_ref().map(|c| c.task.n_max).unwrap_or(4);
            cmd_lemma(&mut sink, seed, n_max)
        }
        other => {
            let mut cfg = cfg.ok_or_else(|| {
                Failure::Config(ConfigError {
                    path: ".".into(),
                    message: "--config is required for this command".into(),
                })
            })?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            match other {
                Command::Solve => cmd_solve(&mut sink, &cfg),
                Command::FfDiag { sel } => cmd_ff_diag(&mut sink, &cfg, sel).map(|_| EXIT_OK),
                Command::FfOffdiag { sel } => cmd_ff_offdiag(&mut sink, &cfg, sel).map(|_| EXIT_OK),
                Command::ScalarProduct { sel } => {
                    cmd_scalar_product(&mut sink, &cfg, sel).map(|_| EXIT_OK)
                }
                Command::Local { sel, site } => {
                    cmd_local(&mut sink, &cfg, sel, *site).map(|_| EXIT_OK)
                }
                Command::Verify { .. } | Command::Lemma => unreachable!(),
            }
        }
    };
    sink.finish()?;
    result
}

fn solve_report(cfg: &RunConfig) -> Result<(Arc<ModelSpec>, SolveReport), Failure> {
    let model = cfg.model()?;
    let twist = cfg.twist()?;
    let opts = cfg.search_options();
    let (a, b) = (cfg.sector.a, cfg.sector.b);
    let mut seeds = cfg.initial_seeds();
    seeds.extend(random_seeds(&model, a, b, opts.seeds, opts.rng_seed));
    let aux = homotopy_twists(opts.aux_twists, opts.rng_seed.wrapping_add(4));
    let rep = solve_with_homotopy(
        model.clone(),
        a,
        b,
        twist,
        &seeds,
        &opts.solver,
        &aux,
        opts.steps,
    );
    Ok((model, rep))
}

fn cmd_solve(sink: &mut Sink, cfg: &RunConfig) -> Result<i32, Failure> {
    let (_, rep) = solve_report(cfg)?;
    for (id, st) in rep.states.iter().enumerate() {
        sink.emit(&Record::State(StateRecord::new(id, st)))?;
    }
    for r in &rep.rejected {
        sink.emit(&Record::Rejected {
            seed_index: r.seed_index,
            reason: r.reason.clone(),
        })?;
    }
    if rep.states.is_empty() {
        return Err(Failure::NoSolution(format!(
            "sector ({}, {}): {} seeds failed, {} rejected",
            cfg.sector.a,
            cfg.sector.b,
            rep.failures.len(),
            rep.rejected.len()
        )));
    }
    Ok(EXIT_OK)
}

/// Reads the state records of a `solve` output, rebuilt against `model`.
pub fn load_states(
    path: &Path,
    model: &Arc<ModelSpec>,
) -> Result<Vec<(usize, BetheState)>, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", n + 1))?;
        if v.get("kind").and_then(|k| k.as_str()) != Some("state") {
            continue;
        }
        let r: StateRecord =
            serde_json::from_value(v).map_err(|e| format!("line {}: {e}", n + 1))?;
        let c = |z: &[Cx]| z.iter().map(|&z| C64::from(z)).collect::<Vec<_>>();
        let tw = c(&r.twist);
        let twist = Twist::new(tw[0], tw[1], tw[2]).map_err(|e| format!("line {}: {e}", n + 1))?;
        let st = BetheState::with_modes(
            model.clone(),
            c(&r.u),
            c(&r.v),
            twist,
            Modes {
                l: r.modes_l,
                m: r.modes_m,
            },
        )
        .map_err(|e| format!("line {}: {e}", n + 1))?
        .with_label(r.id.to_string());
        out.push((r.id, st));
    }
    Ok(out)
}

fn states_for(cfg: &RunConfig, sel: &Selection) -> Result<Vec<(usize, BetheState)>, Failure> {
    let model = cfg.model()?;
    let path = sel.states.clone().or(cfg.task.states.clone());
    let states = match path {
        Some(p) => load_states(&p, &model).map_err(|m| {
            Failure::Config(ConfigError {
                path: "task.states".into(),
                message: m,
            })
        })?,
        None => {
            let (_, rep) = solve_report(cfg)?;
            rep.states
                .into_iter()
                .enumerate()
                .map(|(i, s)| (i, s.with_label(i.to_string())))
                .collect()
        }
    };
    if states.is_empty() {
        return Err(Failure::NoSolution(format!(
            "no states in sector ({}, {})",
            cfg.sector.a, cfg.sector.b
        )));
    }
    Ok(states)
}

fn pick(states: &[(usize, BetheState)], id: usize) -> Result<&BetheState, Failure> {
    states
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, s)| s)
        .ok_or_else(|| Failure::Compute(format!("state {id} not found")))
}

fn z_values(cfg: &RunConfig) -> Vec<C64> {
    cfg.task.z.iter().map(|&z| z.into()).collect()
}

fn full_s(cfg: &RunConfig) -> bool {
    (1..=3).all(|s| cfg.task.s.contains(&s))
}

fn cmd_ff_diag(sink: &mut Sink, cfg: &RunConfig, sel: &Selection) -> Outcome {
    let states = states_for(cfg, sel)?;
    let ids: Vec<usize> = match sel.left.or(cfg.task.left) {
        Some(id) => {
            pick(&states, id)?;
            vec![id]
        }
        None => states.iter().map(|(i, _)| *i).collect(),
    };
    let zs = z_values(cfg);
    let jobs: Vec<(usize, C64, usize)> = ids
        .iter()
        .flat_map(|&id| {
            zs.iter()
                .flat_map(move |&z| cfg.task.s.iter().map(move |&s| (id, z, s)))
        })
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(id, z, s)| {
            ff_diagonal(s, z, pick(&states, id).expect("picked above")).map(|r| (id, r))
        })
        .collect();
    let mut by_key: Vec<(usize, C64, C64)> = Vec::new();
    for r in results {
        let (id, r) = r?;
        sink.emit(&Record::FormFactor(FfRecord::new(
            "ff-diag", id, id, None, &r,
        )))?;
        match by_key.iter_mut().find(|(i, z, _)| *i == id && *z == r.z) {
            Some(e) => e.2 += r.value,
            None => by_key.push((id, r.z, r.value)),
        }
    }
    if full_s(cfg) {
        for (id, z, sum) in by_key {
            let st = pick(&states, id)?;
            let expected =
                tau(st.model(), z, st.u(), st.v(), st.twist())? * norm_squared(st)?.value;
            let e = rel_err(sum, expected);
            sink.emit(&Record::SumRule(SumRuleRecord {
                rule: "sum over s equals eigenvalue times norm",
                left: id,
                right: id,
                z: z.into(),
                sum: sum.into(),
                expected: expected.into(),
                check: Check::below("relative error", e, SUM_RULE_TOL),
            }))?;
        }
    }
    Ok(())
}

fn pair_ids(
    cfg: &RunConfig,
    sel: &Selection,
    states: &[(usize, BetheState)],
) -> Result<Vec<(usize, usize)>, Failure> {
    match (sel.left.or(cfg.task.left), sel.right.or(cfg.task.right)) {
        (Some(l), Some(r)) => {
            pick(states, l)?;
            pick(states, r)?;
            Ok(vec![(l, r)])
        }
        (None, None) => {
            let mut out = Vec::new();
            for (i, c) in states {
                for (j, b) in states {
                    if i != j && roots_disjoint(c, b) {
                        out.push((*i, *j));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Failure::Config(ConfigError {
            path: "task".into(),
            message: "give both left and right state ids, or neither".into(),
        })),
    }
}

fn cmd_ff_offdiag(sink: &mut Sink, cfg: &RunConfig, sel: &Selection) -> Outcome {
    let states = states_for(cfg, sel)?;
    let pairs = pair_ids(cfg, sel, &states)?;
    let zs = z_values(cfg);
    let jobs: Vec<(usize, usize, C64, usize)> = pairs
        .iter()
        .flat_map(|&(l, r)| {
            zs.iter()
                .flat_map(move |&z| cfg.task.s.iter().map(move |&s| (l, r, z, s)))
        })
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(l, r, z, s)| {
            ff_offdiagonal(
                s,
                z,
                pick(&states, l).expect("picked"),
                pick(&states, r).expect("picked"),
            )
            .map(|f| (l, r, f))
        })
        .collect();
    let mut sums: Vec<(usize, usize, C64, C64, f64)> = Vec::new();
    for res in results {
        let (l, r, f) = res?;
        sink.emit(&Record::FormFactor(FfRecord::new(
            "ff-offdiag",
            l,
            r,
            None,
            &f,
        )))?;
        match sums.iter_mut().find(|e| e.0 == l && e.1 == r && e.2 == f.z) {
            Some(e) => {
                e.3 += f.value;
                e.4 = e.4.max(f.value.norm());
            }
            None => sums.push((l, r, f.z, f.value, f.value.norm())),
        }
    }
    if full_s(cfg) {
        for (l, r, z, sum, mag) in sums {
            sink.emit(&Record::SumRule(SumRuleRecord {
                rule: "sum over s vanishes",
                left: l,
                right: r,
                z: z.into(),
                sum: sum.into(),
                expected: C64::new(0.0, 0.0).into(),
                check: Check::below("|sum| / max_s |F_s|", sum.norm() / mag, SUM_RULE_TOL),
            }))?;
        }
    }
    Ok(())
}

fn cmd_scalar_product(sink: &mut Sink, cfg: &RunConfig, sel: &Selection) -> Outcome {
    let states = states_for(cfg, sel)?;
    let pairs = pair_ids(cfg, sel, &states)?;
    let kappa = match cfg.task.kappa {
        Some(k) => Twist::new(k[0].into(), k[1].into(), k[2].into()).map_err(|e| {
            Failure::Config(ConfigError {
                path: "task.kappa".into(),
                message: e.to_string(),
            })
        })?,
        None => Twist::identity(),
    };
    let steps = cfg.solver.continuation_steps.max(1);
    for (l, r) in pairs {
        let c = continue_in_twist(pick(&states, l)?, kappa, steps)?;
        let sp = scalar_product_twisted(&c, pick(&states, r)?, &kappa)?;
        let k = kappa.as_array();
        sink.emit(&Record::ScalarProduct(ScalarProductRecord {
            left: l,
            right: r,
            kappa: [k[0].into(), k[1].into(), k[2].into()],
            value: sp.value.into(),
            cond: sp.cond,
            scale: sp.scale,
            log_twist_ratio: sp.log_twist_ratio.into(),
        }))?;
    }
    Ok(())
}

fn cmd_local(sink: &mut Sink, cfg: &RunConfig, sel: &Selection, site: Option<usize>) -> Outcome {
    let states = states_for(cfg, sel)?;
    let site = site.or(cfg.task.site).ok_or_else(|| {
        Failure::Config(ConfigError {
            path: "task.site".into(),
            message: "a site is required".into(),
        })
    })?;
    let pairs: Vec<(usize, usize)> =
        match (sel.left.or(cfg.task.left), sel.right.or(cfg.task.right)) {
            (Some(l), r) => vec![(l, r.unwrap_or(l))],
            (None, _) => states.iter().map(|(i, _)| (*i, *i)).collect(),
        };
    for (l, r) in pairs {
        let (c, b) = (pick(&states, l)?, pick(&states, r)?);
        let mut sum = C64::new(0.0, 0.0);
        for &s in &cfg.task.s {
            let f = ff_local(s, site, c, b)?;
            sum += f.value;
            sink.emit(&Record::FormFactor(FfRecord::new(
                "local",
                l,
                r,
                Some(site),
                &f,
            )))?;
        }
        if full_s(cfg) {
            let (expected, check) = if l == r {
                let n = norm_squared(c)?.value;
                (
                    n,
                    Check::below("relative error", rel_err(sum, n), SUM_RULE_TOL),
                )
            } else {
                (
                    C64::new(0.0, 0.0),
                    Check::below("|sum|", sum.norm(), SUM_RULE_TOL),
                )
            };
            sink.emit(&Record::SumRule(SumRuleRecord {
                rule: "projectors sum to the identity",
                left: l,
                right: r,
                z: C64::new(0.0, 0.0).into(),
                sum: sum.into(),
                expected: expected.into(),
                check,
            }))?;
        }
    }
    Ok(())
}

fn cmd_verify(
    sink: &mut Sink,
    seed: u64,
    only: &[usize],
    mutation: Option<Mutation>,
    rerun: bool,
) -> Result<i32, Failure> {
    if let Some(&bad) = only.iter().find(|&&id| !(1..=9).contains(&id)) {
        return Err(Failure::Config(ConfigError {
            path: "--only".into(),
            message: format!("no criterion {bad}"),
        }));
    }
    let opts = VerifyOptions {
        seed,
        only: only.to_vec(),
        mutation,
        determinism_rerun: rerun,
    };
    let start = std::time::Instant::now();
    let mut io_err = None;
    let records = verify::run(&opts, |r| {
        if io_err.is_none() {
            io_err = sink.emit(&Record::Criterion(r.clone())).err();
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let failed: Vec<usize> = records.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let passed = failed.is_empty();
    sink.emit(&Record::Summary {
        passed,
        total: records.len(),
        failed,
        elapsed_s: start.elapsed().as_secs_f64(),
    })?;
    Ok(if passed { EXIT_OK } else { EXIT_COMPUTATION })
}

fn cmd_lemma(sink: &mut Sink, seed: u64, n_max: usize) -> Result<i32, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Coupling::unit();
    let mut point = |w: f64| C64::new(rng.random_range(-w..w), rng.random_range(-w..w));
    let one = C64::new(1.0, 0.0);
    let mut all = true;
    for n in 1..=n_max {
        let xi: Vec<C64> = (0..n).map(|_| point(0.3)).collect();
        let eta: Vec<C64> = (0..n).map(|_| point(0.3)).collect();
        let gamma = point(1.0);
        let ps = PartitionSum::new(&xi, &eta, c)?;
        let mut emit =
            |identity: &'static str, value: C64, expected: C64, tol: f64| -> std::io::Result<()> {
                let check = Check::below("relative error", rel_err(value, expected), tol);
                all &= check.passed;
                sink.emit(&Record::Lemma(LemmaRecord {
                    identity,
                    n,
                    value: value.into(),
                    expected: expected.into(),
                    check,
                }))
            };
        emit(
            "partition sum at unit twist",
            ps.brute(one)?,
            ps.closed_at_one()?,
            1e-10,
        )?;
        emit(
            "derivative partition sum",
            ps.gtilde(gamma, SumMode::Brute)?,
            ps.gtilde(gamma, SumMode::Closed)?,
            1e-10,
        )?;
        let r1 = gtilde_residue_at_xi(&xi, &eta, gamma, c, [1e-4, 1e-5])?;
        emit("residue at eta = xi", r1.extrapolated, r1.expected, 1e-6)?;
        let r2 = gtilde_residue_at_xi_plus_c(&xi, &eta, gamma, c, [1e-4, 1e-5])?;
        emit(
            "residue at eta = xi + c",
            r2.extrapolated,
            r2.expected,
            1e-6,
        )?;
    }
    Ok(if all { EXIT_OK } else { EXIT_COMPUTATION })
}
