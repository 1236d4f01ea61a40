//! Run configuration: JSON, complex numbers as `[re, im]`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use su3ff::bethe::{ModeChoice, Modes, SearchOptions, SolverOptions};
use su3ff::model::{GenericRational, RationalFn, SiteRep};
use su3ff::{Coupling, ModelSpec, Twist, XxxChain, C64};

/// A complex number as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub [f64; 2]);

impl From<Cx> for C64 {
    fn from(z: Cx) -> C64 {
        C64::new(z.0[0], z.0[1])
    }
}

impl From<C64> for Cx {
    fn from(z: C64) -> Cx {
        Cx([z.re, z.im])
    }
}

pub fn cxs(zs: &[C64]) -> Vec<Cx> {
    zs.iter().map(|&z| z.into()).collect()
}

fn c64s(zs: &[Cx]) -> Vec<C64> {
    zs.iter().map(|&z| z.into()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Location inside the document, `.` for the root.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at {}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rep {
    F,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalConfig {
    #[serde(default = "one")]
    pub scale: Cx,
    #[serde(default)]
    pub zeros: Vec<Cx>,
    #[serde(default)]
    pub poles: Vec<Cx>,
}

fn one() -> Cx {
    Cx([1.0, 0.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Chain {
        xi: Vec<Cx>,
        c: Cx,
        /// Site representations; all fundamental when absent.
        #[serde(default)]
        reps: Option<Vec<Rep>>,
    },
    Generic {
        c: Cx,
        r1: RationalConfig,
        r3: RationalConfig,
        #[serde(default)]
        lambda2: Option<RationalConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sector {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModesConfig {
    Free,
    Fixed { l: Vec<i64>, m: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub u: Vec<Cx>,
    pub v: Vec<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub seeds: usize,
    pub aux_twists: usize,
    pub continuation_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub dedup_tol: f64,
    pub max_step: f64,
    pub max_root: f64,
    pub modes: ModesConfig,
    /// Explicit starting points, tried before the random ones.
    pub initial: Vec<SeedConfig>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        let q = SearchOptions::default();
        SolverConfig {
            seeds: q.seeds,
            aux_twists: q.aux_twists,
            continuation_steps: q.steps,
            tol: s.tol,
            max_iter: s.max_iter,
            dedup_tol: s.dedup_tol,
            max_step: s.max_step,
            max_root: s.max_root,
            modes: ModesConfig::Free,
            initial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    /// JSON-lines file written by `solve`; states are solved afresh when absent.
    pub states: Option<PathBuf>,
    pub s: Vec<usize>,
    pub z: Vec<Cx>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// Site for `local`, 1-based.
    pub site: Option<usize>,
    /// Twist for `scalar-product`; the left state is continued to it.
    pub kappa: Option<[Cx; 3]>,
    /// Largest `n` for `lemma`.
    pub n_max: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            states: None,
            s: vec![1, 2, 3],
            z: vec![Cx([0.29, -0.17])],
            left: None,
            right: None,
            site: None,
            kappa: None,
            n_max: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub sector: Sector,
    #[serde(default)]
    pub twist: Option<[Cx; 3]>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    7
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            bad(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(".", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks beyond the shape of the document.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.solver;
        for (name, v) in [
            ("solver.tol", s.tol),
            ("solver.dedup_tol", s.dedup_tol),
            ("solver.max_step", s.max_step),
            ("solver.max_root", s.max_root),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, format!("must be positive, got {v}")));
            }
        }
        if self.task.n_max > su3ff::psum::DEFAULT_MAX_N {
            return Err(bad(
                "task.n_max",
                format!("at most {}", su3ff::psum::DEFAULT_MAX_N),
            ));
        }
        if s.max_iter == 0 {
            return Err(bad("solver.max_iter", "must be positive"));
        }
        if let Some(i) = self.task.s.iter().position(|s| !(1..=3).contains(s)) {
            return Err(bad(
                &format!("task.s[{i}]"),
                "operator index must be 1, 2 or 3",
            ));
        }
        if let ModesConfig::Fixed { l, m } = &s.modes {
            if l.len() != self.sector.a || m.len() != self.sector.b {
                return Err(bad(
                    "solver.modes",
                    "branch integers must match the sector sizes",
                ));
            }
        }
        for (i, seed) in s.initial.iter().enumerate() {
            if seed.u.len() != self.sector.a || seed.v.len() != self.sector.b {
                return Err(bad(
                    &format!("solver.initial[{i}]"),
                    "seed sizes must match the sector",
                ));
            }
        }
        if let ModelConfig::Chain {
            xi, reps: Some(r), ..
        } = &self.model
        {
            if r.len() != xi.len() {
                return Err(bad("model.chain.reps", "one representation per site"));
            }
        }
        self.model()?;
        self.twist()?;
        Ok(())
    }

    pub fn model(&self) -> Result<Arc<ModelSpec>, ConfigError> {
        let coupling =
            |c: Cx, path: &str| Coupling::new(c.into()).map_err(|e| bad(path, e.to_string()));
        let spec: ModelSpec = match &self.model {
            ModelConfig::Chain { xi, c, reps } => {
                let c = coupling(*c, "model.chain.c")?;
                let reps: Vec<SiteRep> = match reps {
                    Some(r) => r
                        .iter()
                        .map(|r| match r {
                            Rep::F => SiteRep::Fundamental,
                            Rep::C => SiteRep::Conjugate,
                        })
                        .collect(),
                    None => vec![SiteRep::Fundamental; xi.len()],
                };
                XxxChain::with_reps(c64s(xi), reps, c)
                    .map_err(|e| bad("model.chain", e.to_string()))?
                    .into()
            }
            ModelConfig::Generic { c, r1, r3, lambda2 } => {
                let c = coupling(*c, "model.generic.c")?;
                let rat = |r: &RationalConfig, path: &str| {
                    RationalFn::new(r.scale.into(), c64s(&r.zeros), c64s(&r.poles))
                        .map_err(|e| bad(path, e.to_string()))
                };
                GenericRational {
                    r1: rat(r1, "model.generic.r1")?,
                    r3: rat(r3, "model.generic.r3")?,
                    lambda2: match lambda2 {
                        Some(l) => rat(l, "model.generic.lambda2")?,
                        None => RationalFn::one(),
                    },
                    c,
                }
                .into()
            }
        };
        Ok(Arc::new(spec))
    }

    pub fn twist(&self) -> Result<Twist, ConfigError> {
        match self.twist {
            None => Ok(Twist::identity()),
            Some(k) => Twist::new(k[0].into(), k[1].into(), k[2].into())
                .map_err(|e| bad("twist", e.to_string())),
        }
    }

    pub fn search_options(&self) -> SearchOptions {
        let s = &self.solver;
        SearchOptions {
            seeds: s.seeds,
            aux_twists: s.aux_twists,
            steps: s.continuation_steps,
            rng_seed: self.seed,
            solver: SolverOptions {
                tol: s.tol,
                max_iter: s.max_iter,
                dedup_tol: s.dedup_tol,
                max_step: s.max_step,
                max_root: s.max_root,
                modes: match &s.modes {
                    ModesConfig::Free => ModeChoice::Free,
                    ModesConfig::Fixed { l, m } => ModeChoice::Fixed(Modes {
                        l: l.clone(),
                        m: m.clone(),
                    }),
                },
                ..SolverOptions::default()
            },
        }
    }

    pub fn initial_seeds(&self) -> Vec<su3ff::bethe::Seed> {
        self.solver
            .initial
            .iter()
            .map(|s| su3ff::bethe::Seed {
                u: c64s(&s.u),
                v: c64s(&s.v),
            })
            .collect()
    }
}
