//! Experiment configuration: a TOML file plus command line overrides.
//!
//! ```toml
//! seed = 0
//! preconditioner = ["none", "jacobi"]
//! variants = ["HS", "PR", "PPR", "PR-norecnu"]
//! output_dir = "out"
//!
//! [problem.model]
//! n = 48
//! rho = 0.8
//! kappa = 1e3
//!
//! [stop]
//! rule = "stagnation"
//! window = 50
//! min_improvement = 0.01
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};
use thiserror::Error;

use pipecg_core::{ModelProblemSpec, StopRule, VariantConfig, VariantId};

use crate::catalog::{lookup, MODEL_HS_ITERS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {detail}")]
    Read { path: PathBuf, detail: String },
    #[error("invalid config: {0}")]
    Toml(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSource {
    /// A catalogued Matrix Market name, fetched through the cache.
    Matrix(String),
    /// A local Matrix Market file.
    Path(PathBuf),
    Model(ModelConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model_n")]
    pub n: usize,
    #[serde(default = "default_model_rho")]
    pub rho: f64,
    #[serde(default = "default_model_kappa")]
    pub kappa: f64,
    /// Eigenvector seed; the experiment seed when absent.
    pub seed: Option<u64>,
}

fn default_model_n() -> usize {
    48
}
fn default_model_rho() -> f64 {
    0.8
}
fn default_model_kappa() -> f64 {
    1e3
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { n: default_model_n(), rho: default_model_rho(), kappa: default_model_kappa(), seed: None }
    }
}

impl ModelConfig {
    pub fn spec(&self, seed: u64) -> ModelProblemSpec {
        ModelProblemSpec { n: self.n, rho: self.rho, kappa: self.kappa, seed: self.seed.unwrap_or(seed) }
    }

    fn is_default_shape(&self) -> bool {
        self.n == 48 && self.rho == 0.8 && self.kappa == 1e3
    }
}

impl ProblemSource {
    pub fn name(&self, seed: u64) -> String {
        match self {
            Self::Matrix(name) => name.clone(),
            Self::Path(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "matrix".into()),
            Self::Model(m) => m.spec(seed).name(),
        }
    }
}

impl FromStr for ProblemSource {
    type Err = ConfigError;

    /// `model`, `model_<n>_<rho*10>_<log10 kappa>`, `model:<n>:<rho>:<kappa>`,
    /// a path (anything with a separator or `.mtx` suffix) or a catalogue name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::Invalid(format!("cannot parse problem `{s}`"));
        if s == "model" {
            return Ok(Self::Model(ModelConfig::default()));
        }
        if let Some(rest) = s.strip_prefix("model_") {
            let parts: Vec<&str> = rest.split('_').collect();
            let [n, r, k] = parts[..] else { return Err(bad()) };
            let n: usize = n.parse().map_err(|_| bad())?;
            let r: f64 = r.parse().map_err(|_| bad())?;
            let k: f64 = k.parse().map_err(|_| bad())?;
            return Ok(Self::Model(ModelConfig { n, rho: r / 10.0, kappa: 10f64.powf(k), seed: None }));
        }
        if let Some(rest) = s.strip_prefix("model:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [n, r, k] = parts[..] else { return Err(bad()) };
            return Ok(Self::Model(ModelConfig {
                n: n.parse().map_err(|_| bad())?,
                rho: r.parse().map_err(|_| bad())?,
                kappa: k.parse().map_err(|_| bad())?,
                seed: None,
            }));
        }
        if s.contains('/') || s.contains('\\') || s.ends_with(".mtx") {
            return Ok(Self::Path(PathBuf::from(s)));
        }
        if s.is_empty() {
            return Err(bad());
        }
        Ok(Self::Matrix(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    None,
    Jacobi,
}

impl PrecondKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Jacobi => "jacobi",
        }
    }
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecondKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "-" | "identity" => Ok(Self::None),
            "jacobi" | "jac" | "jac." => Ok(Self::Jacobi),
            _ => Err(ConfigError::Invalid(format!("unknown preconditioner `{s}` (none, jacobi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StopConfig {
    /// Until the true residual stops improving.
    Stagnation {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_min_improvement")]
        min_improvement: f64,
    },
    ErrorReduction {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    MaxIter,
    Fixed {
        iterations: usize,
    },
}

fn default_window() -> usize {
    50
}
fn default_min_improvement() -> f64 {
    0.01
}
fn default_threshold() -> f64 {
    1e-5
}

impl Default for StopConfig {
    fn default() -> Self {
        Self::Stagnation { window: default_window(), min_improvement: default_min_improvement() }
    }
}

impl StopConfig {
    pub fn rule(self) -> StopRule {
        match self {
            Self::Stagnation { window, min_improvement } => StopRule::Stagnation { window, min_improvement },
            Self::ErrorReduction { threshold } => StopRule::ErrorReduction(threshold),
            Self::MaxIter => StopRule::MaxIterations,
            Self::Fixed { iterations } => StopRule::FixedIterations(iterations),
        }
    }
}

impl FromStr for StopConfig {
    type Err = ConfigError;

    /// `stagnation[:window[:min_improvement]]`, `error-reduction[:threshold]`,
    /// `max-iter`, `fixed:<iterations>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::Invalid(format!("cannot parse stop rule `{s}`"));
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<Option<f64>, ConfigError> {
            args.get(i).map(|a| a.parse::<f64>().map_err(|_| bad())).transpose()
        };
        let out = match head {
            "stagnation" => Self::Stagnation {
                window: args.first().map(|a| a.parse().map_err(|_| bad())).transpose()?.unwrap_or(default_window()),
                min_improvement: num(1)?.unwrap_or(default_min_improvement()),
            },
            "error-reduction" => Self::ErrorReduction { threshold: num(0)?.unwrap_or(default_threshold()) },
            "max-iter" => Self::MaxIter,
            "fixed" => Self::Fixed { iterations: args.first().ok_or_else(bad)?.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsRule {
    /// `x*` with every entry `1/√n`, `b = A x*`.
    #[default]
    InvSqrtN,
    /// `x*` standard normal from the experiment seed, `b = A x*`.
    Random,
}

impl FromStr for RhsRule {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inv-sqrt-n" => Ok(Self::InvSqrtN),
            "random" => Ok(Self::Random),
            _ => Err(ConfigError::Invalid(format!("unknown rhs rule `{s}` (inv-sqrt-n, random)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default = "default_preconditioners", alias = "preconditioner", deserialize_with = "one_or_many")]
    pub preconditioners: Vec<PrecondKind>,
    #[serde(default = "default_variants", deserialize_with = "variant_list")]
    pub variants: Vec<VariantConfig>,
    /// Defaults to four times the reference HS iteration count when one is
    /// known for the problem, else `10 n`.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub stop: StopConfig,
    /// Record every `cadence`-th iterate under the fixed and max-iter rules.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub rhs: RhsRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub offline: bool,
}

fn default_preconditioners() -> Vec<PrecondKind> {
    vec![PrecondKind::None]
}
fn default_variants() -> Vec<VariantConfig> {
    VariantId::ALL.iter().map(|&id| VariantConfig::new(id)).collect()
}
fn default_cadence() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PrecondKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(PrecondKind),
        Many(Vec<PrecondKind>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

fn variant_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<VariantConfig>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    names.iter().map(|s| s.parse::<VariantConfig>().map_err(serde::de::Error::custom)).collect()
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSource) -> Self {
        Self {
            problem,
            preconditioners: default_preconditioners(),
            variants: default_variants(),
            max_iter: None,
            stop: StopConfig::default(),
            cadence: default_cadence(),
            rhs: RhsRule::default(),
            seed: 0,
            output_dir: default_output_dir(),
            cache_dir: None,
            base_url: None,
            offline: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), detail: e.to_string() })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.variants.is_empty() {
            return Err(ConfigError::Invalid("no variants requested".into()));
        }
        if self.preconditioners.is_empty() {
            return Err(ConfigError::Invalid("no preconditioner requested".into()));
        }
        if self.cadence == 0 {
            return Err(ConfigError::Invalid("cadence must be at least 1".into()));
        }
        let mut labels: Vec<String> = self.variants.iter().map(VariantConfig::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid(format!("variant `{}` listed twice", w[0])));
        }
        match self.stop {
            StopConfig::Stagnation { window, min_improvement } => {
                if window == 0 || !(0.0..1.0).contains(&min_improvement) {
                    return Err(ConfigError::Invalid(
                        "stagnation needs window >= 1 and 0 <= min_improvement < 1".into(),
                    ));
                }
            }
            StopConfig::ErrorReduction { threshold } if threshold.is_nan() || threshold <= 0.0 => {
                return Err(ConfigError::Invalid("error-reduction threshold must be positive".into()));
            }
            _ => {}
        }
        if let ProblemSource::Model(m) = &self.problem {
            m.spec(self.seed).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn problem_name(&self) -> String {
        self.problem.name(self.seed)
    }

    /// Iteration budget for a problem of dimension `n`.
    pub fn max_iter_for(&self, precond: PrecondKind, n: usize) -> usize {
        if let Some(m) = self.max_iter {
            return m;
        }
        let jacobi = precond == PrecondKind::Jacobi;
        let reference = match &self.problem {
            ProblemSource::Matrix(name) => lookup(name).and_then(|e| e.hs_iterations(jacobi)),
            ProblemSource::Model(m) if m.is_default_shape() => {
                Some(if jacobi { MODEL_HS_ITERS.1 } else { MODEL_HS_ITERS.0 })
            }
            _ => None,
        };
        reference.map_or(10 * n, |k| 4 * k)
    }
}

/// Command line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<ProblemSource>,
    pub preconditioners: Option<Vec<PrecondKind>>,
    pub variants: Option<Vec<VariantConfig>>,
    pub max_iter: Option<usize>,
    pub stop: Option<StopConfig>,
    pub cadence: Option<usize>,
    pub rhs: Option<RhsRule>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub base_url: Option<String>,
    pub offline: bool,
}

impl Overrides {
    /// Builds a config from an optional base and these overrides.
    pub fn resolve(self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match (base, self.problem.clone()) {
            (Some(cfg), _) => cfg,
            (None, Some(p)) => ExperimentConfig::new(p),
            (None, None) => return Err(ConfigError::Invalid("no problem given (use --config or --problem)".into())),
        };
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if let Some(p) = self.preconditioners {
            cfg.preconditioners = p;
        }
        if let Some(v) = self.variants {
            cfg.variants = v;
        }
        if self.max_iter.is_some() {
            cfg.max_iter = self.max_iter;
        }
        if let Some(s) = self.stop {
            cfg.stop = s;
        }
        if let Some(c) = self.cadence {
            cfg.cadence = c;
        }
        if let Some(r) = self.rhs {
            cfg.rhs = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.output_dir {
            cfg.output_dir = o;
        }
        if self.cache_dir.is_some() {
            cfg.cache_dir = self.cache_dir;
        }
        if self.base_url.is_some() {
            cfg.base_url = self.base_url;
        }
        cfg.offline |= self.offline;
        cfg.validate()?;
        Ok(cfg)
    }
}
