//! Experiment configuration, read from TOML and overridable from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use stosched::dfl::TrainConfig;
use stosched::repair::PenaltyCoefficient;
use stosched::saa::SaaConfig;
use stosched::SolveBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Deterministic,
    Saa,
    Dfl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Deterministic, Method::Saa, Method::Dfl];

    pub fn name(self) -> &'static str {
        match self {
            Method::Deterministic => "deterministic",
            Method::Saa => "saa",
            Method::Dfl => "dfl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deterministic" | "det" => Ok(Method::Deterministic),
            "saa" => Ok(Method::Saa),
            "dfl" => Ok(Method::Dfl),
            other => bail!("unknown method `{other}` (expected deterministic, saa or dfl)"),
        }
    }
}

/// `small` is `1 / number of tasks`, `large` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySetting {
    Small,
    Large,
    Custom(f64),
}

impl PenaltySetting {
    pub fn rho(self, task_count: usize) -> Result<PenaltyCoefficient<f64>> {
        let value = match self {
            PenaltySetting::Small => 1.0 / task_count.max(1) as f64,
            PenaltySetting::Large => 1.0,
            PenaltySetting::Custom(r) => r,
        };
        Ok(PenaltyCoefficient::new(value)?)
    }
}

impl fmt::Display for PenaltySetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltySetting::Small => f.write_str("small"),
            PenaltySetting::Large => f.write_str("large"),
            PenaltySetting::Custom(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for PenaltySetting {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(PenaltySetting::Small),
            "large" => Ok(PenaltySetting::Large),
            other => {
                let r: f64 = other.parse().with_context(|| {
                    format!("penalty must be small, large or a number, got `{s}`")
                })?;
                if !(r.is_finite() && r >= 0.0) {
                    bail!("penalty must be finite and >= 0, got {r}");
                }
                Ok(PenaltySetting::Custom(r))
            }
        }
    }
}

impl Serialize for PenaltySetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PenaltySetting::Custom(r) => s.serialize_f64(*r),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for PenaltySetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(r) => PenaltySetting::from_str(&r.to_string()),
            Raw::Text(s) => PenaltySetting::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let (train, validation, test) = stosched::scenario::DEFAULT_SIZES;
        Self {
            train,
            validation,
            test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub node_limit: u64,
    /// Seconds per solve.
    pub time_limit: f64,
    pub exact_threshold: usize,
    pub heuristic_evals: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let b = SolveBudget::default();
        Self {
            node_limit: b.node_limit,
            time_limit: b.time_limit.as_secs_f64(),
            exact_threshold: b.exact_threshold,
            heuristic_evals: b.heuristic_evals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaaSection {
    /// Training scenarios handed to the program.
    pub scenarios: usize,
    pub max_evaluations: u64,
    pub random_candidates: usize,
    pub average_penalty: bool,
}

impl Default for SaaSection {
    fn default() -> Self {
        let c = SaaConfig::<f64>::default();
        Self {
            scenarios: stosched::saa::DEFAULT_SAA_SCENARIOS,
            max_evaluations: c.max_evaluations,
            random_candidates: c.random_candidates,
            average_penalty: c.average_penalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DflSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub samples_per_step: usize,
    pub baseline: bool,
    pub theta_max: f64,
}

impl Default for DflSection {
    fn default() -> Self {
        let c = TrainConfig::<f64>::default();
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            samples_per_step: c.samples_per_step,
            baseline: c.baseline,
            theta_max: c.theta_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name of the instance set, used to group summary rows.
    pub name: String,
    /// Paths, glob patterns, or `toy`. Relative entries resolve against the
    /// config file's directory.
    pub instances: Vec<String>,
    pub methods: Vec<Method>,
    pub penalty: PenaltySetting,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub dataset: DatasetConfig,
    pub solver: SolverConfig,
    pub saa: SaaSection,
    pub dfl: DflSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            instances: Vec::new(),
            methods: Method::ALL.to_vec(),
            penalty: PenaltySetting::Small,
            seed: 0,
            out: PathBuf::from("results"),
            workers: 1,
            dataset: DatasetConfig::default(),
            solver: SolverConfig::default(),
            saa: SaaSection::default(),
            dfl: DflSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid configuration")
    }

    /// Read a config file; relative instance paths and `out` are taken
    /// relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config =
            Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(dir) = path.parent() {
            for entry in &mut config.instances {
                if entry != crate::instances::TOY && Path::new(entry.as_str()).is_relative() {
                    *entry = dir.join(&*entry).to_string_lossy().into_owned();
                }
            }
            if config.out.is_relative() {
                config.out = dir.join(&config.out);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            bail!("at least one instance is required");
        }
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            bail!("methods are listed more than once");
        }
        if self.workers == 0 {
            bail!("workers must be positive");
        }
        if self.dataset.train == 0 || self.dataset.validation == 0 || self.dataset.test == 0 {
            bail!("dataset sizes must be positive");
        }
        if self.saa.scenarios == 0 {
            bail!("saa.scenarios must be positive");
        }
        if !(self.solver.time_limit.is_finite() && self.solver.time_limit > 0.0) {
            bail!("solver.time_limit must be a positive number of seconds");
        }
        self.train_config(PenaltyCoefficient::zero()).validate()?;
        Ok(())
    }

    pub fn budget(&self) -> SolveBudget {
        SolveBudget {
            node_limit: self.solver.node_limit,
            time_limit: Duration::from_secs_f64(self.solver.time_limit),
            exact_threshold: self.solver.exact_threshold,
            heuristic_evals: self.solver.heuristic_evals,
            seed: self.seed,
        }
    }

    pub fn saa_config(&self, rho: PenaltyCoefficient<f64>) -> SaaConfig<f64> {
        SaaConfig {
            rho,
            average_penalty: self.saa.average_penalty,
            budget: self.budget(),
            max_evaluations: self.saa.max_evaluations,
            random_candidates: self.saa.random_candidates,
            seed: self.seed,
        }
    }

    pub fn train_config(&self, rho: PenaltyCoefficient<f64>) -> TrainConfig<f64> {
        TrainConfig {
            learning_rate: self.dfl.learning_rate,
            epochs: self.dfl.epochs,
            batch_size: self.dfl.batch_size,
            samples_per_step: self.dfl.samples_per_step,
            seed: self.seed,
            rho,
            budget: self.budget(),
            baseline: self.dfl.baseline,
            theta_max: self.dfl.theta_max,
        }
    }
}

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub penalty: Option<PenaltySetting>,
    pub methods: Option<Vec<Method>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub time_limit: Option<f64>,
    pub instances: Option<Vec<String>>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.penalty {
            config.penalty = v;
        }
        if let Some(v) = &self.methods {
            config.methods = v.clone();
        }
        if let Some(v) = &self.out {
            config.out = v.clone();
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = self.time_limit {
            config.solver.time_limit = v;
        }
        if let Some(v) = &self.instances {
            config.instances = v.clone();
        }
    }
}
