//! Experiment configuration (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{base_function, base_functions};
use crate::subsolve::SolverSpec;
use crate::xrego::{DimensionSchedule, PStrategy, StopConfig, DEFAULT_EPS, DEFAULT_GAMMA};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Base seed; seed index `s` of every cell derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Repeats per (problem, algorithm).
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    pub problems: ProblemFilter,
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub n_stop: Option<usize>,
    #[serde(default)]
    pub max_embeddings: Option<usize>,
    #[serde(default)]
    pub max_evals: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_seeds() -> u64 {
    3
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFilter {
    /// Names or slugs; all eighteen when absent.
    #[serde(default)]
    pub names: Option<Vec<String>>,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub max_effective_dim: Option<usize>,
}

/// Either a preset id or a full algorithm table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Preset(String),
    Full(AlgorithmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub id: String,
    pub strategy: PStrategy,
    pub schedule: DimensionSchedule,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Overrides the experiment-level value.
    #[serde(default)]
    pub n_stop: Option<usize>,
    #[serde(default)]
    pub max_embeddings: Option<usize>,
}

pub const PRESETS: [&str; 6] = ["a-rego-exp", "a-rego-cheap", "n-rego-exp", "n-rego-cheap", "la-rego", "ln-rego"];

/// Built-in algorithm definitions. The resampling variants use a single
/// local descent and stop after three flat embeddings.
pub fn preset(id: &str) -> Result<AlgorithmConfig> {
    let inc = DimensionSchedule::Increasing { d_lb: 1 };
    let (strategy, solver, n_stop) = match id {
        "a-rego-exp" => (PStrategy::AdaptiveBest, SolverSpec::expensive(), None),
        "a-rego-cheap" => (PStrategy::AdaptiveBest, SolverSpec::cheap(), None),
        "n-rego-exp" => (PStrategy::Fixed { anchor: None }, SolverSpec::expensive(), None),
        "n-rego-cheap" => (PStrategy::Fixed { anchor: None }, SolverSpec::cheap(), None),
        "la-rego" => (
            PStrategy::AdaptiveThenResample { gamma_res: DEFAULT_GAMMA },
            SolverSpec::local(),
            Some(3),
        ),
        "ln-rego" => (PStrategy::FixedThenResample { anchor: None }, SolverSpec::local(), Some(3)),
        other => {
            return Err(Error::Config(format!(
                "unknown algorithm preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(AlgorithmConfig {
        id: id.to_string(),
        strategy,
        schedule: inc,
        solver,
        n_stop,
        max_embeddings: None,
    })
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if !(self.eps > 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::Config("eps must be positive and gamma non-negative".into()));
        }
        if self.problems.dims.is_empty() || self.problems.dims.contains(&0) {
            return Err(Error::Config("problems.dims must list positive dimensions".into()));
        }
        if let Some(names) = &self.problems.names {
            for n in names {
                base_function(n).map_err(|_| Error::Config(format!("unknown problem `{n}`")))?;
            }
        }
        let algos = self.resolved_algorithms()?;
        if algos.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        let mut ids = BTreeSet::new();
        for a in &algos {
            if !ids.insert(a.id.clone()) {
                return Err(Error::Config(format!("duplicate algorithm id `{}`", a.id)));
            }
        }
        Ok(())
    }

    pub fn resolved_algorithms(&self) -> Result<Vec<AlgorithmConfig>> {
        self.algorithms
            .iter()
            .map(|a| match a {
                AlgorithmEntry::Preset(id) => preset(id),
                AlgorithmEntry::Full(cfg) => Ok(cfg.clone()),
            })
            .collect()
    }

    /// Problem slugs selected by the filter, in suite order.
    pub fn problem_slugs(&self) -> Vec<String> {
        let wanted: Option<BTreeSet<String>> = self
            .problems
            .names
            .as_ref()
            .map(|ns| ns.iter().filter_map(|n| base_function(n).ok()).map(|b| b.slug()).collect());
        base_functions()
            .into_iter()
            .filter(|b| wanted.as_ref().is_none_or(|w| w.contains(&b.slug())))
            .filter(|b| self.problems.max_effective_dim.is_none_or(|m| b.dim() <= m))
            .map(|b| b.slug())
            .collect()
    }

    pub fn stop_for(&self, algo: &AlgorithmConfig) -> StopConfig {
        StopConfig {
            gamma: self.gamma,
            n_stop: algo.n_stop.or(self.n_stop),
            max_embeddings: algo.max_embeddings.or(self.max_embeddings),
            max_evals: self.max_evals,
            eps: self.eps,
            stop_on_target: false,
        }
    }
}
