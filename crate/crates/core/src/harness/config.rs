//! Experiment configuration: a single versioned JSON document describing
//! the environment, the policy roster, the selection strategy, and the
//! run bookkeeping. Unknown keys are rejected everywhere so a typo fails
//! the run instead of silently changing it.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::BanditParams;
use crate::env::EnvironmentConfig;
use crate::llm::{PromptStyle, RemoteConfig};
use crate::selector::{BudgetConfig, Smoothing, StrategyConfig};
use crate::{Error, Result};

/// Config schema revision accepted by this build.
pub const CONFIG_SCHEMA: &str = "v1";

fn default_k() -> usize {
    1
}

fn default_embed_dim() -> usize {
    64
}

fn default_smoothing() -> Smoothing {
    Smoothing::None
}

/// Where a generator-backed policy gets its completions from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Deterministic stand-in with a configurable hit rate. Ground truth
    /// is read from the environment's records at build time.
    SyntheticOracle {
        accuracy: f64,
        /// Seeds the oracle's draws. Kept separate from the run seed so
        /// the oracle behaves as a fixture shared by every run.
        #[serde(default)]
        oracle_seed: u64,
    },
    /// Answers only from a previously recorded response cache.
    Replay { cache: PathBuf, recorded_id: String },
    /// Live chat-completions endpoint, optionally recording into a cache.
    Remote {
        config: RemoteConfig,
        #[serde(default)]
        cache: Option<PathBuf>,
    },
}

/// One roster entry: a learnable bandit or a generator-backed policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Bandit {
        #[serde(default)]
        params: BanditParams,
    },
    Generator {
        backend: BackendConfig,
        /// Completions requested per prompt.
        #[serde(default = "default_k")]
        k: usize,
        style: PromptStyle,
        /// Dimension of the hash embeddings used for output matching.
        #[serde(default = "default_embed_dim")]
        embed_dim: usize,
        #[serde(default)]
        embed_seed: u64,
    },
}

/// Everything one experiment needs, ready to fan out over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`CONFIG_SCHEMA`].
    pub schema: String,
    pub environment: EnvironmentConfig,
    pub roster: Vec<PolicyConfig>,
    pub strategy: StrategyConfig,
    #[serde(default = "default_smoothing")]
    pub smoothing: Smoothing,
    #[serde(default)]
    pub budget: Option<BudgetConfig>,
    /// Master seeds, one independent run each.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads and parses a config file, naming the file in any error.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural checks that do not require building the policies.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema `{}`, expected `{CONFIG_SCHEMA}`",
                self.schema
            )));
        }
        if self.roster.is_empty() {
            return Err(Error::Config("policy roster is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        let mut seen = HashSet::new();
        for &seed in &self.seeds {
            if !seen.insert(seed) {
                return Err(Error::Config(format!("seed {seed} appears twice")));
            }
        }
        for entry in &self.roster {
            if let PolicyConfig::Generator { k, embed_dim, .. } = entry {
                if *k == 0 {
                    return Err(Error::Config("generator k must be at least 1".into()));
                }
                if *embed_dim == 0 {
                    return Err(Error::Config(
                        "generator embed_dim must be at least 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of learnable entries in the roster.
    pub fn bandit_count(&self) -> usize {
        self.roster
            .iter()
            .filter(|p| matches!(p, PolicyConfig::Bandit { .. }))
            .count()
    }

    /// Number of generator-backed entries in the roster.
    pub fn generator_count(&self) -> usize {
        self.roster.len() - self.bandit_count()
    }
}
