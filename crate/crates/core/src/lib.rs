//! Online model selection for contextual bandits over a mixed roster of
//! base policies: learnable bandit algorithms and static generator-backed
//! (LLM-style) policies.
//!
//! The crate is organized around the selection loop in [`selector`]:
//! a sampling distribution over base policies is maintained by either a
//! log-barrier mirror-descent update or a pre-determined decay schedule,
//! optionally smoothed and budget-gated, and each round one policy is
//! sampled to act. [`bandit`] provides the learnable base policy (a
//! bilinear regression model with spanner-based exploration), [`llm`]
//! turns any text generator into a stationary policy, [`env`] supplies
//! dataset-backed and synthetic environments, and [`harness`] wires it
//! all into reproducible, seeded experiment runs with CSV metrics.

pub mod bandit;
pub mod env;
pub mod harness;
pub mod llm;
pub mod policy;
pub mod rng;
pub mod selector;
pub mod types;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Embedding or feature dimension mismatch.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Root finding failed to meet its residual contract.
    #[error("solver error: {0}")]
    Solver(String),

    /// Iterative numerical routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Model update produced a non-finite value.
    #[error("training error: {0}")]
    Training(String),

    /// Data file failed validation.
    #[error("data error at {path}:{line}: {msg}")]
    Data {
        path: String,
        line: usize,
        msg: String,
    },

    /// Generator backend failure after retries.
    #[error("backend error: {0}")]
    Backend(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
