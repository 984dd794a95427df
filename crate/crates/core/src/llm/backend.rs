//! Generator backend interface and its output type.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One ranked generator output: a text candidate and its positive weight.
///
/// Weights are opaque relative scores. They are not required to sum to 1;
/// normalization happens when a sampling distribution is built from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub text: String,
    pub likelihood: f64,
}

/// The top-k outputs a generator returned for one prompt, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOutput {
    entries: Vec<OutputEntry>,
}

impl GeneratorOutput {
    /// Validates and wraps a ranked output list: at least one entry, all
    /// likelihoods finite and strictly positive.
    pub fn new(entries: Vec<OutputEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Backend("generator returned no outputs".into()));
        }
        for (rank, entry) in entries.iter().enumerate() {
            if !entry.likelihood.is_finite() || entry.likelihood <= 0.0 {
                return Err(Error::Backend(format!(
                    "output at rank {rank} has non-positive likelihood {}",
                    entry.likelihood
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Consumes the output, yielding the raw entries.
    pub fn into_entries(self) -> Vec<OutputEntry> {
        self.entries
    }
}

/// A text generator: maps a prompt to its top-k outputs.
///
/// Implementations must be safe to call from several worker threads at
/// once. The synthetic and replay backends are deterministic functions of
/// (backend identity, prompt, k); the remote backend is whatever the
/// service returns.
pub trait GeneratorBackend: Send + Sync {
    /// Stable identity used in cache keys. Two backends that can return
    /// different outputs for the same prompt must have different ids.
    fn id(&self) -> &str;

    /// Returns the top-k outputs for `prompt`, best first.
    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput>;
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for &B {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        (**self).generate(prompt, k)
    }
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        (**self).generate(prompt, k)
    }
}
