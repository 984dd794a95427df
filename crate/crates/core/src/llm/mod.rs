//! Generator-backed stationary policies.
//!
//! Each decision runs the same pipeline: render the context into a
//! prompt, ask the backend for its top-k outputs, embed every output,
//! match each one to the most similar action text, normalize the output
//! likelihoods into a distribution over the matched actions, and sample
//! one. Backends are pure functions of the prompt (seeded, replayed, or
//! cached), so the induced policy never changes over a run: it can be
//! treated as a fixed competitor by the selection layer.

pub mod backend;
pub mod cache;
pub mod embed;
pub mod prompts;
pub mod remote;
pub mod synthetic;

pub use backend::{GeneratorBackend, GeneratorOutput, OutputEntry};
pub use cache::{cache_key, CachingBackend, ReplayBackend, ResponseCache};
pub use embed::{Embedder, HashEmbedder};
pub use prompts::{render_prompt, PromptStyle, SLOT_SEPARATOR};
pub use remote::{build_request_body, parse_choices, RemoteBackend, RemoteConfig};
pub use synthetic::SyntheticOracle;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::policy::BasePolicy;
use crate::types::{ActionSpace, Context, DIST_SUM_TOL};
use crate::{Error, Result};

/// Cosine similarity of two equal-length nonzero vectors, clamped into
/// [-1, 1] against rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension { expected: u.len(), got: v.len() });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu <= 0.0 || nv <= 0.0 {
        return Err(Error::Numerical(
            "cosine similarity is undefined for a zero vector".into(),
        ));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Index of the embedding most similar to `output`, lowest index on ties.
pub fn match_output(output: &[f64], action_embeddings: &[Vec<f64>]) -> Result<usize> {
    if action_embeddings.is_empty() {
        return Err(Error::Config("cannot match against an empty action set".into()));
    }
    let mut best = 0;
    let mut best_sim = cosine_similarity(output, &action_embeddings[0])?;
    for (id, embedding) in action_embeddings.iter().enumerate().skip(1) {
        let sim = cosine_similarity(output, embedding)?;
        if sim > best_sim {
            best = id;
            best_sim = sim;
        }
    }
    Ok(best)
}

/// A sampling distribution over matched actions.
///
/// Pairs keep the generator's ranking, so one action id may appear more
/// than once when several outputs matched it; its total sampling mass is
/// the sum over its pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedDistribution {
    pairs: Vec<(usize, f64)>,
}

impl MatchedDistribution {
    /// Validates that the probabilities are finite, nonnegative, and sum
    /// to 1 within tolerance.
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("matched distribution has no pairs".into()));
        }
        let mut total = 0.0;
        for &(id, p) in &pairs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Numerical(format!(
                    "matched probability for action {id} is {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::Numerical(format!(
                "matched probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    /// Samples one action id, consuming exactly one draw.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> usize {
        let draw = rng.random::<f64>();
        let mut acc = 0.0;
        let mut last_positive = None;
        for &(id, p) in &self.pairs {
            if p > 0.0 {
                last_positive = Some(id);
            }
            acc += p;
            if draw < acc {
                return id;
            }
        }
        last_positive.expect("a validated distribution has positive mass")
    }

    /// The action holding the most total mass, lowest id on ties.
    pub fn greedy(&self) -> usize {
        let mut totals: BTreeMap<usize, f64> = BTreeMap::new();
        for &(id, p) in &self.pairs {
            *totals.entry(id).or_insert(0.0) += p;
        }
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (&id, &mass) in &totals {
            if mass > best.1 {
                best = (id, mass);
            }
        }
        best.0
    }
}

/// Attaches normalized likelihood weights to the matched action ids.
pub fn build_distribution(
    output: &GeneratorOutput,
    matched: &[usize],
) -> Result<MatchedDistribution> {
    if matched.len() != output.len() {
        return Err(Error::Dimension { expected: output.len(), got: matched.len() });
    }
    let total: f64 = output.entries().iter().map(|e| e.likelihood).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical(format!(
            "output likelihoods sum to {total}, cannot normalize"
        )));
    }
    let pairs = matched
        .iter()
        .zip(output.entries())
        .map(|(&id, entry)| (id, entry.likelihood / total))
        .collect();
    MatchedDistribution::new(pairs)
}

/// A base policy that delegates every decision to a text generator.
///
/// Action texts are embedded once at construction and reused for the
/// whole run.
pub struct LlmPolicy {
    name: String,
    backend: Box<dyn GeneratorBackend>,
    embedder: Box<dyn Embedder>,
    style: PromptStyle,
    k: usize,
    match_embeddings: Vec<Vec<f64>>,
}

impl LlmPolicy {
    pub fn new(
        name: impl Into<String>,
        backend: Box<dyn GeneratorBackend>,
        embedder: Box<dyn Embedder>,
        style: PromptStyle,
        k: usize,
        actions: &ActionSpace,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("generator k must be at least 1".into()));
        }
        let mut match_embeddings = Vec::with_capacity(actions.len());
        for action in actions.iter() {
            let embedding = embedder.embed(&action.text);
            if embedding.iter().all(|x| *x == 0.0) {
                return Err(Error::Numerical(format!(
                    "action {} text embeds to the zero vector",
                    action.id
                )));
            }
            match_embeddings.push(embedding);
        }
        Ok(Self {
            name: name.into(),
            backend,
            embedder,
            style,
            k,
            match_embeddings,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    /// Runs the full pipeline for one context and returns the resulting
    /// action distribution.
    pub fn distribution(&self, context: &Context) -> Result<MatchedDistribution> {
        let prompt = render_prompt(self.style, &context.text);
        let output = self.backend.generate(&prompt, self.k)?;
        let mut matched = Vec::with_capacity(output.len());
        for entry in output.entries() {
            let embedding = self.embedder.embed(&entry.text);
            matched.push(match_output(&embedding, &self.match_embeddings)?);
        }
        build_distribution(&output, &matched)
    }
}

impl BasePolicy for LlmPolicy {
    fn stream_name(&self) -> &str {
        &self.name
    }

    fn act(&self, context: &Context, rng: &mut ChaCha12Rng) -> Result<usize> {
        Ok(self.distribution(context)?.sample(rng))
    }

    fn greedy(&self, context: &Context) -> Option<usize> {
        self.distribution(context).ok().map(|d| d.greedy())
    }
}
