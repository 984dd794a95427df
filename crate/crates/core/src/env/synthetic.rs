//! Seeded bilinear environment generator.
//!
//! A hidden matrix W with unit-norm rows scores every (context, action)
//! pair as ⟨φ(a), W φ(x)⟩; the correct action for a context is the
//! argmax. The induced optimal policy has expected loss 0, so a learner's
//! cumulative loss is exactly its regret. Contexts and action embeddings
//! are drawn uniformly from the unit sphere; everything is a
//! deterministic function of the seed.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bandit::linalg::{dot, matvec};
use crate::env::DatasetRecord;
use crate::rng::stream;
use crate::types::{ActionEntry, ActionSpace, Context};
use crate::{Error, Result};

/// Shape and seed of a synthetic bilinear environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub context_dim: usize,
    pub action_dim: usize,
    pub num_actions: usize,
    pub num_records: usize,
    /// Seed for the hidden matrix and all drawn embeddings. This pins
    /// down the environment itself, so runs with different run seeds
    /// still face the same decision problem.
    pub seed: u64,
}

fn unit_vector(dim: usize, rng: &mut rand_chacha::ChaCha12Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// The hidden action_dim x context_dim matrix with unit-norm rows.
pub(crate) fn hidden_matrix(
    action_dim: usize,
    context_dim: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, "synthetic-hidden-matrix");
    (0..action_dim).map(|_| unit_vector(context_dim, &mut rng)).collect()
}

/// The action maximizing ⟨φ(a), W φ(x)⟩, lowest id on exact ties.
pub fn bilinear_best_action(
    w: &[Vec<f64>],
    actions: &ActionSpace,
    context_embedding: &[f64],
) -> usize {
    let wx = matvec(w, context_embedding);
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for action in actions.iter() {
        let score = dot(&action.embedding, &wx);
        if score > best_score {
            best = action.id;
            best_score = score;
        }
    }
    best
}

/// Builds the action space and labeled records for a synthetic spec.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<(ActionSpace, Vec<DatasetRecord>)> {
    if spec.context_dim == 0 || spec.action_dim == 0 {
        return Err(Error::Config("synthetic dimensions must be at least 1".into()));
    }
    if spec.num_actions == 0 {
        return Err(Error::Config("synthetic environment needs at least one action".into()));
    }

    let mut action_rng = stream(spec.seed, "synthetic-actions");
    let entries: Vec<ActionEntry> = (0..spec.num_actions)
        .map(|id| ActionEntry {
            id,
            text: format!("synthetic action {id}"),
            embedding: unit_vector(spec.action_dim, &mut action_rng),
        })
        .collect();
    let actions = ActionSpace::new_unchecked_size(entries)?;

    let w = hidden_matrix(spec.action_dim, spec.context_dim, spec.seed);
    let mut context_rng = stream(spec.seed, "synthetic-contexts");
    let records = (0..spec.num_records)
        .map(|id| {
            let embedding = unit_vector(spec.context_dim, &mut context_rng);
            let correct = bilinear_best_action(&w, &actions, &embedding);
            DatasetRecord {
                context: Context {
                    id,
                    text: format!("synthetic context {id}"),
                    embedding,
                },
                correct_ids: vec![correct],
            }
        })
        .collect();
    Ok((actions, records))
}
