//! The learnable contextual bandit: a bilinear loss model trained by SGD,
//! with epsilon-greedy exploration restricted to a barycentric spanner of
//! the action set.

pub mod linalg;
pub mod model;
pub mod spanner;
pub mod svd;

pub use model::BilinearModel;
pub use spanner::{compute_spanner, max_coefficient};
pub use svd::{principal_subspace, reduce_action_embeddings, Reduction};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::policy::{check_context_dim, BasePolicy, Feedback};
use crate::types::{ActionSpace, Context};
use crate::{Error, Result};

/// Tunables for [`SpannerGreedy`]. The defaults match the reference
/// experimental setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditParams {
    /// SGD learning rate for the bilinear model.
    pub lr: f64,
    /// Exploration probability.
    pub epsilon: f64,
    /// Spanner approximation factor.
    pub spanner_c: f64,
    /// When set, action embeddings are projected onto this many principal
    /// directions before the model sees them.
    pub reduce_to: Option<usize>,
}

impl Default for BanditParams {
    fn default() -> Self {
        Self { lr: 0.1, epsilon: 0.05, spanner_c: 2.0, reduce_to: None }
    }
}

/// Appends a constant coordinate to an embedding. A strictly bilinear
/// form has no intercept, so without this the mean loss level would have
/// nowhere to go but the ranking terms.
fn augment(embedding: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(embedding.len() + 1);
    out.extend_from_slice(embedding);
    out.push(1.0);
    out
}

/// Epsilon-greedy bilinear bandit. With probability `epsilon` it plays a
/// uniform draw from the spanner; otherwise the action minimizing the
/// predicted loss (ties to the lowest id).
///
/// Embeddings are preprocessed by appending a constant coordinate to both
/// sides, which gives the regression global, per-action, and per-context
/// offsets on top of the bilinear interaction.
#[derive(Clone)]
pub struct SpannerGreedy {
    name: String,
    model: BilinearModel,
    /// Actions with augmented (and possibly reduced) embeddings.
    actions: ActionSpace,
    spanner: Vec<usize>,
    epsilon: f64,
    /// Dimension of incoming context embeddings, before augmentation.
    context_dim: usize,
}

impl SpannerGreedy {
    /// Builds the policy over `actions`, reducing action embeddings first
    /// when the parameters ask for it. `reduction_seed` only matters with
    /// `reduce_to`.
    pub fn new(
        name: impl Into<String>,
        actions: &ActionSpace,
        context_dim: usize,
        params: &BanditParams,
        reduction_seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.epsilon) {
            return Err(Error::Config(format!(
                "exploration probability must be in [0, 1], got {}",
                params.epsilon
            )));
        }
        let actions = match params.reduce_to {
            Some(k) => reduce_action_embeddings(actions, k, reduction_seed)?.reduced,
            None => actions.clone(),
        };
        let augmented = actions.iter().map(|a| augment(&a.embedding)).collect();
        let actions = actions.with_embeddings(augmented)?;
        let spanner = compute_spanner(&actions, params.spanner_c)?;
        let model = BilinearModel::new(actions.dim(), context_dim + 1, params.lr)?;
        Ok(Self {
            name: name.into(),
            model,
            actions,
            spanner,
            epsilon: params.epsilon,
            context_dim,
        })
    }

    pub fn model(&self) -> &BilinearModel {
        &self.model
    }

    pub fn spanner(&self) -> &[usize] {
        &self.spanner
    }

    /// The action space as the model sees it: embeddings reduced when
    /// configured, then augmented with the constant coordinate.
    pub fn actions(&self) -> &ActionSpace {
        &self.actions
    }

    /// Action with the lowest clamped predicted loss; ties break to the
    /// lowest action id.
    fn argmin_action(&self, context: &Context) -> Result<usize> {
        check_context_dim(context, self.context_dim)?;
        let ctx = augment(&context.embedding);
        let mut best = 0usize;
        let mut best_loss = f64::INFINITY;
        for a in self.actions.iter() {
            let predicted = self.model.predict(&ctx, &a.embedding)?;
            if predicted < best_loss {
                best_loss = predicted;
                best = a.id;
            }
        }
        Ok(best)
    }
}

impl BasePolicy for SpannerGreedy {
    fn stream_name(&self) -> &str {
        &self.name
    }

    fn act(&self, context: &Context, rng: &mut ChaCha12Rng) -> Result<usize> {
        if rng.random::<f64>() < self.epsilon {
            let pick = rng.random_range(0..self.spanner.len());
            return Ok(self.spanner[pick]);
        }
        self.argmin_action(context)
    }

    fn update(&mut self, batch: &[Feedback]) -> Result<()> {
        for fb in batch {
            check_context_dim(&fb.context, self.context_dim)?;
            let action_emb = self
                .actions
                .get(fb.action_id)
                .ok_or_else(|| {
                    Error::Config(format!("feedback references unknown action {}", fb.action_id))
                })?
                .embedding
                .clone();
            self.model
                .update(&augment(&fb.context.embedding), &action_emb, fb.loss.value())?;
        }
        Ok(())
    }

    fn greedy(&self, context: &Context) -> Option<usize> {
        self.argmin_action(context).ok()
    }
}
