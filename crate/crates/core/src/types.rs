//! Shared domain types: contexts, actions, losses, sampling distributions
//! and per-step interaction records.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for sum-to-one checks on sampling distributions.
pub const DIST_SUM_TOL: f64 = 1e-9;

/// One observed context: an integer id, optional text, and a precomputed
/// embedding. Embeddings arrive from data files or synthetic generators;
/// there is no in-process text encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub id: usize,
    /// May be empty in synthetic mode.
    #[serde(default)]
    pub text: String,
    pub embedding: Vec<f64>,
}

impl Context {
    pub fn dim(&self) -> usize {
        self.embedding.len()
    }
}

/// The fixed, ordered action set. Action identity is the integer index;
/// text and embedding are payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    actions: Vec<ActionEntry>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub id: usize,
    pub text: String,
    pub embedding: Vec<f64>,
}

impl ActionSpace {
    /// Builds an action space, checking that ids are `0..n`, that all
    /// embeddings share one dimension, and that there are at least two
    /// actions.
    pub fn new(actions: Vec<ActionEntry>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::Config(format!(
                "action space needs at least 2 actions, got {}",
                actions.len()
            )));
        }
        let dim = actions[0].embedding.len();
        for (i, a) in actions.iter().enumerate() {
            if a.id != i {
                return Err(Error::Config(format!(
                    "action ids must be 0..n in order; position {i} has id {}",
                    a.id
                )));
            }
            if a.embedding.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: a.embedding.len(),
                });
            }
        }
        Ok(Self { actions, dim })
    }

    /// Like [`ActionSpace::new`] but without the two-action minimum, for
    /// degenerate test environments.
    pub fn new_unchecked_size(actions: Vec<ActionEntry>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Config("action space is empty".into()));
        }
        let dim = actions[0].embedding.len();
        for (i, a) in actions.iter().enumerate() {
            if a.id != i {
                return Err(Error::Config(format!(
                    "action ids must be 0..n in order; position {i} has id {}",
                    a.id
                )));
            }
            if a.embedding.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: a.embedding.len(),
                });
            }
        }
        Ok(Self { actions, dim })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: usize) -> Option<&ActionEntry> {
        self.actions.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionEntry> {
        self.actions.iter()
    }

    pub fn embedding(&self, id: usize) -> &[f64] {
        &self.actions[id].embedding
    }

    /// Returns a copy with every embedding replaced. Used when the bandit
    /// works in a reduced action-embedding space.
    pub fn with_embeddings(&self, embeddings: Vec<Vec<f64>>) -> Result<Self> {
        if embeddings.len() != self.actions.len() {
            return Err(Error::Config(format!(
                "embedding count {} does not match action count {}",
                embeddings.len(),
                self.actions.len()
            )));
        }
        let actions = self
            .actions
            .iter()
            .zip(embeddings)
            .map(|(a, e)| ActionEntry {
                id: a.id,
                text: a.text.clone(),
                embedding: e,
            })
            .collect();
        Self::new_unchecked_size(actions)
    }
}

/// A bounded loss in `[0, 1]`. Dataset environments produce binary losses.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossValue(f64);

impl LossValue {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Config(format!("loss {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub const ZERO: LossValue = LossValue(0.0);
    pub const ONE: LossValue = LossValue(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Converts a loss into a reward: `r = 1 - loss`.
pub fn loss_to_reward(loss: LossValue) -> f64 {
    1.0 - loss.value()
}

/// Inverse of [`loss_to_reward`].
pub fn reward_to_loss(reward: f64) -> Result<LossValue> {
    LossValue::new(1.0 - reward)
}

/// Which group a base policy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyGroup {
    /// A learnable contextual-bandit algorithm.
    Cb,
    /// A static generator-backed policy.
    Llm,
}

/// A probability vector over the M base policies, with a group tag per
/// index. Entries are non-negative and sum to one within [`DIST_SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
    groups: Vec<PolicyGroup>,
}

impl SamplingDistribution {
    pub fn new(probs: Vec<f64>, groups: Vec<PolicyGroup>) -> Result<Self> {
        if probs.len() != groups.len() {
            return Err(Error::Config(format!(
                "probability vector length {} does not match group tags {}",
                probs.len(),
                groups.len()
            )));
        }
        if probs.is_empty() {
            return Err(Error::Config("empty sampling distribution".into()));
        }
        let dist = Self { probs, groups };
        dist.validate()?;
        Ok(dist)
    }

    /// Uniform distribution over all M policies.
    pub fn uniform(groups: Vec<PolicyGroup>) -> Result<Self> {
        let m = groups.len();
        Self::new(vec![1.0 / m as f64; m], groups)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for &p in &self.probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Config(format!(
                    "invalid probability entry {p} in sampling distribution"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::Config(format!(
                "sampling distribution sums to {sum}, not 1"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn groups(&self) -> &[PolicyGroup] {
        &self.groups
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn group(&self, i: usize) -> PolicyGroup {
        self.groups[i]
    }

    /// Total probability mass on one group.
    pub fn group_total(&self, group: PolicyGroup) -> f64 {
        self.probs
            .iter()
            .zip(&self.groups)
            .filter(|(_, g)| **g == group)
            .map(|(p, _)| *p)
            .sum()
    }

    pub fn cb_total(&self) -> f64 {
        self.group_total(PolicyGroup::Cb)
    }

    pub fn llm_total(&self) -> f64 {
        self.group_total(PolicyGroup::Llm)
    }

    pub fn has_group(&self, group: PolicyGroup) -> bool {
        self.groups.iter().any(|g| *g == group)
    }

    /// Replaces the probability vector, revalidating.
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        Self::new(probs, self.groups.clone())
    }
}

/// One step of the interaction loop, as persisted by the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// 1-based step index.
    pub t: u64,
    pub context_id: usize,
    /// Index of the sampled base policy.
    pub policy_index: usize,
    pub action_id: usize,
    pub loss: LossValue,
    /// The distribution the policy index was actually sampled from
    /// (after smoothing and budget gating).
    pub dist_snapshot: SamplingDistribution,
    /// Reward the learnable base's greedy action would have received.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cf_cb_reward: Option<f64>,
    /// Reward the generator-backed policy's action would have received.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cf_llm_reward: Option<f64>,
    /// Reward the shadow model's greedy action would have received.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cf_shadow_reward: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups(cb: usize, llm: usize) -> Vec<PolicyGroup> {
        let mut g = vec![PolicyGroup::Cb; cb];
        g.extend(vec![PolicyGroup::Llm; llm]);
        g
    }

    #[test]
    fn loss_reward_endpoints() {
        assert_eq!(loss_to_reward(LossValue::new(0.0).unwrap()), 1.0);
        assert_eq!(loss_to_reward(LossValue::new(1.0).unwrap()), 0.0);
        assert_eq!(loss_to_reward(LossValue::new(0.25).unwrap()), 0.75);
    }

    #[test]
    fn loss_reward_roundtrip() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let loss = LossValue::new(x).unwrap();
            let back = reward_to_loss(loss_to_reward(loss)).unwrap();
            assert!((back.value() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_rejects_out_of_range() {
        assert!(LossValue::new(-0.1).is_err());
        assert!(LossValue::new(1.1).is_err());
        assert!(LossValue::new(f64::NAN).is_err());
    }

    #[test]
    fn distribution_validates_sum() {
        assert!(SamplingDistribution::new(vec![0.5, 0.5], groups(1, 1)).is_ok());
        assert!(SamplingDistribution::new(vec![0.6, 0.5], groups(1, 1)).is_err());
        assert!(SamplingDistribution::new(vec![1.1, -0.1], groups(1, 1)).is_err());
    }

    #[test]
    fn group_totals() {
        let d = SamplingDistribution::new(vec![0.1, 0.2, 0.7], groups(2, 1)).unwrap();
        assert!((d.cb_total() - 0.3).abs() < 1e-15);
        assert!((d.llm_total() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn uniform_is_valid() {
        let d = SamplingDistribution::uniform(groups(2, 3)).unwrap();
        assert!(d.validate().is_ok());
        assert!((d.prob(0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn action_space_rejects_bad_ids_and_dims() {
        let mk = |id, dim: usize| ActionEntry {
            id,
            text: format!("a{id}"),
            embedding: vec![0.0; dim],
        };
        assert!(ActionSpace::new(vec![mk(0, 3), mk(1, 3)]).is_ok());
        assert!(ActionSpace::new(vec![mk(0, 3), mk(2, 3)]).is_err());
        assert!(ActionSpace::new(vec![mk(0, 3), mk(1, 4)]).is_err());
        assert!(ActionSpace::new(vec![mk(0, 3)]).is_err());
    }
}
