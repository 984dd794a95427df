//! Generator-call budget accounting and the gate it applies to the
//! sampling law.
//!
//! The gate reshapes each batch's frozen distribution before sampling;
//! the hard cap is enforced per example by falling back to the learnable
//! group once the budget is spent.

use serde::{Deserialize, Serialize};

use crate::selector::smoothing::rescale_group;
use crate::types::{PolicyGroup, SamplingDistribution};
use crate::{Error, Result};

/// How the remaining budget shapes the generator group's mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Multiply the generator mass by `(limit - used) / limit`.
    Scale,
    /// Leave the mass untouched until the budget is spent, then zero it.
    EarlyStop,
}

/// Budget configuration as it appears in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub limit: u64,
    pub mode: BudgetMode,
}

/// Tracks generator calls against an optional limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetState {
    limit: Option<u64>,
    mode: BudgetMode,
    used: u64,
}

impl BudgetState {
    pub fn unlimited() -> Self {
        Self { limit: None, mode: BudgetMode::EarlyStop, used: 0 }
    }

    pub fn limited(limit: u64, mode: BudgetMode) -> Self {
        Self { limit: Some(limit), mode, used: 0 }
    }

    pub fn from_config(config: Option<BudgetConfig>) -> Self {
        match config {
            Some(c) => Self::limited(c.limit, c.mode),
            None => Self::unlimited(),
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    /// True once no further generator calls may be made.
    pub fn exhausted(&self) -> bool {
        matches!(self.limit, Some(b) if self.used >= b)
    }

    /// Records one generator call. Calling past the limit is a logic bug
    /// in the caller, so it fails loudly.
    pub fn record_call(&mut self) -> Result<()> {
        if self.exhausted() {
            return Err(Error::Config(format!(
                "generator budget exceeded: limit {:?} already spent",
                self.limit
            )));
        }
        self.used += 1;
        Ok(())
    }

    /// Applies the budget gate to a distribution, moving generator mass to
    /// the learnable group as the budget depletes.
    pub fn gate(&self, dist: &SamplingDistribution) -> Result<SamplingDistribution> {
        let Some(limit) = self.limit else {
            return Ok(dist.clone());
        };
        if !dist.has_group(PolicyGroup::Llm) {
            return Ok(dist.clone());
        }
        let factor = match self.mode {
            BudgetMode::Scale => {
                if limit == 0 {
                    0.0
                } else {
                    limit.saturating_sub(self.used) as f64 / limit as f64
                }
            }
            BudgetMode::EarlyStop => {
                if self.used < limit {
                    1.0
                } else {
                    0.0
                }
            }
        };
        if factor >= 1.0 {
            return Ok(dist.clone());
        }
        let llm_target = dist.llm_total() * factor;
        if llm_target < 1.0 && !dist.has_group(PolicyGroup::Cb) {
            return Err(Error::Config(
                "budget gating requires at least one learnable policy to absorb mass".into(),
            ));
        }
        let mut probs = dist.probs().to_vec();
        rescale_group(&mut probs, dist.groups(), PolicyGroup::Llm, llm_target);
        rescale_group(&mut probs, dist.groups(), PolicyGroup::Cb, 1.0 - llm_target);
        dist.with_probs(probs)
    }
}

/// Conditional distribution given that a learnable policy is drawn: the
/// generator group is zeroed and the learnable group renormalized to 1.
pub fn cb_only(dist: &SamplingDistribution) -> Result<SamplingDistribution> {
    if !dist.has_group(PolicyGroup::Cb) {
        return Err(Error::Config(
            "cannot restrict to the learnable group: roster has none".into(),
        ));
    }
    let mut probs = dist.probs().to_vec();
    rescale_group(&mut probs, dist.groups(), PolicyGroup::Llm, 0.0);
    rescale_group(&mut probs, dist.groups(), PolicyGroup::Cb, 1.0);
    dist.with_probs(probs)
}
