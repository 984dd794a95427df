//! Policy selection: adaptive or scheduled sampling over a roster of base
//! policies, with smoothing and generator-budget gating layered on top.
//!
//! The interaction loop is batched. Each batch freezes one sampling law,
//! draws every example in the batch independently from it, then applies
//! policy and strategy updates in example order. The only mid-batch
//! change is the hard budget cap: once the generator budget is spent, the
//! remaining examples fall back to the learnable group's conditional law.

pub mod budget;
pub mod corral;
pub mod sampling;
pub mod schedule;
pub mod smoothing;
pub mod strategy;

pub use budget::{cb_only, BudgetConfig, BudgetMode, BudgetState};
pub use corral::{corral_update, corral_update_weighted, solve_lambda, CorralState};
pub use sampling::{allocate_groups, sample_index};
pub use schedule::{ScheduleKind, ScheduleParams};
pub use smoothing::{smooth_clip, smooth_mix, Smoothing};
pub use strategy::{Strategy, StrategyConfig};

use rand_chacha::ChaCha12Rng;

use crate::policy::{Feedback, RosterEntry};
use crate::types::{Context, InteractionRecord, LossValue, PolicyGroup, SamplingDistribution};
use crate::{Error, Result};

/// Drives the select / act / observe / update loop over a policy roster.
pub struct Orchestrator {
    roster: Vec<RosterEntry>,
    strategy: Strategy,
    smoothing: Smoothing,
    budget: BudgetState,
    t: u64,
}

impl Orchestrator {
    pub fn new(
        roster: Vec<RosterEntry>,
        strategy_config: &StrategyConfig,
        smoothing: Smoothing,
        budget_config: Option<BudgetConfig>,
    ) -> Result<Self> {
        if roster.is_empty() {
            return Err(Error::Config("policy roster is empty".into()));
        }
        smoothing.validate()?;
        let groups: Vec<PolicyGroup> = roster.iter().map(|e| e.group).collect();
        let strategy = Strategy::new(strategy_config, &groups)?;
        Ok(Self {
            roster,
            strategy,
            smoothing,
            budget: BudgetState::from_config(budget_config),
            t: 0,
        })
    }

    /// Number of examples processed so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Number of generator-backed policy invocations so far.
    pub fn generator_calls(&self) -> u64 {
        self.budget.used()
    }

    pub fn budget(&self) -> &BudgetState {
        &self.budget
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn roster_len(&self) -> usize {
        self.roster.len()
    }

    pub fn group(&self, index: usize) -> PolicyGroup {
        self.roster[index].group
    }

    pub fn policy(&self, index: usize) -> &dyn crate::policy::BasePolicy {
        self.roster[index].policy.as_ref()
    }

    /// First roster index in a group, if any.
    pub fn first_in_group(&self, group: PolicyGroup) -> Option<usize> {
        self.roster.iter().position(|e| e.group == group)
    }

    /// The sampling law the next batch would freeze, without advancing
    /// any state.
    pub fn next_law(&self) -> Result<SamplingDistribution> {
        let base = self.strategy.base_distribution(self.t + 1)?;
        let smoothed = self.smoothing.apply(&base)?;
        self.budget.gate(&smoothed)
    }

    /// Runs one batch: freezes the law, samples and acts per example,
    /// observes losses through `observe`, then applies batched policy
    /// updates and per-example strategy updates in order.
    ///
    /// `policy_rngs` is indexed parallel to the roster; each policy only
    /// ever draws from its own stream, so adding or removing other roster
    /// members cannot perturb its trajectory.
    pub fn run_batch<F>(
        &mut self,
        contexts: &[Context],
        policy_rngs: &mut [ChaCha12Rng],
        sample_rng: &mut ChaCha12Rng,
        mut observe: F,
    ) -> Result<Vec<InteractionRecord>>
    where
        F: FnMut(&Context, usize) -> Result<LossValue>,
    {
        if contexts.is_empty() {
            return Ok(Vec::new());
        }
        if policy_rngs.len() != self.roster.len() {
            return Err(Error::Config(format!(
                "got {} policy rng streams for {} roster entries",
                policy_rngs.len(),
                self.roster.len()
            )));
        }

        let frozen = self.next_law()?;
        let mut fallback: Option<SamplingDistribution> = None;

        let mut records = Vec::with_capacity(contexts.len());
        let mut feedback = Vec::with_capacity(contexts.len());
        let mut strategy_steps = Vec::with_capacity(contexts.len());

        for context in contexts {
            let mut law = if self.budget.exhausted() && frozen.llm_total() > 0.0 {
                if fallback.is_none() {
                    fallback = Some(cb_only(&frozen)?);
                }
                fallback.clone().unwrap()
            } else {
                frozen.clone()
            };

            let mut index = sample_index(&law, sample_rng);
            if self.roster[index].group == PolicyGroup::Llm {
                self.budget.record_call()?;
            }
            let action_id = match self.roster[index].policy.act(context, &mut policy_rngs[index])
            {
                Ok(id) => id,
                // A generator that keeps failing must not deadlock the run:
                // the example is resampled from the learnable group's
                // conditional law. The failed attempt stays on the budget.
                Err(Error::Backend(msg)) if self.roster[index].group == PolicyGroup::Llm => {
                    log::warn!(
                        "generator policy `{}` failed: {msg}; resampling from learnable group",
                        self.roster[index].policy.stream_name()
                    );
                    if fallback.is_none() {
                        fallback = Some(cb_only(&frozen)?);
                    }
                    law = fallback.clone().unwrap();
                    index = sample_index(&law, sample_rng);
                    self.roster[index].policy.act(context, &mut policy_rngs[index])?
                }
                Err(e) => return Err(e),
            };
            let loss = observe(context, action_id)?;
            self.t += 1;

            strategy_steps.push((index, loss.value(), law.prob(index)));
            feedback.push(Feedback {
                context: context.clone(),
                action_id,
                loss,
            });
            records.push(InteractionRecord {
                t: self.t,
                context_id: context.id,
                policy_index: index,
                action_id,
                loss,
                dist_snapshot: law,
                cf_cb_reward: None,
                cf_llm_reward: None,
                cf_shadow_reward: None,
            });
        }

        // Every policy sees the whole batch, whoever acted; learnable
        // policies train on generator-produced data too.
        for entry in &mut self.roster {
            entry.policy.update(&feedback)?;
        }
        for (index, loss, prob) in strategy_steps {
            self.strategy.update(index, loss, prob)?;
        }
        Ok(records)
    }

    /// Convenience wrapper: a batch of exactly one example.
    pub fn run_round<F>(
        &mut self,
        context: &Context,
        policy_rngs: &mut [ChaCha12Rng],
        sample_rng: &mut ChaCha12Rng,
        observe: F,
    ) -> Result<InteractionRecord>
    where
        F: FnMut(&Context, usize) -> Result<LossValue>,
    {
        let mut records =
            self.run_batch(std::slice::from_ref(context), policy_rngs, sample_rng, observe)?;
        Ok(records.pop().expect("one-example batch yields one record"))
    }
}
