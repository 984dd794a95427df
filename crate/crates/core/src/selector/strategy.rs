//! Pluggable selection strategies: adaptive mirror descent or a
//! deterministic decay schedule.

use serde::{Deserialize, Serialize};

use crate::selector::corral::CorralState;
use crate::selector::schedule::ScheduleParams;
use crate::types::{PolicyGroup, SamplingDistribution};
use crate::Result;

/// Strategy configuration as it appears in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    /// Log-barrier mirror descent with learning rate `eta`.
    Corral { eta: f64 },
    /// Polynomial decay `c / t^alpha` of the generator group's mass,
    /// clamped into `[p_min, p_max]`.
    Poly { c: f64, alpha: f64, p_min: f64, p_max: f64 },
    /// Exponential decay `c * exp(-beta t)`, clamped into `[p_min, p_max]`.
    Exp { c: f64, beta: f64, p_min: f64, p_max: f64 },
}

impl StrategyConfig {
    /// The schedule this config describes, when it is schedule-driven.
    pub fn schedule_params(&self) -> Result<Option<ScheduleParams>> {
        match *self {
            StrategyConfig::Corral { .. } => Ok(None),
            StrategyConfig::Poly { c, alpha, p_min, p_max } => {
                Ok(Some(ScheduleParams::poly(c, alpha, p_min, p_max)?))
            }
            StrategyConfig::Exp { c, beta, p_min, p_max } => {
                Ok(Some(ScheduleParams::exp(c, beta, p_min, p_max)?))
            }
        }
    }
}

/// A live selection strategy over a fixed policy roster.
#[derive(Debug, Clone)]
pub enum Strategy {
    Corral(CorralState),
    Schedule { params: ScheduleParams, groups: Vec<PolicyGroup> },
}

impl Strategy {
    /// Builds the strategy for a roster described by its group labels.
    /// Mirror descent starts from the uniform distribution.
    pub fn new(config: &StrategyConfig, groups: &[PolicyGroup]) -> Result<Self> {
        match config.schedule_params()? {
            None => {
                let StrategyConfig::Corral { eta } = *config else { unreachable!() };
                let dist = SamplingDistribution::uniform(groups.to_vec())?;
                Ok(Strategy::Corral(CorralState::new(dist, eta)?))
            }
            Some(params) => Ok(Strategy::Schedule { params, groups: groups.to_vec() }),
        }
    }

    /// The raw (pre-smoothing, pre-budget) distribution for 1-based step `t`.
    pub fn base_distribution(&self, t: u64) -> Result<SamplingDistribution> {
        match self {
            Strategy::Corral(state) => Ok(state.dist().clone()),
            Strategy::Schedule { params, groups } => {
                let llm_total = params.prob(t);
                crate::selector::sampling::allocate_groups(groups, 1.0 - llm_total, llm_total)
            }
        }
    }

    /// Feeds back one observed loss. `sampled_prob` is the probability the
    /// index had under the law actually sampled from. Schedules ignore
    /// feedback entirely.
    pub fn update(&mut self, sampled_index: usize, loss: f64, sampled_prob: f64) -> Result<()> {
        match self {
            Strategy::Corral(state) => state.update_weighted(sampled_index, loss, sampled_prob),
            Strategy::Schedule { .. } => Ok(()),
        }
    }

    /// The mirror-descent state, when this strategy has one.
    pub fn corral_state(&self) -> Option<&CorralState> {
        match self {
            Strategy::Corral(state) => Some(state),
            Strategy::Schedule { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::schedule::ScheduleKind;

    use PolicyGroup::{Cb, Llm};

    #[test]
    fn corral_starts_uniform_and_adapts() {
        let mut s = Strategy::new(&StrategyConfig::Corral { eta: 0.05 }, &[Cb, Llm]).unwrap();
        let d = s.base_distribution(1).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);

        // Punishing index 1 moves mass toward index 0.
        s.update(1, 1.0, 0.5).unwrap();
        let d = s.base_distribution(2).unwrap();
        assert!(d.prob(0) > 0.5);
        assert!(d.prob(1) < 0.5);
    }

    #[test]
    fn schedule_follows_decay_and_ignores_feedback() {
        let config = StrategyConfig::Poly { c: 1.0, alpha: 1.0, p_min: 0.1, p_max: 0.8 };
        let mut s = Strategy::new(&config, &[Cb, Llm, Llm]).unwrap();

        let d1 = s.base_distribution(1).unwrap();
        assert!((d1.llm_total() - 0.8).abs() < 1e-12);
        assert!((d1.prob(1) - 0.4).abs() < 1e-12);

        s.update(0, 1.0, d1.prob(0)).unwrap();
        let d2 = s.base_distribution(2).unwrap();
        assert!((d2.llm_total() - 0.5).abs() < 1e-12);
        assert!(s.corral_state().is_none());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c: StrategyConfig = serde_json::from_str(r#"{"kind":"corral","eta":0.05}"#).unwrap();
        assert_eq!(c, StrategyConfig::Corral { eta: 0.05 });

        let text = r#"{"kind":"poly","c":1.0,"alpha":0.5,"p_min":0.02,"p_max":0.9}"#;
        let c: StrategyConfig = serde_json::from_str(text).unwrap();
        let expected = StrategyConfig::Poly { c: 1.0, alpha: 0.5, p_min: 0.02, p_max: 0.9 };
        assert_eq!(c, expected);
        let back = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<StrategyConfig>(&back).unwrap(), expected);

        let params = c.schedule_params().unwrap().unwrap();
        assert_eq!(params.kind, ScheduleKind::Poly { c: 1.0, alpha: 0.5 });

        // Misspelled keys are rejected rather than ignored.
        let bad = r#"{"kind":"exp","c":1.0,"betaa":0.5,"p_min":0.0,"p_max":1.0}"#;
        assert!(serde_json::from_str::<StrategyConfig>(bad).is_err());
    }
}
