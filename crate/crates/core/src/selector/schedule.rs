//! Deterministic decay schedules for the total probability assigned to
//! generator-backed policies.
//!
//! A schedule maps the 1-based step index `t` to the probability mass the
//! generator group receives; the learnable group gets the remainder. Both
//! families are clamped into `[p_min, p_max]`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Decay family for the generator-group probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `c / t^alpha`.
    Poly { c: f64, alpha: f64 },
    /// `c * exp(-beta * t)`.
    Exp { c: f64, beta: f64 },
}

/// A clamped decay schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub p_min: f64,
    pub p_max: f64,
}

impl ScheduleParams {
    pub fn poly(c: f64, alpha: f64, p_min: f64, p_max: f64) -> Result<Self> {
        Self::new(ScheduleKind::Poly { c, alpha }, p_min, p_max)
    }

    pub fn exp(c: f64, beta: f64, p_min: f64, p_max: f64) -> Result<Self> {
        Self::new(ScheduleKind::Exp { c, beta }, p_min, p_max)
    }

    pub fn new(kind: ScheduleKind, p_min: f64, p_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_min) || !(0.0..=1.0).contains(&p_max) || p_min > p_max {
            return Err(Error::Config(format!(
                "schedule bounds must satisfy 0 <= p_min <= p_max <= 1, got [{p_min}, {p_max}]"
            )));
        }
        let ok = match kind {
            ScheduleKind::Poly { c, alpha } => c >= 0.0 && alpha >= 0.0,
            ScheduleKind::Exp { c, beta } => c >= 0.0 && beta >= 0.0,
        };
        if !ok {
            return Err(Error::Config(
                "schedule coefficients must be non-negative".into(),
            ));
        }
        Ok(Self { kind, p_min, p_max })
    }

    /// Generator-group probability at 1-based step `t`.
    pub fn prob(&self, t: u64) -> f64 {
        assert!(t >= 1, "schedule steps are 1-based");
        let raw = match self.kind {
            ScheduleKind::Poly { c, alpha } => c / (t as f64).powf(alpha),
            ScheduleKind::Exp { c, beta } => c * (-beta * t as f64).exp(),
        };
        raw.clamp(self.p_min, self.p_max)
    }

    /// Expected number of generator calls over a horizon of `t_max` steps:
    /// the sum of the scheduled probability at each step.
    pub fn expected_generator_calls(&self, t_max: u64) -> f64 {
        (1..=t_max).map(|t| self.prob(t)).sum()
    }
}
