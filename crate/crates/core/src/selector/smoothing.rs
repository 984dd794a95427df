//! Smoothing of the mirror-descent distribution before sampling.
//!
//! Smoothing changes only the law examples are drawn from; the underlying
//! mirror-descent state is updated with importance weights taken from the
//! smoothed law, never overwritten by it.

use serde::{Deserialize, Serialize};

use crate::types::{PolicyGroup, SamplingDistribution};
use crate::{Error, Result};

/// How to transform the raw distribution into the sampling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// Sample the raw distribution as-is.
    None,
    /// Guarantee the learnable group at least `p_min` total mass.
    Clip { p_min: f64 },
    /// Mix with the uniform distribution: `(1 - gamma) * p + gamma / M`.
    Mix { gamma: f64 },
}

impl Smoothing {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Smoothing::None => Ok(()),
            Smoothing::Clip { p_min } => {
                if (0.0..1.0).contains(&p_min) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("clip p_min must be in [0, 1), got {p_min}")))
                }
            }
            Smoothing::Mix { gamma } => {
                if (0.0..=1.0).contains(&gamma) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("mix gamma must be in [0, 1], got {gamma}")))
                }
            }
        }
    }

    /// Applies the smoothing and returns the sampling law.
    pub fn apply(&self, dist: &SamplingDistribution) -> Result<SamplingDistribution> {
        match *self {
            Smoothing::None => Ok(dist.clone()),
            Smoothing::Clip { p_min } => smooth_clip(dist, p_min),
            Smoothing::Mix { gamma } => smooth_mix(dist, gamma),
        }
    }
}

/// Rescales `probs` so the entries whose group matches `group` sum to
/// `target`. A zero-mass group is split uniformly across its members.
pub(crate) fn rescale_group(
    probs: &mut [f64],
    groups: &[PolicyGroup],
    group: PolicyGroup,
    target: f64,
) {
    let members: Vec<usize> = (0..probs.len()).filter(|&i| groups[i] == group).collect();
    if members.is_empty() {
        return;
    }
    let current: f64 = members.iter().map(|&i| probs[i]).sum();
    if current > 0.0 {
        let scale = target / current;
        for &i in &members {
            probs[i] *= scale;
        }
    } else {
        let share = target / members.len() as f64;
        for &i in &members {
            probs[i] = share;
        }
    }
}

/// If the learnable group's total mass falls below `p_min`, lifts it to
/// exactly `p_min` and gives the generator group the remainder, rescaling
/// proportionally within each group. Above the floor the distribution is
/// unchanged.
pub fn smooth_clip(dist: &SamplingDistribution, p_min: f64) -> Result<SamplingDistribution> {
    if !(0.0..1.0).contains(&p_min) {
        return Err(Error::Config(format!("clip p_min must be in [0, 1), got {p_min}")));
    }
    let cb_total = dist.cb_total();
    if !dist.has_group(PolicyGroup::Cb) || !dist.has_group(PolicyGroup::Llm) || cb_total >= p_min {
        return Ok(dist.clone());
    }
    let mut probs = dist.probs().to_vec();
    rescale_group(&mut probs, dist.groups(), PolicyGroup::Cb, p_min);
    rescale_group(&mut probs, dist.groups(), PolicyGroup::Llm, 1.0 - p_min);
    dist.with_probs(probs)
}

/// Mixes with the uniform distribution over all `M` policies:
/// `(1 - gamma) * p_i + gamma / M`.
pub fn smooth_mix(dist: &SamplingDistribution, gamma: f64) -> Result<SamplingDistribution> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("mix gamma must be in [0, 1], got {gamma}")));
    }
    let m = dist.len() as f64;
    let probs = dist
        .probs()
        .iter()
        .map(|&p| (1.0 - gamma) * p + gamma / m)
        .collect();
    dist.with_probs(probs)
}
