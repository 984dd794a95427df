//! Categorical sampling over policy distributions.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::types::{PolicyGroup, SamplingDistribution};
use crate::{Error, Result};

/// Draws one index by inverse CDF over `dist`: a single uniform draw is
/// walked through the cumulative probabilities. Rounding shortfall at the
/// top of the CDF falls back to the last index with positive mass.
pub fn sample_index(dist: &SamplingDistribution, rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    last_positive
}

/// Builds a distribution that gives each group a fixed total, split
/// uniformly across that group's members. Used by schedule-driven
/// selection, where only group totals are prescribed.
pub fn allocate_groups(
    groups: &[PolicyGroup],
    cb_total: f64,
    llm_total: f64,
) -> Result<SamplingDistribution> {
    if (cb_total + llm_total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "group totals must sum to 1, got {cb_total} + {llm_total}"
        )));
    }
    let n_cb = groups.iter().filter(|&&g| g == PolicyGroup::Cb).count();
    let n_llm = groups.len() - n_cb;
    if n_cb == 0 && cb_total > 0.0 {
        return Err(Error::Config("no learnable policies to receive mass".into()));
    }
    if n_llm == 0 && llm_total > 0.0 {
        return Err(Error::Config("no generator policies to receive mass".into()));
    }
    let probs = groups
        .iter()
        .map(|&g| match g {
            PolicyGroup::Cb => cb_total / n_cb as f64,
            PolicyGroup::Llm => llm_total / n_llm as f64,
        })
        .collect();
    SamplingDistribution::new(probs, groups.to_vec())
}
