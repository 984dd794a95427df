//! Deterministic stand-in generator with a tunable accuracy knob.

use std::collections::HashMap;

use rand::Rng;

use crate::llm::backend::{GeneratorBackend, GeneratorOutput, OutputEntry};
use crate::rng::content_stream;
use crate::{Error, Result};

/// A seeded test-double generator that knows each prompt's correct
/// actions and answers correctly with a configured probability.
///
/// For each prompt the oracle draws from a stream keyed by (seed, prompt),
/// so its output is a pure function of (seed, prompt, k): the same prompt
/// always gets the same response, which is what makes the resulting policy
/// stationary. With probability `accuracy` the rank-1 output is the text
/// of the lowest correct action id at likelihood 0.9; otherwise rank 1 is
/// a wrong action. Later ranks are wrong actions drawn uniformly without
/// replacement, with likelihoods decaying geometrically by halves. When
/// the wrong-action pool runs out, remaining ranks repeat the correct
/// text.
pub struct SyntheticOracle {
    id: String,
    seed: u64,
    accuracy: f64,
    action_texts: Vec<String>,
    truth: HashMap<String, Vec<usize>>,
}

impl SyntheticOracle {
    /// Builds an oracle over the given action texts and per-prompt truth.
    ///
    /// `truth` maps a full rendered prompt to the nonempty list of correct
    /// action ids for that prompt.
    pub fn new(
        seed: u64,
        accuracy: f64,
        action_texts: Vec<String>,
        truth: HashMap<String, Vec<usize>>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::Config(format!(
                "oracle accuracy must lie in [0, 1], got {accuracy}"
            )));
        }
        if action_texts.is_empty() {
            return Err(Error::Config("oracle needs at least one action text".into()));
        }
        for (prompt, ids) in &truth {
            if ids.is_empty() {
                return Err(Error::Config(format!(
                    "prompt has an empty correct-id list: {prompt}"
                )));
            }
            if let Some(&bad) = ids.iter().find(|&&id| id >= action_texts.len()) {
                return Err(Error::Config(format!(
                    "correct id {bad} is outside the {} known actions",
                    action_texts.len()
                )));
            }
        }
        Ok(Self {
            id: format!("synthetic-oracle:{seed}:{accuracy}"),
            seed,
            accuracy,
            action_texts,
            truth,
        })
    }
}

impl GeneratorBackend for SyntheticOracle {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        if k == 0 {
            return Err(Error::Config("generator k must be at least 1".into()));
        }
        let correct_ids = self.truth.get(prompt).ok_or_else(|| {
            Error::Backend(format!("no recorded truth for prompt: {prompt}"))
        })?;
        let correct = *correct_ids.iter().min().expect("truth lists are nonempty");

        let mut rng = content_stream(self.seed, &[b"synthetic-oracle", prompt.as_bytes()]);
        let answer_correctly = rng.random::<f64>() < self.accuracy;

        let mut wrong_pool: Vec<usize> = (0..self.action_texts.len())
            .filter(|id| !correct_ids.contains(id))
            .collect();
        let mut draw_wrong = |rng: &mut rand_chacha::ChaCha12Rng| -> Option<usize> {
            if wrong_pool.is_empty() {
                return None;
            }
            let at = rng.random_range(0..wrong_pool.len());
            Some(wrong_pool.swap_remove(at))
        };

        let mut entries = Vec::with_capacity(k);
        for rank in 0..k {
            let id = if rank == 0 && answer_correctly {
                correct
            } else {
                draw_wrong(&mut rng).unwrap_or(correct)
            };
            entries.push(OutputEntry {
                text: self.action_texts[id].clone(),
                likelihood: 0.9 * 0.5_f64.powi(rank as i32),
            });
        }
        GeneratorOutput::new(entries)
    }
}
