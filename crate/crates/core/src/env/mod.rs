//! Contextual-bandit environments with binary loss.
//!
//! An environment is an action space plus a stream of labeled records.
//! Playing a correct action costs 0, anything else costs 1, and the
//! optimal policy always has a correct action available, so a learner's
//! cumulative loss equals its regret. Records are streamed in seeded,
//! shuffled batches.

pub mod batches;
pub mod dataset;
pub mod synthetic;

pub use batches::batch_indices;
pub use dataset::{load_dataset, save_dataset};
pub use synthetic::{bilinear_best_action, make_synthetic, SyntheticSpec};

use std::path::PathBuf;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::types::{ActionSpace, Context, LossValue};
use crate::{Error, Result};

/// One labeled example: a context and the nonempty set of action ids
/// that cost nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub context: Context,
    pub correct_ids: Vec<usize>,
}

/// Binary loss: 0 for a correct action, 1 otherwise. A pure function of
/// the record's label set and the played action.
pub fn step(record: &DatasetRecord, action_id: usize) -> LossValue {
    if record.correct_ids.contains(&action_id) {
        LossValue::ZERO
    } else {
        LossValue::ONE
    }
}

fn default_batch_size() -> usize {
    32
}

fn default_epochs() -> u32 {
    1
}

/// Where the environment's data comes from and how it is streamed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    /// Load precomputed actions and records from JSON-lines files.
    JsonlDataset {
        actions: PathBuf,
        records: PathBuf,
        horizon: u64,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
        #[serde(default = "default_epochs")]
        epochs: u32,
    },
    /// Generate a seeded bilinear environment in memory.
    SyntheticBilinear {
        context_dim: usize,
        action_dim: usize,
        num_actions: usize,
        num_records: usize,
        /// Environment seed, fixed across run seeds so every run faces
        /// the same decision problem.
        data_seed: u64,
        horizon: u64,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
        #[serde(default = "default_epochs")]
        epochs: u32,
    },
}

/// A fully materialized environment: read-only after construction.
pub struct Env {
    actions: ActionSpace,
    records: Vec<DatasetRecord>,
    horizon: u64,
    batch_size: usize,
    epochs: u32,
}

impl Env {
    pub fn build(config: &EnvironmentConfig) -> Result<Self> {
        let (actions, records, horizon, batch_size, epochs) = match config {
            EnvironmentConfig::JsonlDataset {
                actions,
                records,
                horizon,
                batch_size,
                epochs,
            } => {
                let (a, r) = load_dataset(actions, records)?;
                (a, r, *horizon, *batch_size, *epochs)
            }
            EnvironmentConfig::SyntheticBilinear {
                context_dim,
                action_dim,
                num_actions,
                num_records,
                data_seed,
                horizon,
                batch_size,
                epochs,
            } => {
                let spec = SyntheticSpec {
                    context_dim: *context_dim,
                    action_dim: *action_dim,
                    num_actions: *num_actions,
                    num_records: *num_records,
                    seed: *data_seed,
                };
                let (a, r) = make_synthetic(&spec)?;
                (a, r, *horizon, *batch_size, *epochs)
            }
        };
        if batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if horizon > records.len() as u64 * epochs as u64 {
            return Err(Error::Config(format!(
                "horizon {horizon} exceeds {} records x {epochs} epochs",
                records.len()
            )));
        }
        Ok(Self { actions, records, horizon, batch_size, epochs })
    }

    pub fn actions(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> &DatasetRecord {
        &self.records[index]
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Embedding dimension of the contexts, or `None` when there are no
    /// records to read it from.
    pub fn context_dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.context.embedding.len())
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Plans this run's shuffled batches from the given stream.
    pub fn plan_batches(&self, rng: &mut ChaCha12Rng) -> Result<Vec<Vec<usize>>> {
        batch_indices(self.records.len(), self.horizon, self.batch_size, self.epochs, rng)
    }

    /// Gathers the contexts for one planned batch.
    pub fn contexts_for(&self, batch: &[usize]) -> Vec<Context> {
        batch.iter().map(|&i| self.records[i].context.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn record(correct_ids: Vec<usize>) -> DatasetRecord {
        DatasetRecord {
            context: Context { id: 0, text: "t".into(), embedding: vec![1.0] },
            correct_ids,
        }
    }

    #[test]
    fn loss_is_binary_on_membership() {
        assert_eq!(step(&record(vec![3]), 3), LossValue::ZERO);
        assert_eq!(step(&record(vec![3]), 5), LossValue::ONE);
        assert_eq!(step(&record(vec![2, 7]), 7), LossValue::ZERO);
        assert_eq!(step(&record(vec![2, 7]), 3), LossValue::ONE);
    }

    #[test]
    fn synthetic_config_builds_and_streams() {
        let config: EnvironmentConfig = serde_json::from_str(
            r#"{"source":"synthetic_bilinear","context_dim":4,"action_dim":4,
                "num_actions":6,"num_records":100,"data_seed":9,"horizon":100}"#,
        )
        .unwrap();
        let env = Env::build(&config).unwrap();
        assert_eq!(env.batch_size(), 32);
        assert_eq!(env.actions().len(), 6);

        let batches = env.plan_batches(&mut stream(1, "environment")).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![32, 32, 32, 4]);

        let contexts = env.contexts_for(&batches[0]);
        assert_eq!(contexts.len(), 32);
        assert_eq!(contexts[0], env.record(batches[0][0]).context);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_horizons() {
        assert!(serde_json::from_str::<EnvironmentConfig>(
            r#"{"source":"synthetic_bilinear","context_dim":4,"action_dim":4,
                "num_actions":6,"num_records":10,"data_seed":9,"horizon":10,"typo":1}"#,
        )
        .is_err());

        let config: EnvironmentConfig = serde_json::from_str(
            r#"{"source":"synthetic_bilinear","context_dim":4,"action_dim":4,
                "num_actions":6,"num_records":10,"data_seed":9,"horizon":11}"#,
        )
        .unwrap();
        assert!(Env::build(&config).is_err());
    }

    #[test]
    fn dataset_config_round_trips_through_files() {
        let spec = SyntheticSpec {
            context_dim: 3,
            action_dim: 3,
            num_actions: 4,
            num_records: 20,
            seed: 2,
        };
        let (actions, records) = make_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("actions.jsonl");
        let r = dir.path().join("records.jsonl");
        save_dataset(&a, &r, &actions, &records).unwrap();

        let config = EnvironmentConfig::JsonlDataset {
            actions: a,
            records: r,
            horizon: 20,
            batch_size: 8,
            epochs: 1,
        };
        let env = Env::build(&config).unwrap();
        assert_eq!(env.actions(), &actions);
        assert_eq!(env.records().len(), 20);
        assert_eq!(env.horizon(), 20);
    }
}
