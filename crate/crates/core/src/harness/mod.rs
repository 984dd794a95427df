//! Experiment runner: builds the policy roster from a config, drives the
//! batched interaction loop over an environment, tracks hypothetical
//! (counterfactual) reward curves without touching the main trajectory,
//! and persists records, metrics, and summaries per seed.

mod config;
mod csv_io;
mod metrics;

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub use config::{BackendConfig, ExperimentConfig, PolicyConfig, CONFIG_SCHEMA};
pub use csv_io::{
    emit_aggregate_csv, emit_csv, read_aggregate_csv, read_metrics_csv, AGGREGATE_COLUMNS,
    METRICS_COLUMNS,
};
pub use metrics::{
    aggregate_seeds, AggregatePoint, AggregateSeries, AggregateSummary, MetricsBuilder,
    MetricsPoint, MetricsSeries, Summary,
};

use crate::bandit::SpannerGreedy;
use crate::env::{step, DatasetRecord, Env};
use crate::llm::{
    render_prompt, CachingBackend, GeneratorBackend, HashEmbedder, LlmPolicy, RemoteBackend,
    ReplayBackend, ResponseCache, SyntheticOracle,
};
use crate::policy::{BasePolicy, Feedback, RosterEntry};
use crate::rng::{stable_hash64, stream};
use crate::selector::Orchestrator;
use crate::types::{Context, InteractionRecord, PolicyGroup};
use crate::{Error, Result};

/// Per-step rows are kept every this many steps, plus the exact final
/// step, to bound file sizes on long horizons.
pub const METRICS_INTERVAL: u64 = 64;

/// One seed's result, paired with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub series: MetricsSeries,
}

/// Metrics file for one seed inside an output directory.
pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed_{seed}.csv"))
}

/// Interaction-record file for one seed inside an output directory.
pub fn records_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("records_seed_{seed}.jsonl"))
}

/// Summary file for one seed inside an output directory.
pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed_{seed}.json"))
}

#[derive(Debug, Serialize, Deserialize)]
struct SeedSummaryFile {
    seed: u64,
    summary: Summary,
}

/// Rewards the learnable base's greedy action and the generator policy's
/// sampled action would have earned on this record. Neither policy is
/// updated; an undecided or failing policy earns zero.
pub fn track_counterfactual(
    record: &DatasetRecord,
    cb: &dyn BasePolicy,
    llm: &dyn BasePolicy,
    rng: &mut ChaCha12Rng,
) -> (f64, f64) {
    let cb_reward = greedy_reward(cb, record).unwrap_or(0.0);
    let llm_reward = acted_reward(llm, record, rng).unwrap_or(0.0);
    (cb_reward, llm_reward)
}

fn reward_for(record: &DatasetRecord, action_id: usize) -> f64 {
    1.0 - step(record, action_id).value()
}

fn greedy_reward(policy: &dyn BasePolicy, record: &DatasetRecord) -> Option<f64> {
    policy.greedy(&record.context).map(|a| reward_for(record, a))
}

fn acted_reward(
    policy: &dyn BasePolicy,
    record: &DatasetRecord,
    rng: &mut ChaCha12Rng,
) -> Option<f64> {
    match policy.act(&record.context, rng) {
        Ok(a) => Some(reward_for(record, a)),
        Err(e) => {
            log::debug!(
                "hypothetical action by `{}` failed: {e}; counting zero reward",
                policy.stream_name()
            );
            None
        }
    }
}

/// Feeds `shadow` only the steps whose sampled policy was in the
/// generator group, in step order. `contexts` and `records` must be the
/// batch the records came from.
pub fn train_shadow_bandit(
    shadow: &mut dyn BasePolicy,
    contexts: &[Context],
    records: &[InteractionRecord],
    groups: &[PolicyGroup],
) -> Result<()> {
    if contexts.len() != records.len() {
        return Err(Error::Config(format!(
            "got {} contexts for {} records",
            contexts.len(),
            records.len()
        )));
    }
    let mut feedback = Vec::new();
    for (context, record) in contexts.iter().zip(records) {
        let group = *groups.get(record.policy_index).ok_or_else(|| {
            Error::Config(format!(
                "record at step {} names policy {} outside the roster",
                record.t, record.policy_index
            ))
        })?;
        if group == PolicyGroup::Llm {
            feedback.push(Feedback {
                context: context.clone(),
                action_id: record.action_id,
                loss: record.loss,
            });
        }
    }
    if feedback.is_empty() {
        return Ok(());
    }
    shadow.update(&feedback)
}

struct BuiltRoster {
    entries: Vec<RosterEntry>,
    /// A second copy of the first learnable policy, trained only on
    /// generator-sampled steps.
    shadow: Option<SpannerGreedy>,
    /// Whether the generator's hypothetical action is evaluated per
    /// step. Disabled for live endpoints, where every evaluation would
    /// be a paid call.
    cf_llm_enabled: bool,
}

fn build_backend(
    backend: &BackendConfig,
    style: crate::llm::PromptStyle,
    env: &Env,
) -> Result<Box<dyn GeneratorBackend>> {
    match backend {
        BackendConfig::SyntheticOracle { accuracy, oracle_seed } => {
            let texts: Vec<String> =
                env.actions().iter().map(|a| a.text.clone()).collect();
            let mut truth: HashMap<String, Vec<usize>> = HashMap::new();
            for record in env.records() {
                let prompt = render_prompt(style, &record.context.text);
                match truth.entry(prompt) {
                    Entry::Vacant(slot) => {
                        slot.insert(record.correct_ids.clone());
                    }
                    Entry::Occupied(existing) => {
                        if existing.get() != &record.correct_ids {
                            log::warn!(
                                "context {} renders to a prompt already seen with \
                                 different correct actions; keeping the first",
                                record.context.id
                            );
                        }
                    }
                }
            }
            Ok(Box::new(SyntheticOracle::new(*oracle_seed, *accuracy, texts, truth)?))
        }
        BackendConfig::Replay { cache, recorded_id } => {
            let cache = Arc::new(ResponseCache::open(cache)?);
            Ok(Box::new(ReplayBackend::new(cache, recorded_id.clone())))
        }
        BackendConfig::Remote { config, cache } => {
            let remote = RemoteBackend::new(config.clone())?;
            match cache {
                Some(path) => {
                    let cache = Arc::new(ResponseCache::open(path)?);
                    Ok(Box::new(CachingBackend::new(remote, cache)))
                }
                None => Ok(Box::new(remote)),
            }
        }
    }
}

/// Instantiates the roster. Learnable policies are named `cb0, cb1, ...`
/// and generator-backed ones `llm0, llm1, ...` by group position, so a
/// policy keeps its RNG stream when the rest of the roster changes.
fn build_roster(config: &ExperimentConfig, env: &Env, seed: u64) -> Result<BuiltRoster> {
    let context_dim = env.context_dim().unwrap_or_else(|| env.actions().dim());
    let mut entries = Vec::with_capacity(config.roster.len());
    let mut shadow = None;
    let mut cf_llm_enabled = false;
    let mut cb_count = 0usize;
    let mut llm_count = 0usize;

    for policy_config in &config.roster {
        match policy_config {
            PolicyConfig::Bandit { params } => {
                let name = format!("cb{cb_count}");
                cb_count += 1;
                let reduction_seed = stable_hash64(seed, &[b"reduction", name.as_bytes()]);
                let policy =
                    SpannerGreedy::new(&name, env.actions(), context_dim, params, reduction_seed)?;
                if shadow.is_none() {
                    // Same construction as the policy it mirrors, so that
                    // training both on the same data gives equal models.
                    shadow = Some(SpannerGreedy::new(
                        "shadow0",
                        env.actions(),
                        context_dim,
                        params,
                        reduction_seed,
                    )?);
                }
                entries.push(RosterEntry { policy: Box::new(policy), group: PolicyGroup::Cb });
            }
            PolicyConfig::Generator { backend, k, style, embed_dim, embed_seed } => {
                let name = format!("llm{llm_count}");
                llm_count += 1;
                if llm_count == 1 {
                    cf_llm_enabled = !matches!(backend, BackendConfig::Remote { .. });
                }
                let backend = build_backend(backend, *style, env)?;
                let embedder = Box::new(HashEmbedder::new(*embed_dim, *embed_seed));
                let policy = LlmPolicy::new(&name, backend, embedder, *style, *k, env.actions())?;
                entries.push(RosterEntry { policy: Box::new(policy), group: PolicyGroup::Llm });
            }
        }
    }

    Ok(BuiltRoster { entries, shadow, cf_llm_enabled })
}

/// Runs one seed of the experiment to the configured horizon.
///
/// Every interaction record is appended to a JSON-lines file as its
/// batch completes, so an aborted run keeps what it finished. Metrics
/// and the summary are written even when the loop errors out; the error
/// is then returned. Given the same config and seed, two runs produce
/// byte-identical outputs (live endpoints excepted).
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<MetricsSeries> {
    config.validate()?;
    let env = Env::build(&config.environment)?;
    let built = build_roster(config, &env, seed)?;
    let groups: Vec<PolicyGroup> = built.entries.iter().map(|e| e.group).collect();
    let stream_names: Vec<String> =
        built.entries.iter().map(|e| e.policy.stream_name().to_string()).collect();
    let cb_index = groups.iter().position(|&g| g == PolicyGroup::Cb);
    let llm_index = groups.iter().position(|&g| g == PolicyGroup::Llm);
    let mut shadow = built.shadow;

    let mut orch =
        Orchestrator::new(built.entries, &config.strategy, config.smoothing, config.budget)?;

    let mut sampling_rng = stream(seed, "sampling");
    let mut env_rng = stream(seed, "environment-shuffle");
    let mut cf_rng = stream(seed, "counterfactual");
    let mut policy_rngs: Vec<ChaCha12Rng> =
        stream_names.iter().map(|name| stream(seed, name)).collect();

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(config.output_dir.display().to_string(), e))?;
    let records_file = records_path(&config.output_dir, seed);
    let mut sink = BufWriter::new(
        std::fs::File::create(&records_file).map_err(|e| Error::io(records_file.display().to_string(), e))?,
    );

    let batches = env.plan_batches(&mut env_rng)?;
    let mut builder =
        MetricsBuilder::new(METRICS_INTERVAL, cb_index.is_some(), shadow.is_some());

    let loop_result = (|| -> Result<()> {
        for batch in &batches {
            let contexts = env.contexts_for(batch);

            // Hypothetical rewards under the state the batch starts
            // with. Policies only update after the whole batch, so
            // these match what each example sees.
            let mut cf = Vec::with_capacity(batch.len());
            for &record_index in batch {
                let record = env.record(record_index);
                let cf_cb =
                    cb_index.and_then(|i| greedy_reward(orch.policy(i), record));
                let cf_llm = llm_index.filter(|_| built.cf_llm_enabled).and_then(|i| {
                    acted_reward(orch.policy(i), record, &mut cf_rng)
                });
                let cf_shadow =
                    shadow.as_ref().and_then(|s| greedy_reward(s, record));
                cf.push((cf_cb, cf_llm, cf_shadow));
            }

            let mut pos = 0usize;
            let mut records =
                orch.run_batch(&contexts, &mut policy_rngs, &mut sampling_rng, |context, action| {
                    let record = env.record(batch[pos]);
                    debug_assert_eq!(record.context.id, context.id);
                    pos += 1;
                    Ok(step(record, action))
                })?;

            for (record, &(cf_cb, cf_llm, cf_shadow)) in records.iter_mut().zip(&cf) {
                record.cf_cb_reward = cf_cb;
                record.cf_llm_reward = cf_llm;
                record.cf_shadow_reward = cf_shadow;
                serde_json::to_writer(&mut sink, record)?;
                sink.write_all(b"\n").map_err(|e| Error::io(records_file.display().to_string(), e))?;
                builder.push_step(
                    1.0 - record.loss.value(),
                    record.dist_snapshot.cb_total(),
                    groups[record.policy_index] == PolicyGroup::Llm,
                    cf_cb,
                    cf_shadow,
                );
            }

            if let Some(shadow) = shadow.as_mut() {
                train_shadow_bandit(shadow, &contexts, &records, &groups)?;
            }
            sink.flush().map_err(|e| Error::io(records_file.display().to_string(), e))?;
        }
        Ok(())
    })();

    sink.flush().map_err(|e| Error::io(records_file.display().to_string(), e))?;
    let series = builder.finish();
    emit_csv(&series, metrics_path(&config.output_dir, seed))?;
    let summary_file = summary_path(&config.output_dir, seed);
    let summary_text =
        serde_json::to_string_pretty(&SeedSummaryFile { seed, summary: series.summary })?;
    std::fs::write(&summary_file, summary_text).map_err(|e| Error::io(summary_file.display().to_string(), e))?;

    loop_result?;
    Ok(series)
}

/// Runs every configured seed, one thread each, and returns the outcomes
/// in the config's seed order.
pub fn run_seeds(config: &ExperimentConfig) -> Result<Vec<SeedOutcome>> {
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    run_experiment(config, seed).map(|series| SeedOutcome { seed, series })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|handle| {
                handle
                    .join()
                    .unwrap_or_else(|_| Err(Error::Config("a seed worker panicked".into())))
            })
            .collect()
    })
}

/// Reads every `metrics_seed_*.csv` in a run directory and aggregates
/// them, returning the seeds found (ascending) alongside the result.
pub fn aggregate_run_dir(dir: &Path) -> Result<(Vec<u64>, AggregateSeries)> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(stem) = name.strip_prefix("metrics_seed_") else { continue };
        let Some(seed_text) = stem.strip_suffix(".csv") else { continue };
        let Ok(seed) = seed_text.parse::<u64>() else { continue };
        found.push((seed, entry.path()));
    }
    if found.is_empty() {
        return Err(Error::Config(format!(
            "no metrics_seed_*.csv files in {}",
            dir.display()
        )));
    }
    found.sort_by_key(|(seed, _)| *seed);

    let mut series = Vec::with_capacity(found.len());
    for (_, path) in &found {
        let points = read_metrics_csv(path)?;
        let summary = match points.last() {
            Some(last) => Summary {
                final_avg_reward: last.avg_reward,
                total_llm_calls: last.llm_calls_cum,
                call_fraction: last.llm_calls_cum as f64 / last.step as f64,
            },
            None => Summary::default(),
        };
        series.push(MetricsSeries { points, summary });
    }
    let seeds = found.into_iter().map(|(seed, _)| seed).collect();
    Ok((seeds, aggregate_seeds(&series)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ConstantPolicy;
    use crate::selector::{Smoothing, StrategyConfig};
    use crate::types::LossValue;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn base_config(dir: &Path) -> ExperimentConfig {
        serde_json::from_str(&format!(
            r#"{{
                "schema": "v1",
                "environment": {{
                    "source": "synthetic_bilinear",
                    "context_dim": 4, "action_dim": 4, "num_actions": 6,
                    "num_records": 120, "data_seed": 7, "horizon": 120, "batch_size": 8
                }},
                "roster": [
                    {{"type": "bandit"}},
                    {{"type": "generator",
                      "backend": {{"backend": "synthetic_oracle", "accuracy": 1.0}},
                      "style": "title_content"}}
                ],
                "strategy": {{"kind": "corral", "eta": 0.05}},
                "smoothing": {{"kind": "clip", "p_min": 0.2}},
                "seeds": [1],
                "output_dir": {:?}
            }}"#,
            dir.to_str().unwrap()
        ))
        .unwrap()
    }

    fn forced_generator_mass(config: &mut ExperimentConfig, mass: f64) {
        config.strategy = StrategyConfig::Poly {
            c: mass,
            alpha: 0.0,
            p_min: 0.0,
            p_max: mass,
        };
        config.smoothing = Smoothing::None;
    }

    fn read_records(path: &Path) -> Vec<InteractionRecord> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|line| serde_json::from_str(line).unwrap())
            .collect()
    }

    #[test]
    fn run_persists_records_metrics_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let config = base_config(dir.path());
        let series = run_experiment(&config, 1).unwrap();

        let records = read_records(&records_path(dir.path(), 1));
        assert_eq!(records.len(), 120);
        assert_eq!(records.last().unwrap().t, 120);

        let points = read_metrics_csv(metrics_path(dir.path(), 1)).unwrap();
        assert_eq!(points, series.points);
        let steps: Vec<u64> = points.iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![64, 120]);

        let summary_text =
            std::fs::read_to_string(summary_path(dir.path(), 1)).unwrap();
        let summary: SeedSummaryFile = serde_json::from_str(&summary_text).unwrap();
        assert_eq!(summary.seed, 1);
        assert_eq!(summary.summary, series.summary);

        // The logged call count is the number of generator-sampled
        // steps, and the running average matches a recompute from the
        // raw records.
        let llm_steps = records
            .iter()
            .filter(|r| r.dist_snapshot.groups()[r.policy_index] == PolicyGroup::Llm)
            .count() as u64;
        assert_eq!(series.summary.total_llm_calls, llm_steps);
        assert!(close(
            series.summary.call_fraction,
            llm_steps as f64 / 120.0,
            1e-15
        ));
        let reward_sum: f64 = records.iter().map(|r| 1.0 - r.loss.value()).sum();
        assert!(close(series.summary.final_avg_reward, reward_sum / 120.0, 1e-9));
        for point in &series.points {
            let prefix: f64 = records[..point.step as usize]
                .iter()
                .map(|r| 1.0 - r.loss.value())
                .sum();
            assert!(close(point.avg_reward, prefix / point.step as f64, 1e-9));
        }
    }

    #[test]
    fn identical_seeds_produce_byte_identical_outputs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let series_a = run_experiment(&base_config(dir_a.path()), 9).unwrap();
        let series_b = run_experiment(&base_config(dir_b.path()), 9).unwrap();
        assert_eq!(series_a, series_b);

        let metrics_a = std::fs::read(metrics_path(dir_a.path(), 9)).unwrap();
        let metrics_b = std::fs::read(metrics_path(dir_b.path(), 9)).unwrap();
        assert_eq!(metrics_a, metrics_b);
        let records_a = std::fs::read(records_path(dir_a.path(), 9)).unwrap();
        let records_b = std::fs::read(records_path(dir_b.path(), 9)).unwrap();
        assert_eq!(records_a, records_b);
    }

    #[test]
    fn zero_horizon_yields_an_empty_series_and_zero_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = base_config(dir.path());
        match &mut config.environment {
            crate::env::EnvironmentConfig::SyntheticBilinear { horizon, .. } => *horizon = 0,
            other => panic!("unexpected environment {other:?}"),
        }
        let series = run_experiment(&config, 1).unwrap();
        assert!(series.points.is_empty());
        assert_eq!(series.summary, Summary::default());
        assert!(read_records(&records_path(dir.path(), 1)).is_empty());
    }

    #[test]
    fn forcing_all_mass_onto_the_generator_trains_shadow_like_the_main_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = base_config(dir.path());
        forced_generator_mass(&mut config, 1.0);
        let series = run_experiment(&config, 3).unwrap();

        assert_eq!(series.summary.total_llm_calls, 120);
        assert!(close(series.summary.call_fraction, 1.0, 1e-15));
        // Every step carries generator feedback, so the shadow model and
        // the main learnable model see identical training data and their
        // hypothetical curves coincide exactly.
        for point in &series.points {
            assert_eq!(point.cf_cb_reward, point.cf_shadow_reward);
            assert_eq!(point.p_cb, 0.0);
        }
    }

    #[test]
    fn forcing_no_generator_mass_leaves_the_shadow_untrained() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = base_config(dir.path());
        forced_generator_mass(&mut config, 0.0);
        let series = run_experiment(&config, 3).unwrap();

        assert_eq!(series.summary.total_llm_calls, 0);
        let records = read_records(&records_path(dir.path(), 3));

        // An untrained bilinear model scores every action 0 and its
        // greedy choice stays action 0, so the shadow curve must equal
        // the running reward of always playing action 0.
        let env = Env::build(&config.environment).unwrap();
        let mut hits = 0u64;
        let mut by_step = Vec::new();
        for (i, record) in records.iter().enumerate() {
            let data = env
                .records()
                .iter()
                .find(|r| r.context.id == record.context_id)
                .unwrap();
            if data.correct_ids.contains(&0) {
                hits += 1;
            }
            by_step.push(hits as f64 / (i + 1) as f64);
        }
        for point in &series.points {
            let expected = by_step[point.step as usize - 1];
            assert!(close(point.cf_shadow_reward.unwrap(), expected, 1e-12));
        }
    }

    #[test]
    fn counterfactual_rewards_score_constant_policies() {
        let record = DatasetRecord {
            context: Context { id: 0, text: "t".into(), embedding: vec![1.0, 0.0] },
            correct_ids: vec![2],
        };
        let right = ConstantPolicy::new(2, "right");
        let wrong = ConstantPolicy::new(1, "wrong");
        let mut rng = stream(1, "cf-test");

        let (cb, llm) = track_counterfactual(&record, &right, &wrong, &mut rng);
        assert_eq!((cb, llm), (1.0, 0.0));
        let (cb, llm) = track_counterfactual(&record, &wrong, &wrong, &mut rng);
        assert_eq!((cb, llm), (0.0, 0.0));
    }

    #[test]
    fn shadow_training_filters_to_generator_sampled_steps() {
        let contexts: Vec<Context> = (0..3)
            .map(|i| Context { id: i, text: format!("c{i}"), embedding: vec![1.0, 0.0] })
            .collect();
        let dist = crate::types::SamplingDistribution::new(
            vec![0.5, 0.5],
            vec![PolicyGroup::Cb, PolicyGroup::Llm],
        )
        .unwrap();
        let records: Vec<InteractionRecord> = (0..3)
            .map(|i| InteractionRecord {
                t: i as u64 + 1,
                context_id: i,
                policy_index: if i == 1 { 1 } else { 0 },
                action_id: 0,
                loss: LossValue::new(1.0).unwrap(),
                dist_snapshot: dist.clone(),
                cf_cb_reward: None,
                cf_llm_reward: None,
                cf_shadow_reward: None,
            })
            .collect();
        let groups = [PolicyGroup::Cb, PolicyGroup::Llm];

        struct CountingPolicy {
            seen: usize,
        }
        impl BasePolicy for CountingPolicy {
            fn stream_name(&self) -> &str {
                "counting"
            }
            fn act(&self, _: &Context, _: &mut ChaCha12Rng) -> Result<usize> {
                Ok(0)
            }
            fn update(&mut self, batch: &[Feedback]) -> Result<()> {
                self.seen += batch.len();
                Ok(())
            }
        }

        let mut shadow = CountingPolicy { seen: 0 };
        train_shadow_bandit(&mut shadow, &contexts, &records, &groups).unwrap();
        assert_eq!(shadow.seen, 1);

        let mismatched = &contexts[..2];
        assert!(train_shadow_bandit(&mut shadow, mismatched, &records, &groups).is_err());
    }

    #[test]
    fn perfect_generator_with_adaptive_weights_nears_its_standalone_reward() {
        let dir = tempfile::tempdir().unwrap();
        let mut combined = base_config(dir.path());
        combined.smoothing = Smoothing::None;
        let combined_series = run_experiment(&combined, 5).unwrap();

        let solo_dir = tempfile::tempdir().unwrap();
        let mut solo = base_config(solo_dir.path());
        solo.output_dir = solo_dir.path().to_path_buf();
        solo.roster.remove(0);
        forced_generator_mass(&mut solo, 1.0);
        let solo_series = run_experiment(&solo, 5).unwrap();

        assert!(close(solo_series.summary.final_avg_reward, 1.0, 1e-15));
        // The margin absorbs the cost of the early steps the adaptive
        // weights give to the still-untrained learnable policy.
        assert!(
            combined_series.summary.final_avg_reward
                >= solo_series.summary.final_avg_reward - 0.25,
            "combined {} vs solo {}",
            combined_series.summary.final_avg_reward,
            solo_series.summary.final_avg_reward
        );
    }

    #[test]
    fn aborted_runs_still_flush_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let cache_path = dir.path().join("empty_cache.jsonl");
        std::fs::write(&cache_path, "").unwrap();

        let mut config = base_config(dir.path());
        config.roster = vec![PolicyConfig::Generator {
            backend: BackendConfig::Replay {
                cache: cache_path,
                recorded_id: "remote:m".into(),
            },
            k: 1,
            style: crate::llm::PromptStyle::TitleContent,
            embed_dim: 64,
            embed_seed: 0,
        }];
        forced_generator_mass(&mut config, 1.0);

        let err = run_experiment(&config, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        assert!(metrics_path(dir.path(), 1).exists());
        assert!(records_path(dir.path(), 1).exists());
        assert!(read_metrics_csv(metrics_path(dir.path(), 1)).unwrap().is_empty());
    }

    #[test]
    fn seeds_run_in_parallel_and_aggregate_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = base_config(dir.path());
        config.seeds = vec![1, 2, 3];
        let outcomes = run_seeds(&config).unwrap();
        assert_eq!(outcomes.len(), 3);
        assert_eq!(
            outcomes.iter().map(|o| o.seed).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );

        let (seeds, from_disk) = aggregate_run_dir(dir.path()).unwrap();
        assert_eq!(seeds, vec![1, 2, 3]);
        let direct =
            aggregate_seeds(&outcomes.iter().map(|o| o.series.clone()).collect::<Vec<_>>())
                .unwrap();
        assert_eq!(from_disk.summary, direct.summary);
        assert_eq!(from_disk.points.len(), direct.points.len());
        for (a, b) in from_disk.points.iter().zip(&direct.points) {
            assert_eq!(a, b);
        }
    }
}
