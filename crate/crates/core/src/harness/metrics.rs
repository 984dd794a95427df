//! Per-step metrics accumulation, downsampling, and multi-seed
//! aggregation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One logged row of a run's metrics. All reward columns are running
/// averages over steps `1..=step`; `llm_calls_cum` counts steps whose
/// sampled policy was in the generator group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsPoint {
    pub step: u64,
    pub avg_reward: f64,
    pub p_cb: f64,
    pub llm_calls_cum: u64,
    pub cf_cb_reward: Option<f64>,
    pub cf_shadow_reward: Option<f64>,
}

/// End-of-run scalars.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub final_avg_reward: f64,
    pub total_llm_calls: u64,
    /// Generator-sampled steps divided by steps run.
    pub call_fraction: f64,
}

/// Downsampled per-step curves plus the final summary for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub points: Vec<MetricsPoint>,
    pub summary: Summary,
}

impl MetricsSeries {
    pub fn empty() -> Self {
        Self { points: Vec::new(), summary: Summary::default() }
    }
}

/// Accumulates one step at a time and keeps every `interval`-th row plus
/// the exact final row. Counterfactual columns are emitted only when the
/// corresponding policy is being tracked; missing per-step values count
/// as zero reward so the curve stays an average over all steps.
#[derive(Debug, Clone)]
pub struct MetricsBuilder {
    interval: u64,
    track_cf_cb: bool,
    track_cf_shadow: bool,
    t: u64,
    reward_sum: f64,
    llm_calls: u64,
    cf_cb_sum: f64,
    cf_shadow_sum: f64,
    last_p_cb: f64,
    points: Vec<MetricsPoint>,
}

impl MetricsBuilder {
    pub fn new(interval: u64, track_cf_cb: bool, track_cf_shadow: bool) -> Self {
        assert!(interval >= 1, "logging interval must be at least 1");
        Self {
            interval,
            track_cf_cb,
            track_cf_shadow,
            t: 0,
            reward_sum: 0.0,
            llm_calls: 0,
            cf_cb_sum: 0.0,
            cf_shadow_sum: 0.0,
            last_p_cb: 0.0,
            points: Vec::new(),
        }
    }

    /// Folds in one step. `p_cb` is the learnable-group mass of the law
    /// the step was actually sampled from.
    pub fn push_step(
        &mut self,
        reward: f64,
        p_cb: f64,
        llm_sampled: bool,
        cf_cb_reward: Option<f64>,
        cf_shadow_reward: Option<f64>,
    ) {
        self.t += 1;
        self.reward_sum += reward;
        if llm_sampled {
            self.llm_calls += 1;
        }
        self.cf_cb_sum += cf_cb_reward.unwrap_or(0.0);
        self.cf_shadow_sum += cf_shadow_reward.unwrap_or(0.0);
        self.last_p_cb = p_cb;
        if self.t % self.interval == 0 {
            let point = self.current_point();
            self.points.push(point);
        }
    }

    fn current_point(&self) -> MetricsPoint {
        let t = self.t as f64;
        MetricsPoint {
            step: self.t,
            avg_reward: self.reward_sum / t,
            p_cb: self.last_p_cb,
            llm_calls_cum: self.llm_calls,
            cf_cb_reward: self.track_cf_cb.then(|| self.cf_cb_sum / t),
            cf_shadow_reward: self.track_cf_shadow.then(|| self.cf_shadow_sum / t),
        }
    }

    /// Steps folded in so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Closes the series, appending the final row when the interval did
    /// not land on it. Zero steps produce an empty series with a zero
    /// summary.
    pub fn finish(mut self) -> MetricsSeries {
        if self.t == 0 {
            return MetricsSeries::empty();
        }
        if self.points.last().map(|p| p.step) != Some(self.t) {
            let point = self.current_point();
            self.points.push(point);
        }
        let summary = Summary {
            final_avg_reward: self.reward_sum / self.t as f64,
            total_llm_calls: self.llm_calls,
            call_fraction: self.llm_calls as f64 / self.t as f64,
        };
        MetricsSeries { points: self.points, summary }
    }
}

/// Mean and standard error of the mean across seeds for one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub step: u64,
    pub avg_reward_mean: f64,
    pub avg_reward_sem: f64,
    pub p_cb_mean: f64,
    pub p_cb_sem: f64,
    pub llm_calls_mean: f64,
    pub llm_calls_sem: f64,
    pub cf_cb_reward_mean: Option<f64>,
    pub cf_cb_reward_sem: Option<f64>,
    pub cf_shadow_reward_mean: Option<f64>,
    pub cf_shadow_reward_sem: Option<f64>,
}

/// Cross-seed scalars. Call counts are reported per seed and as a mean
/// because the mean is generally fractional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub num_seeds: usize,
    pub final_avg_reward_mean: f64,
    pub final_avg_reward_sem: f64,
    pub per_seed_llm_calls: Vec<u64>,
    pub llm_calls_mean: f64,
    pub call_fraction_mean: f64,
}

/// Per-step means with their standard errors, plus the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub points: Vec<AggregatePoint>,
    pub summary: AggregateSummary,
}

/// Sample mean and standard error of the mean (sample standard deviation
/// over the square root of the count). A single observation has SEM 0.
fn mean_sem(values: &[f64]) -> (f64, f64) {
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean_sem_opt(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if present.len() != values.len() {
        return (None, None);
    }
    let (mean, sem) = mean_sem(&present);
    (Some(mean), Some(sem))
}

/// Reduces equal-length series from independent seeds to per-step means
/// with standard errors.
pub fn aggregate_seeds(series: &[MetricsSeries]) -> Result<AggregateSeries> {
    if series.is_empty() {
        return Err(Error::Config("no series to aggregate".into()));
    }
    let len = series[0].points.len();
    for (i, s) in series.iter().enumerate() {
        if s.points.len() != len {
            return Err(Error::Config(format!(
                "series 0 has {len} rows but series {i} has {}",
                s.points.len()
            )));
        }
    }

    let mut points = Vec::with_capacity(len);
    for row in 0..len {
        let step = series[0].points[row].step;
        for (i, s) in series.iter().enumerate() {
            if s.points[row].step != step {
                return Err(Error::Config(format!(
                    "row {row} is step {step} in series 0 but step {} in series {i}",
                    s.points[row].step
                )));
            }
        }
        let column = |f: &dyn Fn(&MetricsPoint) -> f64| -> Vec<f64> {
            series.iter().map(|s| f(&s.points[row])).collect()
        };
        let (avg_reward_mean, avg_reward_sem) = mean_sem(&column(&|p| p.avg_reward));
        let (p_cb_mean, p_cb_sem) = mean_sem(&column(&|p| p.p_cb));
        let (llm_calls_mean, llm_calls_sem) =
            mean_sem(&column(&|p| p.llm_calls_cum as f64));
        let cf_cb: Vec<Option<f64>> =
            series.iter().map(|s| s.points[row].cf_cb_reward).collect();
        let (cf_cb_reward_mean, cf_cb_reward_sem) = mean_sem_opt(&cf_cb);
        let cf_shadow: Vec<Option<f64>> =
            series.iter().map(|s| s.points[row].cf_shadow_reward).collect();
        let (cf_shadow_reward_mean, cf_shadow_reward_sem) = mean_sem_opt(&cf_shadow);
        points.push(AggregatePoint {
            step,
            avg_reward_mean,
            avg_reward_sem,
            p_cb_mean,
            p_cb_sem,
            llm_calls_mean,
            llm_calls_sem,
            cf_cb_reward_mean,
            cf_cb_reward_sem,
            cf_shadow_reward_mean,
            cf_shadow_reward_sem,
        });
    }

    let finals: Vec<f64> = series.iter().map(|s| s.summary.final_avg_reward).collect();
    let (final_avg_reward_mean, final_avg_reward_sem) = mean_sem(&finals);
    let per_seed_llm_calls: Vec<u64> =
        series.iter().map(|s| s.summary.total_llm_calls).collect();
    let llm_calls_mean =
        per_seed_llm_calls.iter().map(|&c| c as f64).sum::<f64>() / series.len() as f64;
    let call_fraction_mean =
        series.iter().map(|s| s.summary.call_fraction).sum::<f64>() / series.len() as f64;

    Ok(AggregateSeries {
        points,
        summary: AggregateSummary {
            num_seeds: series.len(),
            final_avg_reward_mean,
            final_avg_reward_sem,
            per_seed_llm_calls,
            llm_calls_mean,
            call_fraction_mean,
        },
    })
}
