//! CSV emission and parse-back for metrics. Values are written in the
//! shortest form that parses back to the identical float, with `.` as
//! the decimal separator regardless of locale.

use std::path::Path;

use super::metrics::{AggregatePoint, AggregateSeries, MetricsPoint, MetricsSeries};
use crate::{Error, Result};

/// Column schema for per-seed metrics files.
pub const METRICS_COLUMNS: [&str; 6] = [
    "step",
    "avg_reward",
    "p_cb",
    "llm_calls_cum",
    "cf_cb_reward",
    "cf_shadow_reward",
];

/// Column schema for cross-seed aggregate files.
pub const AGGREGATE_COLUMNS: [&str; 11] = [
    "step",
    "avg_reward_mean",
    "avg_reward_sem",
    "p_cb_mean",
    "p_cb_sem",
    "llm_calls_mean",
    "llm_calls_sem",
    "cf_cb_reward_mean",
    "cf_cb_reward_sem",
    "cf_shadow_reward_mean",
    "cf_shadow_reward_sem",
];

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let msg = format!("{}: {e}", path.display());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path.display().to_string(), source),
        _ => Error::Config(msg),
    }
}

/// Writes a series' rows under the fixed header. An empty series still
/// gets the header so downstream tooling sees the schema.
pub fn emit_csv(series: &MetricsSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer.write_record(METRICS_COLUMNS).map_err(|e| csv_error(path, e))?;
    for point in &series.points {
        writer.serialize(point).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Reads rows written by [`emit_csv`].
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsPoint>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for row in reader.deserialize() {
        points.push(row.map_err(|e| csv_error(path, e))?);
    }
    Ok(points)
}

/// Writes cross-seed means and standard errors.
pub fn emit_aggregate_csv(aggregate: &AggregateSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer.write_record(AGGREGATE_COLUMNS).map_err(|e| csv_error(path, e))?;
    for point in &aggregate.points {
        writer.serialize(point).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Reads rows written by [`emit_aggregate_csv`].
pub fn read_aggregate_csv(path: impl AsRef<Path>) -> Result<Vec<AggregatePoint>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for row in reader.deserialize() {
        points.push(row.map_err(|e| csv_error(path, e))?);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::harness::metrics::Summary;
    use crate::rng;

    #[test]
    fn empty_series_writes_a_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        emit_csv(&MetricsSeries::empty(), &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "step,avg_reward,p_cb,llm_calls_cum,cf_cb_reward,cf_shadow_reward\n");
        assert!(read_metrics_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn a_thousand_rows_round_trip_exactly() {
        let mut rng = rng::stream(11, "csv-round-trip");
        let points: Vec<MetricsPoint> = (1..=1000)
            .map(|i| MetricsPoint {
                step: i * 7,
                avg_reward: rng.random::<f64>(),
                p_cb: rng.random::<f64>() * 1e-3,
                llm_calls_cum: rng.random_range(0..10_000),
                cf_cb_reward: (i % 3 != 0).then(|| rng.random::<f64>() * 1e9),
                cf_shadow_reward: (i % 2 == 0).then(|| -rng.random::<f64>()),
            })
            .collect();
        let series = MetricsSeries { points, summary: Summary::default() };

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        emit_csv(&series, &path).unwrap();
        let back = read_metrics_csv(&path).unwrap();

        assert_eq!(back.len(), series.points.len());
        for (a, b) in series.points.iter().zip(&back) {
            assert_eq!(a, b);
            assert!((a.avg_reward - b.avg_reward).abs() <= 1e-12);
        }
    }

    #[test]
    fn missing_counterfactual_columns_are_empty_cells() {
        let series = MetricsSeries {
            points: vec![MetricsPoint {
                step: 64,
                avg_reward: 0.5,
                p_cb: 0.25,
                llm_calls_cum: 3,
                cf_cb_reward: None,
                cf_shadow_reward: Some(0.125),
            }],
            summary: Summary::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        emit_csv(&series, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",,0.125"));
        assert_eq!(read_metrics_csv(&path).unwrap(), series.points);
    }

    #[test]
    fn aggregate_rows_round_trip() {
        let points = vec![AggregatePoint {
            step: 128,
            avg_reward_mean: 0.25,
            avg_reward_sem: 0.003,
            p_cb_mean: 0.9,
            p_cb_sem: 0.0,
            llm_calls_mean: 17.5,
            llm_calls_sem: 2.5,
            cf_cb_reward_mean: Some(0.5),
            cf_cb_reward_sem: Some(0.01),
            cf_shadow_reward_mean: None,
            cf_shadow_reward_sem: None,
        }];
        let aggregate = AggregateSeries {
            points: points.clone(),
            summary: crate::harness::metrics::AggregateSummary {
                num_seeds: 2,
                final_avg_reward_mean: 0.25,
                final_avg_reward_sem: 0.003,
                per_seed_llm_calls: vec![15, 20],
                llm_calls_mean: 17.5,
                call_fraction_mean: 0.175,
            },
        };

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aggregate.csv");
        emit_aggregate_csv(&aggregate, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,avg_reward_mean,avg_reward_sem,"));
        assert_eq!(read_aggregate_csv(&path).unwrap(), points);
    }
}
