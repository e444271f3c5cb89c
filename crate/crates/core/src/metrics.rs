//! Episode metrics: earth mover's distance, IoU and quantile aggregation.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::HeightMap;

/// Quantile levels reported for every iteration.
pub const QUANTILE_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];
/// EMD display scaling for summary tables (stored values stay in meters).
pub const EMD_DISPLAY_SCALE: f64 = 1e3;
/// IoU occupancy threshold as a fraction of the target's peak height.
pub const DEFAULT_OCCUPANCY_FRACTION: f64 = 0.1;

pub const METRIC_CSV_HEADER: &str = "episode,iteration,emd_m,iou";
pub const QUANTILE_CSV_HEADER: &str = "iteration,metric,q05,q50,q95";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no series to aggregate")]
    EmptyInput,
    #[error("series '{episode}' has {found} records, expected at least {expected}")]
    ShortSeries {
        episode: String,
        found: usize,
        expected: usize,
    },
    #[error("iteration {got} does not follow {prev}")]
    NonMonotonicIteration { prev: usize, got: usize },
    #[error("IoU {0} outside [0, 1]")]
    InvalidIou(f64),
}

/// Intersection over union of the cells above `occupancy_threshold`.
/// Two empty occupancy sets count as a perfect match.
pub fn iou(current: &HeightMap, target: &HeightMap, occupancy_threshold: f64) -> f64 {
    debug_assert_eq!(current.geometry(), target.geometry());
    let mut inter = 0usize;
    let mut union = 0usize;
    for (a, b) in current.heights().iter().zip(target.heights()) {
        let (oa, ob) = (*a > occupancy_threshold, *b > occupancy_threshold);
        inter += usize::from(oa && ob);
        union += usize::from(oa || ob);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn default_occupancy_threshold(target: &HeightMap) -> f64 {
    DEFAULT_OCCUPANCY_FRACTION * target.max_height()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub iteration: usize,
    /// Meters.
    pub emd: f64,
    pub iou: f64,
}

/// Per-iteration metrics of one episode; iteration 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    episode: String,
    records: Vec<MetricRecord>,
}

impl MetricSeries {
    pub fn new(episode: impl Into<String>) -> Self {
        Self {
            episode: episode.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: MetricRecord) -> Result<(), MetricsError> {
        let expected = self.records.last().map_or(0, |r| r.iteration + 1);
        if record.iteration != expected {
            return Err(MetricsError::NonMonotonicIteration {
                prev: expected.wrapping_sub(1),
                got: record.iteration,
            });
        }
        if !(0.0..=1.0).contains(&record.iou) {
            return Err(MetricsError::InvalidIou(record.iou));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn episode(&self) -> &str {
        &self.episode
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&MetricRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }

    /// Extends an early-stopped series to `len` records by repeating its final row.
    pub fn padded_to(&self, len: usize) -> MetricSeries {
        let mut out = self.clone();
        if let Some(&last) = self.records.last() {
            while out.records.len() < len {
                let iteration = out.records.len();
                out.records.push(MetricRecord { iteration, ..last });
            }
        }
        out
    }

    /// Rows for the metric CSV (no header).
    pub fn csv_rows(&self, out: &mut String) {
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", self.episode, r.iteration, r.emd, r.iou);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Emd,
    Iou,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Emd => "emd_m",
            Metric::Iou => "iou",
        }
    }

    fn of(self, r: &MetricRecord) -> f64 {
        match self {
            Metric::Emd => r.emd,
            Metric::Iou => r.iou,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileRow {
    pub iteration: usize,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `level * (n - 1)` in the sorted sample).
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = level.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-iteration 5/50/95 % quantiles of `metric` across `series`, over the
/// iteration range every series covers.
pub fn quantiles(
    series: &[MetricSeries],
    metric: Metric,
) -> Result<Vec<QuantileRow>, MetricsError> {
    let len = series
        .iter()
        .map(MetricSeries::len)
        .min()
        .ok_or(MetricsError::EmptyInput)?;
    if len == 0 {
        return Err(MetricsError::ShortSeries {
            episode: series[0].episode.clone(),
            found: 0,
            expected: 1,
        });
    }
    let mut rows = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(series.len());
    for it in 0..len {
        column.clear();
        column.extend(series.iter().map(|s| metric.of(&s.records[it])));
        column.sort_by(f64::total_cmp);
        rows.push(QuantileRow {
            iteration: it,
            q05: quantile(&column, QUANTILE_LEVELS[0]),
            q50: quantile(&column, QUANTILE_LEVELS[1]),
            q95: quantile(&column, QUANTILE_LEVELS[2]),
        });
    }
    Ok(rows)
}

/// Appends quantile rows labelled `metric_label` (no header).
pub fn quantile_csv_rows(rows: &[QuantileRow], metric_label: &str, out: &mut String) {
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, metric_label, r.q05, r.q50, r.q95
        );
    }
}
