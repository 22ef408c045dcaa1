//! Reading level records, deviation series, histograms and segmentation.
//!
//! Input is a delimited table with a date column (`YYYY-MM-DD`) and a level
//! column in meters. A header row is optional: the first line is treated as
//! data if it parses, otherwise as a header naming the columns.

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("no observations{}", if *.rejected > 0 { format!(" ({} malformed rows rejected)", .rejected) } else { String::new() })]
    NoObservations { rejected: usize },
    #[error("series needs at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("timestamps are not strictly increasing at lines {lines:?}")]
    NonMonotoneTimestamps { lines: Vec<usize> },
    #[error("header has no column named '{0}'")]
    MissingColumn(String),
    #[error("empty value sequence")]
    EmptyValues,
    #[error("non-finite value at position {0}")]
    NonFiniteValue(usize),
    #[error("bin edges must be strictly ascending with at least two entries")]
    InvalidEdges,
    #[error("value {value} at position {index} lies outside the bin edges [{lo}, {hi}]")]
    OutsideEdges {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("split index {index} is not strictly inside a series of length {len}")]
    SplitOutOfRange { index: usize, len: usize },
    #[error("split indices must be strictly ascending")]
    SplitUnordered,
    #[error("gap of half-width {gap} around split {split} leaves an empty segment")]
    EmptySegment { split: usize, gap: usize },
    #[error("invalid sampling interval {0} days")]
    InvalidInterval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub timestamp: NaiveDate,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterLevelSeries {
    observations: Vec<Observation>,
    sampling_interval_days: f64,
}

impl WaterLevelSeries {
    /// Builds a series, checking finiteness, ordering and minimum length.
    pub fn new(
        observations: Vec<Observation>,
        sampling_interval_days: f64,
    ) -> Result<Self, IngestError> {
        if !(sampling_interval_days.is_finite() && sampling_interval_days > 0.0) {
            return Err(IngestError::InvalidInterval(sampling_interval_days));
        }
        if observations.len() < 2 {
            return Err(IngestError::TooShort {
                needed: 2,
                got: observations.len(),
            });
        }
        if let Some(i) = observations.iter().position(|o| !o.level.is_finite()) {
            return Err(IngestError::NonFiniteValue(i));
        }
        let bad: Vec<usize> = observations
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].timestamp <= w[0].timestamp)
            .map(|(i, _)| i + 1)
            .collect();
        if !bad.is_empty() {
            return Err(IngestError::NonMonotoneTimestamps { lines: bad });
        }
        Ok(Self {
            observations,
            sampling_interval_days,
        })
    }

    /// Convenience constructor for in-memory level vectors, stamping observations
    /// at `interval_days` spacing from `start`.
    pub fn from_levels(
        start: NaiveDate,
        interval_days: u32,
        levels: &[f64],
    ) -> Result<Self, IngestError> {
        let observations = levels
            .iter()
            .enumerate()
            .map(|(i, &level)| Observation {
                timestamp: start + chrono::Days::new(u64::from(interval_days) * i as u64),
                level,
            })
            .collect();
        Self::new(observations, f64::from(interval_days))
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn levels(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.level).collect()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn sampling_interval_days(&self) -> f64 {
        self.sampling_interval_days
    }
}

/// Column layout of the delimited input.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFormat {
    pub delimiter: char,
    pub date_column: String,
    pub level_column: String,
    /// Overrides the interval inferred from timestamp spacing.
    pub sampling_interval_days: Option<f64>,
}

impl Default for RecordFormat {
    fn default() -> Self {
        Self {
            delimiter: ',',
            date_column: "date".to_string(),
            level_column: "level_m".to_string(),
            sampling_interval_days: None,
        }
    }
}

pub const DEFAULT_SAMPLING_INTERVAL_DAYS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ParseReport {
    pub accepted: usize,
    pub header_detected: bool,
    pub rejected: Vec<RejectedRow>,
}

fn parse_row(
    fields: &[&str],
    date_idx: usize,
    level_idx: usize,
) -> Result<Observation, String> {
    let date_text = fields
        .get(date_idx)
        .ok_or_else(|| "missing date field".to_string())?
        .trim();
    let level_text = fields
        .get(level_idx)
        .ok_or_else(|| "missing level field".to_string())?
        .trim();
    let timestamp = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
        .map_err(|e| format!("unparseable date '{date_text}': {e}"))?;
    let level: f64 = level_text
        .parse()
        .map_err(|_| format!("non-numeric level '{level_text}'"))?;
    if !level.is_finite() {
        return Err(format!("non-finite level '{level_text}'"));
    }
    Ok(Observation { timestamp, level })
}

/// Parses a delimited level table.
///
/// Malformed rows are collected in the returned [`ParseReport`]; only
/// structural problems (nothing usable, out-of-order timestamps) are errors.
pub fn parse_series(
    text: &str,
    format: &RecordFormat,
) -> Result<(WaterLevelSeries, ParseReport), IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .peekable();

    let mut report = ParseReport::default();
    let (mut date_idx, mut level_idx) = (0usize, 1usize);

    if let Some(&(_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split(format.delimiter).collect();
        // a header has no field that reads as a number or a date
        let looks_like_header = fields.iter().all(|f| {
            let f = f.trim();
            f.parse::<f64>().is_err() && NaiveDate::parse_from_str(f, "%Y-%m-%d").is_err()
        });
        if looks_like_header {
            let names: Vec<String> = fields
                .iter()
                .map(|f| f.trim().trim_matches('"').to_string())
                .collect();
            let find = |col: &str| {
                names
                    .iter()
                    .position(|n| n == col)
                    .ok_or_else(|| IngestError::MissingColumn(col.to_string()))
            };
            date_idx = find(&format.date_column)?;
            level_idx = find(&format.level_column)?;
            report.header_detected = true;
            lines.next();
        }
    }

    let mut observations = Vec::new();
    let mut line_numbers = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(format.delimiter).collect();
        match parse_row(&fields, date_idx, level_idx) {
            Ok(obs) => {
                observations.push(obs);
                line_numbers.push(line_no);
            }
            Err(reason) => report.rejected.push(RejectedRow {
                line: line_no,
                reason,
            }),
        }
    }

    if observations.is_empty() {
        return Err(IngestError::NoObservations {
            rejected: report.rejected.len(),
        });
    }
    let out_of_order: Vec<usize> = observations
        .windows(2)
        .zip(line_numbers.iter().skip(1))
        .filter(|(w, _)| w[1].timestamp <= w[0].timestamp)
        .map(|(_, &line)| line)
        .collect();
    if !out_of_order.is_empty() {
        return Err(IngestError::NonMonotoneTimestamps {
            lines: out_of_order,
        });
    }

    let interval = match format.sampling_interval_days {
        Some(days) => days,
        None => infer_interval_days(&observations),
    };
    report.accepted = observations.len();
    let series = WaterLevelSeries::new(observations, interval)?;
    Ok((series, report))
}

/// Median spacing of consecutive timestamps, falling back to the default.
fn infer_interval_days(observations: &[Observation]) -> f64 {
    let mut gaps: Vec<f64> = observations
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).num_days() as f64)
        .collect();
    if gaps.is_empty() {
        return DEFAULT_SAMPLING_INTERVAL_DAYS;
    }
    gaps.sort_by(f64::total_cmp);
    let median = stats::percentile_sorted(&gaps, 0.5);
    if median > 0.0 {
        median
    } else {
        DEFAULT_SAMPLING_INTERVAL_DAYS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationSeries {
    pub deviations: Vec<f64>,
    pub mean_level: f64,
}

/// `Δ_i = H_i - mean(H)`.
pub fn deviation_series(levels: &[f64]) -> Result<DeviationSeries, IngestError> {
    if levels.is_empty() {
        return Err(IngestError::EmptyValues);
    }
    let mean_level = stats::mean(levels);
    Ok(DeviationSeries {
        deviations: levels.iter().map(|h| h - mean_level).collect(),
        mean_level,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Freedman–Diaconis width, bin count clamped to [5, 200].
    FreedmanDiaconis,
    Count(usize),
    Edges(Vec<f64>),
}

pub const MIN_AUTO_BINS: usize = 5;
pub const MAX_AUTO_BINS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulativeHistogram {
    pub bin_edges: Vec<f64>,
    pub cumulative: Vec<f64>,
}

fn equal_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + width * k as f64).collect();
    edges.push(hi);
    edges
}

fn freedman_diaconis_bins(sorted: &[f64]) -> usize {
    let n = sorted.len() as f64;
    let iqr = stats::percentile_sorted(sorted, 0.75) - stats::percentile_sorted(sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let width = 2.0 * iqr / n.cbrt();
    if width <= 0.0 || range <= 0.0 {
        return MIN_AUTO_BINS;
    }
    ((range / width).ceil() as usize).clamp(MIN_AUTO_BINS, MAX_AUTO_BINS)
}

/// Relative frequencies over `[edge_k, edge_{k+1})`, last bin closed on the right.
pub fn histogram(values: &[f64], binning: &Binning) -> Result<Histogram, IngestError> {
    if values.is_empty() {
        return Err(IngestError::EmptyValues);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(IngestError::NonFiniteValue(i));
    }
    let edges = match binning {
        Binning::Edges(edges) => {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(IngestError::InvalidEdges);
            }
            edges.clone()
        }
        Binning::Count(0) => return Err(IngestError::InvalidEdges),
        Binning::Count(bins) => {
            let s = stats::summarize(values);
            equal_edges(s.min, s.max, *bins)
        }
        Binning::FreedmanDiaconis => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let bins = freedman_diaconis_bins(&sorted);
            equal_edges(sorted[0], sorted[sorted.len() - 1], bins)
        }
    };
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0usize; bins];
    for (index, &value) in values.iter().enumerate() {
        if value < lo || value > hi {
            return Err(IngestError::OutsideEdges {
                index,
                value,
                lo,
                hi,
            });
        }
        let k = (edges.partition_point(|&e| e <= value) - 1).min(bins - 1);
        counts[k] += 1;
    }
    let n = values.len() as f64;
    Ok(Histogram {
        bin_edges: edges,
        probabilities: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn cumulative_histogram(h: &Histogram) -> CumulativeHistogram {
    let cumulative = h
        .probabilities
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    CumulativeHistogram {
        bin_edges: h.bin_edges.clone(),
        cumulative,
    }
}

/// Contiguous inclusive index range `[start_index, end_index]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub start_index: usize,
    pub end_index: usize,
    pub label: String,
}

#[allow(clippy::len_without_is_empty)]
impl Segment {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn slice<'a, T>(&self, values: &'a [T]) -> &'a [T] {
        &values[self.start_index..=self.end_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitSpec {
    None,
    Indices(Vec<usize>),
    Auto,
}

/// Partitions `0..len` at the given split indices.
///
/// Each split index is the first index of the following segment. With
/// `gap_half_width = g > 0` the indices `split - g ..= split + g` are dropped
/// as non-stationary; `g = 0` drops nothing.
pub fn partition(len: usize, splits: &[usize], gap_half_width: usize) -> Result<Vec<Segment>, IngestError> {
    for &s in splits {
        if s == 0 || s >= len {
            return Err(IngestError::SplitOutOfRange { index: s, len });
        }
    }
    if splits.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IngestError::SplitUnordered);
    }
    let mut bounds = Vec::with_capacity(splits.len() + 1);
    let mut start = 0usize;
    for &s in splits {
        let (end_excl, next_start) = if gap_half_width == 0 {
            (s, s)
        } else {
            (s.saturating_sub(gap_half_width), s + gap_half_width + 1)
        };
        if end_excl <= start || next_start >= len {
            return Err(IngestError::EmptySegment {
                split: s,
                gap: gap_half_width,
            });
        }
        bounds.push((start, end_excl - 1));
        start = next_start;
    }
    bounds.push((start, len - 1));
    Ok(bounds
        .into_iter()
        .enumerate()
        .map(|(i, (start_index, end_index))| Segment {
            start_index,
            end_index,
            label: format!("segment-{}", i + 1),
        })
        .collect())
}

pub fn split_segments(
    series: &WaterLevelSeries,
    spec: &SplitSpec,
    gap_half_width: usize,
) -> Result<Vec<Segment>, IngestError> {
    let splits = match spec {
        SplitSpec::None => Vec::new(),
        SplitSpec::Indices(idx) => idx.clone(),
        SplitSpec::Auto => match detect_change_point(&series.levels())? {
            ChangePoint::Found { index, .. } => vec![index],
            ChangePoint::NoChange => Vec::new(),
        },
    };
    partition(series.len(), &splits, gap_half_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangePoint {
    /// `index` is the first observation of the new regime.
    Found { index: usize, score: f64 },
    NoChange,
}

/// Single-change CUSUM: maximizes `|S_k - (k/n) S_n|` over `k = 1..n-1`.
///
/// The score is the maximum divided by the population standard deviation.
/// Ties go to the smaller index.
pub fn detect_change_point(levels: &[f64]) -> Result<ChangePoint, IngestError> {
    let n = levels.len();
    if n < 4 {
        return Err(IngestError::TooShort { needed: 4, got: n });
    }
    let sd = stats::std_dev(levels);
    if sd == 0.0 || !sd.is_finite() {
        return Ok(ChangePoint::NoChange);
    }
    let total: f64 = levels.iter().sum();
    let nf = n as f64;
    let mut best = (0usize, 0.0f64);
    let mut running = 0.0;
    for (k, &h) in levels.iter().enumerate().take(n - 1) {
        running += h;
        let kf = (k + 1) as f64;
        // n·S_k − k·S_n keeps integer-valued data exact
        let stat = (nf * running - kf * total).abs() / nf;
        if stat > best.1 {
            best = (k + 1, stat);
        }
    }
    if best.1 == 0.0 {
        return Ok(ChangePoint::NoChange);
    }
    Ok(ChangePoint::Found {
        index: best.0,
        score: best.1 / sd,
    })
}
