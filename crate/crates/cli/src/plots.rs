//! Plot data tables and their CSV form.
//!
//! Every figure the pipeline produces is a [`PlotData`]: named columns and
//! rows of cells. Floats are written with Rust's shortest round-trip
//! formatting, so reading a CSV back yields bit-identical values.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use evt_core::dist::DistributionModel;
use evt_core::fitgof::{axis_labels, PlottingPositions, QqPlot};
use evt_core::ingest::{CumulativeHistogram, Histogram};
use evt_core::theta::ThetaCurve;
use thiserror::Error;

/// Number of points on a fitted survival curve.
pub const FITTED_CURVE_POINTS: usize = 200;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown plot stage '{0}' (histogram|cumulative|qq|theta-curve|fit-overlay)")]
    UnknownStage(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: column '{column}': cannot parse '{text}'")]
    Cell { row: usize, column: String, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Histogram,
    Cumulative,
    Qq,
    ThetaCurve,
    FitOverlay,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Histogram,
        Stage::Cumulative,
        Stage::Qq,
        Stage::ThetaCurve,
        Stage::FitOverlay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Histogram => "histogram",
            Stage::Cumulative => "cumulative",
            Stage::Qq => "qq",
            Stage::ThetaCurve => "theta-curve",
            Stage::FitOverlay => "fit-overlay",
        }
    }
}

impl FromStr for Stage {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "histogram" => Stage::Histogram,
            "cumulative" => Stage::Cumulative,
            "qq" => Stage::Qq,
            "theta-curve" | "theta" => Stage::ThetaCurve,
            "fit-overlay" => Stage::FitOverlay,
            other => return Err(PlotError::UnknownStage(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A number that is not available, written as an empty field.
    Missing,
    Bool(bool),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Missing => Ok(()),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Num,
    /// Numeric, possibly empty.
    OptNum,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub stage: Stage,
    /// File stem, e.g. `segment-1_qq_weibull`.
    pub name: String,
    pub title: String,
    pub columns: Vec<(String, ColumnKind)>,
    pub rows: Vec<Vec<Cell>>,
}

impl PlotData {
    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|(c, _)| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), PlotError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.columns.iter().map(|(c, _)| c.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(ToString::to_string))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`PlotData::write_csv`] using this table's
    /// column layout; the stage, name and title are taken from `self`.
    pub fn read_csv_like(&self, path: &Path) -> Result<PlotData, PlotError> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let row = self
                .columns
                .iter()
                .zip(record.iter())
                .map(|((name, kind), text)| {
                    let bad = || PlotError::Cell {
                        row: i + 1,
                        column: name.clone(),
                        text: text.to_string(),
                    };
                    Ok(match kind {
                        ColumnKind::Num => Cell::Num(text.parse().map_err(|_| bad())?),
                        ColumnKind::OptNum if text.is_empty() => Cell::Missing,
                        ColumnKind::OptNum => Cell::Num(text.parse().map_err(|_| bad())?),
                        ColumnKind::Bool => Cell::Bool(text.parse().map_err(|_| bad())?),
                        ColumnKind::Text => Cell::Text(text.to_string()),
                    })
                })
                .collect::<Result<Vec<_>, PlotError>>()?;
            rows.push(row);
        }
        Ok(PlotData {
            rows,
            ..self.clone()
        })
    }
}

fn col(name: &str, kind: ColumnKind) -> (String, ColumnKind) {
    (name.to_string(), kind)
}

pub fn histogram_plot(label: &str, h: &Histogram) -> PlotData {
    PlotData {
        stage: Stage::Histogram,
        name: format!("{label}_histogram"),
        title: format!("{label}: histogram of deviations from the mean"),
        columns: vec![
            col("deviation_lo_m", ColumnKind::Num),
            col("deviation_hi_m", ColumnKind::Num),
            col("probability", ColumnKind::Num),
        ],
        rows: h
            .bin_edges
            .windows(2)
            .zip(&h.probabilities)
            .map(|(e, &p)| vec![Cell::Num(e[0]), Cell::Num(e[1]), Cell::Num(p)])
            .collect(),
    }
}

pub fn cumulative_plot(label: &str, c: &CumulativeHistogram) -> PlotData {
    PlotData {
        stage: Stage::Cumulative,
        name: format!("{label}_cumulative"),
        title: format!("{label}: cumulative histogram of deviations"),
        columns: vec![col("deviation_m", ColumnKind::Num), col("cumulative_probability", ColumnKind::Num)],
        rows: c
            .bin_edges
            .iter()
            .skip(1)
            .zip(&c.cumulative)
            .map(|(&e, &p)| vec![Cell::Num(e), Cell::Num(p)])
            .collect(),
    }
}

pub fn qq_plot(label: &str, plot: &QqPlot) -> PlotData {
    let (x, y) = axis_labels(plot.family);
    PlotData {
        stage: Stage::Qq,
        name: format!("{label}_qq_{}", plot.family.name()),
        title: format!("{label}: {} Q-Q plot of crest excesses", plot.family.name()),
        columns: vec![col(x, ColumnKind::Num), col(y, ColumnKind::Num)],
        rows: plot
            .points
            .iter()
            .map(|p| vec![Cell::Num(p.theoretical), Cell::Num(p.sample)])
            .collect(),
    }
}

pub fn theta_plot(label: &str, curve: &ThetaCurve) -> PlotData {
    PlotData {
        stage: Stage::ThetaCurve,
        name: format!("{label}_theta"),
        title: format!("{label}: extremal index ({}) against threshold", curve.method),
        columns: vec![
            col("threshold_m", ColumnKind::Num),
            col("theta", ColumnKind::OptNum),
            col("defined", ColumnKind::Bool),
        ],
        rows: curve
            .points
            .iter()
            .map(|p| {
                vec![
                    Cell::Num(p.threshold),
                    p.theta().map_or(Cell::Missing, Cell::Num),
                    Cell::Bool(p.is_defined()),
                ]
            })
            .collect(),
    }
}

/// Empirical survival of the excesses at their plotting positions, plus the
/// fitted survival on an even grid from 0 to the largest excess.
pub fn fit_overlay_plot(
    label: &str,
    excesses: &[f64],
    model: &DistributionModel,
    rule: PlottingPositions,
) -> PlotData {
    let mut sorted = excesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut rows: Vec<Vec<Cell>> = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            vec![
                Cell::Text("empirical".into()),
                Cell::Num(x),
                Cell::Num(1.0 - rule.position(i + 1, n)),
            ]
        })
        .collect();
    let top = sorted.last().copied().unwrap_or(0.0);
    for k in 0..FITTED_CURVE_POINTS {
        let x = top * k as f64 / (FITTED_CURVE_POINTS - 1) as f64;
        rows.push(vec![Cell::Text("fitted".into()), Cell::Num(x), Cell::Num(model.survival(x))]);
    }
    PlotData {
        stage: Stage::FitOverlay,
        name: format!("{label}_fit_overlay"),
        title: format!("{label}: survival of crest excesses, {} fit", model.family().name()),
        columns: vec![
            col("kind", ColumnKind::Text),
            col("excess_m", ColumnKind::Num),
            col("survival", ColumnKind::Num),
        ],
        rows,
    }
}
