//! End-to-end analysis: ingest → segment → crests → θ sweep → tail fit → risk.
//!
//! Only problems that stop the whole run (unreadable input, nothing parseable,
//! inconsistent config) are errors. Everything that goes wrong inside a
//! segment becomes a warning on that segment and the run is marked partial.

use std::path::PathBuf;

use chrono::NaiveDate;
use evt_core::crest::{crest_excesses, extract_crests, CrestSeries};
use evt_core::fitgof::{fit, qq_points, select_family, FamilyRanking, QqPlot, TailFit};
use evt_core::ingest::{
    cumulative_histogram, deviation_series, detect_change_point, histogram, parse_series, partition, Binning,
    ChangePoint, CumulativeHistogram, Histogram, IngestError, ParseReport, RecordFormat, Segment, SplitSpec,
    WaterLevelSeries,
};
use evt_core::risk::{risk_table, RiskTable};
use evt_core::stats::{summarize, Summary};
use evt_core::theta::{declustering_threshold, theta_sweep, threshold_grid, ThetaCurve};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{FitThreshold, GridSpec, PipelineConfig, ThetaSample};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read input file {path}: {source}")]
    ReadInput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input file {path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("input file {path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error("fit_threshold: {given} values for {segments} segments (give one value, or one per segment)")]
    ThresholdCount { given: usize, segments: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
    pub parse: ParseReport,
    pub observations: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    /// Interval used for return periods (configured or inferred).
    pub sampling_interval_days: f64,
    pub interval_inferred: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdSource {
    Declustering,
    Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAnalysis {
    pub segment: Segment,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub summary: Summary,
    pub histogram: Option<Histogram>,
    pub cumulative: Option<CumulativeHistogram>,
    pub crests: Option<CrestSeries>,
    pub theta_sample: ThetaSample,
    pub theta: Option<ThetaCurve>,
    pub declustering_threshold: Option<f64>,
    pub fit_threshold: Option<(f64, ThresholdSource)>,
    pub excesses: Vec<f64>,
    pub ranking: Option<FamilyRanking>,
    pub qq_plots: Vec<QqPlot>,
    pub fit: Option<TailFit>,
    pub risk: Option<RiskTable>,
    /// Requested risk levels not above the fit threshold.
    pub skipped_levels: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub input: InputInfo,
    pub change_point: Option<ChangePoint>,
    pub segments: Vec<SegmentAnalysis>,
}

impl Analysis {
    pub fn is_partial(&self) -> bool {
        !self.input.parse.rejected.is_empty() || self.segments.iter().any(|s| !s.warnings.is_empty())
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Analysis, PipelineError> {
    let bytes = std::fs::read(&cfg.input).map_err(|source| PipelineError::ReadInput {
        path: cfg.input.clone(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|_| PipelineError::Encoding {
        path: cfg.input.clone(),
    })?;
    let ingest_err = |source| PipelineError::Ingest {
        path: cfg.input.clone(),
        source,
    };
    let format = RecordFormat {
        delimiter: cfg.delimiter,
        date_column: cfg.date_column.clone(),
        level_column: cfg.level_column.clone(),
        sampling_interval_days: cfg.interval_days,
    };
    let (series, parse) = parse_series(text, &format).map_err(ingest_err)?;

    let levels = series.levels();
    let (splits, change_point) = match &cfg.split {
        SplitSpec::None => (Vec::new(), None),
        SplitSpec::Indices(idx) => (idx.clone(), None),
        SplitSpec::Auto => {
            let cp = detect_change_point(&levels).map_err(ingest_err)?;
            let splits = match cp {
                ChangePoint::Found { index, .. } => vec![index],
                ChangePoint::NoChange => Vec::new(),
            };
            (splits, Some(cp))
        }
    };
    let segments = partition(series.len(), &splits, cfg.gap_half_width).map_err(ingest_err)?;

    let thresholds: Vec<Option<f64>> = match &cfg.fit_threshold {
        FitThreshold::Declustering => vec![None; segments.len()],
        FitThreshold::Fixed(v) if v.len() == 1 => vec![Some(v[0]); segments.len()],
        FitThreshold::Fixed(v) if v.len() == segments.len() => v.iter().copied().map(Some).collect(),
        FitThreshold::Fixed(v) => {
            return Err(PipelineError::ThresholdCount {
                given: v.len(),
                segments: segments.len(),
            })
        }
    };

    let interval = series.sampling_interval_days();
    let segments: Vec<SegmentAnalysis> = segments
        .into_par_iter()
        .zip(thresholds)
        .map(|(segment, fixed)| analyze_segment(cfg, &series, segment, fixed, interval))
        .collect();

    let obs = series.observations();
    let input = InputInfo {
        path: cfg.input.clone(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len(),
        parse,
        observations: series.len(),
        first_date: obs[0].timestamp,
        last_date: obs[obs.len() - 1].timestamp,
        sampling_interval_days: interval,
        interval_inferred: cfg.interval_days.is_none(),
    };
    Ok(Analysis {
        input,
        change_point,
        segments,
    })
}

fn analyze_segment(
    cfg: &PipelineConfig,
    series: &WaterLevelSeries,
    segment: Segment,
    fixed_threshold: Option<f64>,
    interval: f64,
) -> SegmentAnalysis {
    let obs = segment.slice(series.observations());
    let levels: Vec<f64> = obs.iter().map(|o| o.level).collect();
    let mut warnings = Vec::new();
    let mut out = SegmentAnalysis {
        start_date: obs[0].timestamp,
        end_date: obs[obs.len() - 1].timestamp,
        summary: summarize(&levels),
        histogram: None,
        cumulative: None,
        crests: None,
        theta_sample: cfg.theta_sample,
        theta: None,
        declustering_threshold: None,
        fit_threshold: None,
        excesses: Vec::new(),
        ranking: None,
        qq_plots: Vec::new(),
        fit: None,
        risk: None,
        skipped_levels: Vec::new(),
        warnings: Vec::new(),
        segment,
    };

    match deviation_series(&levels).and_then(|d| histogram(&d.deviations, &Binning::FreedmanDiaconis)) {
        Ok(h) => {
            out.cumulative = Some(cumulative_histogram(&h));
            out.histogram = Some(h);
        }
        Err(e) => warnings.push(format!("histogram: {e}")),
    }

    let crests = match extract_crests(&levels, cfg.crest_reference) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("crests: {e}"));
            out.warnings = warnings;
            return out;
        }
    };

    let theta_values: &[f64] = match cfg.theta_sample {
        ThetaSample::Raw => &levels,
        ThetaSample::Crests => &crests.crest_levels,
    };
    let grid = match &cfg.threshold_grid {
        GridSpec::Quantile { lower, points } => threshold_grid(theta_values, *lower, *points),
        GridSpec::Explicit(list) => list.clone(),
    };
    match theta_sweep(theta_values, &grid, cfg.theta_method, cfg.run_length) {
        Ok(curve) => {
            let undefined = curve.undefined_count();
            if undefined > 0 {
                warnings.push(format!(
                    "theta: undefined at {undefined} of {} thresholds",
                    curve.points.len()
                ));
            }
            out.declustering_threshold = declustering_threshold(&curve, cfg.decluster_tolerance);
            out.theta = Some(curve);
        }
        Err(e) => warnings.push(format!("theta: {e}")),
    }

    let threshold = match fixed_threshold {
        Some(u) => Some((u, ThresholdSource::Config)),
        None => out.declustering_threshold.map(|u| (u, ThresholdSource::Declustering)),
    };
    out.fit_threshold = threshold;
    out.crests = Some(crests);
    let Some((u, _)) = threshold else {
        warnings.push("fit: no declustering threshold (θ never settles at 1 on the grid); set fit_threshold to fit".into());
        out.warnings = warnings;
        return out;
    };

    let excess = crest_excesses(out.crests.as_ref().expect("set above"), u);
    out.excesses = excess.excesses;
    out.qq_plots = cfg
        .families
        .iter()
        .filter_map(|&f| qq_points(&out.excesses, f, cfg.plotting_positions).ok())
        .collect();
    let ranking = select_family(&out.excesses, &cfg.families, cfg.plotting_positions);
    let best = ranking.best();
    out.ranking = Some(ranking);
    let Some(family) = best else {
        warnings.push(format!(
            "fit: no candidate family could be assessed on {} excesses over {u} m",
            out.excesses.len()
        ));
        out.warnings = warnings;
        return out;
    };

    let tail = match fit(&out.excesses, u, family, cfg.fit_method, cfg.plotting_positions) {
        Ok(t) => t,
        Err(e) => {
            warnings.push(format!("fit: {family}: {e}"));
            out.warnings = warnings;
            return out;
        }
    };
    out.fit = Some(tail);

    let (above, below): (Vec<f64>, Vec<f64>) = cfg.levels.iter().partition(|&&l| l > u);
    if !below.is_empty() {
        warnings.push(format!(
            "risk: {} level(s) not above the fit threshold {u} m were skipped",
            below.len()
        ));
    }
    out.skipped_levels = below;
    if !above.is_empty() {
        match risk_table(&tail, &above, interval) {
            Ok(t) => out.risk = Some(t),
            Err(e) => warnings.push(format!("risk: {e}")),
        }
    }
    out.warnings = warnings;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_input_names_the_path() {
        let cfg = PipelineConfig {
            input: PathBuf::from("/definitely/not/here.csv"),
            ..Default::default()
        };
        let err = run_pipeline(&cfg).unwrap_err().to_string();
        assert!(err.contains("/definitely/not/here.csv"), "{err}");
    }
}
