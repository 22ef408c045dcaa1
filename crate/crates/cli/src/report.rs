//! JSON report assembled from an [`Analysis`].
//!
//! Every number sits in a `{ "value": …, "unit": … }` object so a reader
//! never has to guess whether a probability is a fraction or a percent.
//! Non-finite values serialize as `null`. Field order is fixed by the
//! struct definitions and maps are sorted, so equal inputs give equal bytes.

use std::collections::BTreeMap;

use evt_core::dist::DistributionModel;
use evt_core::fitgof::FitMethod;
use evt_core::ingest::ChangePoint;
use evt_core::risk::{reference_return_period_checks, ReturnPeriodCheck};
use serde::Serialize;

use crate::config::{PipelineConfig, ThetaSample};
use crate::pipeline::{Analysis, SegmentAnalysis, ThresholdSource};

pub const REPORT_FORMAT: &str = "evt-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Count {
    pub value: u64,
    pub unit: &'static str,
}

fn q(value: f64, unit: &'static str) -> Quantity {
    Quantity { value, unit }
}

fn metres(value: f64) -> Quantity {
    q(value, "m")
}

fn count(value: usize) -> Count {
    Count {
        value: value as u64,
        unit: "count",
    }
}

fn index(value: usize) -> Count {
    Count {
        value: value as u64,
        unit: "index",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub status: &'static str,
    pub provenance: Provenance,
    pub input: InputBlock,
    pub change_point: Option<ChangePointBlock>,
    pub segments: Vec<SegmentBlock>,
    pub footnotes: Vec<Footnote>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_sha256: String,
    pub seed: SeedBlock,
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedBlock {
    pub value: u64,
    pub unit: &'static str,
    /// `config` or `EVT_SEED`.
    pub source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputBlock {
    pub path: String,
    pub size: Count,
    pub observations: Count,
    pub header_detected: bool,
    pub rejected_rows: Vec<RejectedRowBlock>,
    pub first_date: String,
    pub last_date: String,
    pub sampling_interval: Quantity,
    pub sampling_interval_source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedRowBlock {
    pub line: Count,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChangePointBlock {
    pub found: bool,
    pub index: Option<Count>,
    pub score: Option<Quantity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentBlock {
    pub label: String,
    pub start_index: Count,
    pub end_index: Count,
    pub start_date: String,
    pub end_date: String,
    pub summary: SummaryBlock,
    pub crests: Option<CrestBlock>,
    pub theta: Option<ThetaBlock>,
    pub fit_threshold: Option<ThresholdBlock>,
    pub excess_count: Count,
    pub goodness_of_fit: Vec<FamilyScoreBlock>,
    pub skipped_families: Vec<SkippedFamilyBlock>,
    pub selected_family: Option<&'static str>,
    pub fit: Option<FitBlock>,
    pub risk_table: Option<RiskBlock>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryBlock {
    pub count: Count,
    pub min: Quantity,
    pub max: Quantity,
    pub mean: Quantity,
    pub std_dev: Quantity,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrestBlock {
    pub reference_level: Quantity,
    pub count: Count,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaBlock {
    pub method: &'static str,
    pub run_length: Option<Count>,
    pub sample: &'static str,
    pub declustering_threshold: Option<Quantity>,
    pub undefined_points: Count,
    pub points: Vec<ThetaPointBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaPointBlock {
    pub threshold: Quantity,
    pub defined: bool,
    pub theta: Option<Quantity>,
    pub raw_theta: Option<Quantity>,
    pub exceedances: Option<Count>,
    pub undefined_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdBlock {
    pub value: f64,
    pub unit: &'static str,
    pub source: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyScoreBlock {
    pub family: &'static str,
    pub r_squared: Quantity,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedFamilyBlock {
    pub family: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitBlock {
    pub family: &'static str,
    pub method: &'static str,
    pub threshold: Quantity,
    pub parameters: BTreeMap<&'static str, Quantity>,
    pub r_squared: Quantity,
    pub sample_size: Count,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskBlock {
    pub sampling_interval: Quantity,
    pub rows: Vec<RiskRowBlock>,
    pub skipped_levels: Vec<Quantity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskRowBlock {
    pub level: Quantity,
    pub exceedance_probability: Quantity,
    /// `null` when the probability underflows to zero.
    pub return_period: Option<Quantity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Footnote {
    pub id: String,
    pub text: String,
    pub probability: Quantity,
    pub sampling_interval: Quantity,
    pub quoted_return_period: Quantity,
    pub computed_return_period: Quantity,
    pub relative_difference: Quantity,
    pub consistent: bool,
}

/// Parameters with their units; a Weibull rate λ multiplies `x^r`, so it
/// carries `m^-r`.
pub fn model_parameters(model: &DistributionModel) -> BTreeMap<&'static str, Quantity> {
    let mut m = BTreeMap::new();
    match *model {
        DistributionModel::Exponential { rate } => {
            m.insert("rate", q(rate, "1/m"));
        }
        DistributionModel::Weibull { rate, shape } => {
            m.insert("rate", q(rate, "m^-r"));
            m.insert("shape", q(shape, "1"));
        }
        DistributionModel::Gumbel { location, scale } => {
            m.insert("location", metres(location));
            m.insert("scale", metres(scale));
        }
        DistributionModel::Frechet {
            shape,
            location,
            scale,
        } => {
            m.insert("shape", q(shape, "1"));
            m.insert("location", metres(location));
            m.insert("scale", metres(scale));
        }
    }
    m
}

fn footnote(i: usize, check: &ReturnPeriodCheck) -> Footnote {
    Footnote {
        id: format!("return-period-{}", i + 1),
        text: check.note.clone(),
        probability: q(check.probability * 100.0, "%"),
        sampling_interval: q(check.sampling_interval_days, "days"),
        quoted_return_period: q(check.quoted_days, "days"),
        computed_return_period: q(check.computed_days, "days"),
        relative_difference: q(check.relative_difference, "1"),
        consistent: check.consistent,
    }
}

fn date(d: chrono::NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn segment_block(s: &SegmentAnalysis) -> SegmentBlock {
    SegmentBlock {
        label: s.segment.label.clone(),
        start_index: index(s.segment.start_index),
        end_index: index(s.segment.end_index),
        start_date: date(s.start_date),
        end_date: date(s.end_date),
        summary: SummaryBlock {
            count: count(s.summary.count),
            min: metres(s.summary.min),
            max: metres(s.summary.max),
            mean: metres(s.summary.mean),
            std_dev: metres(s.summary.std_dev),
        },
        crests: s.crests.as_ref().map(|c| CrestBlock {
            reference_level: metres(c.reference_level),
            count: count(c.len()),
        }),
        theta: s.theta.as_ref().map(|curve| ThetaBlock {
            method: curve.method.name(),
            run_length: curve.run_length.map(count),
            sample: match s.theta_sample {
                ThetaSample::Raw => "raw",
                ThetaSample::Crests => "crests",
            },
            declustering_threshold: s.declustering_threshold.map(metres),
            undefined_points: count(curve.undefined_count()),
            points: curve
                .points
                .iter()
                .map(|p| ThetaPointBlock {
                    threshold: metres(p.threshold),
                    defined: p.is_defined(),
                    theta: p.estimate.map(|e| q(e.theta, "1")),
                    raw_theta: p.estimate.map(|e| q(e.raw_theta, "1")),
                    exceedances: p.estimate.map(|e| count(e.exceedance_count)),
                    undefined_reason: p.undefined_reason.clone(),
                })
                .collect(),
        }),
        fit_threshold: s.fit_threshold.map(|(value, source)| ThresholdBlock {
            value,
            unit: "m",
            source: match source {
                ThresholdSource::Declustering => "declustering",
                ThresholdSource::Config => "config",
            },
        }),
        excess_count: count(s.excesses.len()),
        goodness_of_fit: s
            .ranking
            .iter()
            .flat_map(|r| &r.ranked)
            .map(|f| FamilyScoreBlock {
                family: f.family.name(),
                r_squared: q(f.r_squared, "1"),
            })
            .collect(),
        skipped_families: s
            .ranking
            .iter()
            .flat_map(|r| &r.skipped)
            .map(|f| SkippedFamilyBlock {
                family: f.family.name(),
                reason: f.reason.clone(),
            })
            .collect(),
        selected_family: s.fit.map(|f| f.family().name()),
        fit: s.fit.map(|f| FitBlock {
            family: f.family().name(),
            method: match f.method {
                FitMethod::QqRegression => "qq-regression",
                FitMethod::Mle => "mle",
            },
            threshold: metres(f.threshold),
            parameters: model_parameters(&f.model),
            r_squared: q(f.goodness, "1"),
            sample_size: count(f.sample_size),
        }),
        risk_table: s.risk.as_ref().map(|t| RiskBlock {
            sampling_interval: q(t.sampling_interval_days, "days"),
            rows: t
                .rows
                .iter()
                .map(|r| RiskRowBlock {
                    level: metres(r.level_m),
                    exceedance_probability: q(r.probability_percent(), "%"),
                    return_period: r.return_period.days().map(|d| q(d, "days")),
                })
                .collect(),
            skipped_levels: s.skipped_levels.iter().copied().map(metres).collect(),
        }),
        warnings: s.warnings.clone(),
    }
}

pub fn build_report(analysis: &Analysis, cfg: &PipelineConfig, seed_source: &'static str) -> Report {
    let input = &analysis.input;
    Report {
        format: REPORT_FORMAT,
        status: if analysis.is_partial() { "partial" } else { "complete" },
        provenance: Provenance {
            tool: "evt",
            version: env!("CARGO_PKG_VERSION"),
            input_sha256: input.sha256.clone(),
            seed: SeedBlock {
                value: cfg.seed,
                unit: "rng-seed",
                source: seed_source,
            },
            config: cfg.echo(),
        },
        input: InputBlock {
            path: input.path.to_string_lossy().into_owned(),
            size: Count {
                value: input.bytes as u64,
                unit: "bytes",
            },
            observations: count(input.observations),
            header_detected: input.parse.header_detected,
            rejected_rows: input
                .parse
                .rejected
                .iter()
                .map(|r| RejectedRowBlock {
                    line: Count {
                        value: r.line as u64,
                        unit: "line",
                    },
                    reason: r.reason.clone(),
                })
                .collect(),
            first_date: date(input.first_date),
            last_date: date(input.last_date),
            sampling_interval: q(input.sampling_interval_days, "days"),
            sampling_interval_source: if input.interval_inferred { "inferred" } else { "config" },
        },
        change_point: analysis.change_point.map(|cp| match cp {
            ChangePoint::Found { index: i, score } => ChangePointBlock {
                found: true,
                index: Some(index(i)),
                score: Some(q(score, "1")),
            },
            ChangePoint::NoChange => ChangePointBlock {
                found: false,
                index: None,
                score: None,
            },
        }),
        segments: analysis.segments.iter().map(segment_block).collect(),
        footnotes: reference_return_period_checks()
            .iter()
            .enumerate()
            .map(|(i, c)| footnote(i, c))
            .collect(),
    }
}

pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weibull_rate_carries_a_shape_dependent_unit() {
        let p = model_parameters(&DistributionModel::weibull(1.135, 1.41).unwrap());
        assert_eq!(p["rate"].unit, "m^-r");
        assert_eq!(p["shape"].value, 1.41);
    }

    #[test]
    fn non_finite_values_serialize_as_null() {
        let s = serde_json::to_string(&q(f64::NAN, "1")).unwrap();
        assert_eq!(s, r#"{"value":null,"unit":"1"}"#);
    }

    #[test]
    fn footnotes_flag_the_inconsistent_quote() {
        let notes: Vec<Footnote> = reference_return_period_checks()
            .iter()
            .enumerate()
            .map(|(i, c)| footnote(i, c))
            .collect();
        assert!(notes[0].consistent);
        assert!(!notes[1].consistent);
        assert!((notes[1].computed_return_period.value - 892_857.142857).abs() < 1e-3);
        assert!(notes[1].text.contains("89285"), "{}", notes[1].text);
    }
}
