//! Batch pipeline behind the `evt` command: configuration, the end-to-end
//! analysis, the JSON report, plot tables (CSV and SVG) and the synthetic
//! series generator used by the test suite.

pub mod config;
pub mod pipeline;
pub mod plots;
pub mod report;
pub mod svg;
pub mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

use config::PipelineConfig;
use pipeline::Analysis;
use plots::{PlotData, Stage};
use report::Report;

/// Environment variable that overrides the recorded seed.
pub const SEED_ENV: &str = "EVT_SEED";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Plot {
        path: PathBuf,
        #[source]
        source: plots::PlotError,
    },
}

/// Applies `EVT_SEED` if set; returns where the seed came from.
pub fn seed_from_env(seed: &mut u64) -> Result<&'static str, String> {
    match std::env::var(SEED_ENV) {
        Ok(text) => {
            *seed = text
                .trim()
                .parse()
                .map_err(|_| format!("{SEED_ENV}='{text}' is not an unsigned integer"))?;
            Ok(SEED_ENV)
        }
        Err(_) => Ok("config"),
    }
}

/// The plot tables for the requested stages, ordered by segment then stage.
pub fn collect_plots(analysis: &Analysis, cfg: &PipelineConfig) -> Vec<PlotData> {
    let mut out = Vec::new();
    for seg in &analysis.segments {
        let label = seg.segment.label.as_str();
        for stage in &cfg.plots {
            match stage {
                Stage::Histogram => out.extend(seg.histogram.as_ref().map(|h| plots::histogram_plot(label, h))),
                Stage::Cumulative => out.extend(seg.cumulative.as_ref().map(|c| plots::cumulative_plot(label, c))),
                Stage::Qq => out.extend(seg.qq_plots.iter().map(|p| plots::qq_plot(label, p))),
                Stage::ThetaCurve => out.extend(seg.theta.as_ref().map(|c| plots::theta_plot(label, c))),
                Stage::FitOverlay => out.extend(
                    seg.fit
                        .as_ref()
                        .map(|f| plots::fit_overlay_plot(label, &seg.excesses, &f.model, cfg.plotting_positions)),
                ),
            }
        }
    }
    out
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub report_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
    pub partial: bool,
}

fn write(path: &Path, contents: &str) -> Result<(), OutputError> {
    std::fs::write(path, contents).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `report.json` and `plots/*` under the configured output directory.
pub fn write_outputs(
    analysis: &Analysis,
    cfg: &PipelineConfig,
    seed_source: &'static str,
) -> Result<RunOutcome, OutputError> {
    let plot_dir = cfg.out.join("plots");
    std::fs::create_dir_all(&plot_dir).map_err(|source| OutputError::Write {
        path: plot_dir.clone(),
        source,
    })?;
    let mut plot_paths = Vec::new();
    for plot in collect_plots(analysis, cfg) {
        let path = plot_dir.join(format!("{}.csv", plot.name));
        plot.write_csv(&path).map_err(|source| OutputError::Plot {
            path: path.clone(),
            source,
        })?;
        plot_paths.push(path);
        if cfg.svg {
            let path = plot_dir.join(format!("{}.svg", plot.name));
            write(&path, &svg::render(&plot))?;
            plot_paths.push(path);
        }
    }
    let report = report::build_report(analysis, cfg, seed_source);
    let report_path = cfg.out.join("report.json");
    write(&report_path, &report::to_json(&report))?;
    Ok(RunOutcome {
        partial: analysis.is_partial(),
        report,
        report_path,
        plot_paths,
    })
}
