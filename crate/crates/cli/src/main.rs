use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use evt_cli::config::RawConfig;
use evt_cli::synth::{generate, SynthSpec};
use evt_cli::{pipeline, seed_from_env, write_outputs};
use evt_core::risk::{self, reference, reconstruct_threshold, render_percent};
use evt_core::TailFit;

const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "evt", version, about = "Extreme-value analysis of environmental level series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis described by a config file
    Analyze(Box<AnalyzeArgs>),
    /// Write the seeded two-regime synthetic series and its generator metadata
    Synth {
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// RNG seed (EVT_SEED overrides)
        #[arg(long, default_value_t = evt_cli::config::DEFAULT_SEED)]
        seed: u64,
        /// Waves per regime
        #[arg(long)]
        waves: Option<usize>,
    },
    /// Recompute the reference exceedance table from its published Weibull parameters
    ReferenceTable,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Config file (flat `key = value`)
    #[arg(long)]
    config: PathBuf,
    /// Input series, overriding `input`
    #[arg(long)]
    input: Option<PathBuf>,
    /// auto | none | i1,i2,...
    #[arg(long)]
    split: Option<String>,
    /// Half-width of the excluded gap around each split
    #[arg(long)]
    gap_half_width: Option<usize>,
    /// `mean` or a level in metres
    #[arg(long)]
    crest_reference: Option<String>,
    /// runs | interexceedance
    #[arg(long)]
    theta_method: Option<String>,
    /// Run length r of the runs estimator
    #[arg(long)]
    run_length: Option<usize>,
    /// raw | crests
    #[arg(long)]
    theta_sample: Option<String>,
    /// quantile:<q>:<points> or an ascending list of thresholds
    #[arg(long)]
    threshold_grid: Option<String>,
    /// declustering, or one threshold / one per segment
    #[arg(long)]
    fit_threshold: Option<String>,
    /// qq | mle
    #[arg(long)]
    fit_method: Option<String>,
    /// Candidate families, e.g. w,e,g,f
    #[arg(long)]
    families: Option<String>,
    /// weibull (i/(n+1)) | hazen ((i-0.5)/n)
    #[arg(long)]
    plotting_positions: Option<String>,
    /// Risk levels in metres, ascending
    #[arg(long)]
    levels: Option<String>,
    /// Sampling interval in days (default: inferred)
    #[arg(long)]
    interval_days: Option<String>,
    /// Plot stages to write: all | none | histogram,cumulative,qq,theta-curve,fit-overlay
    #[arg(long)]
    plots: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render plots as SVG
    #[arg(long)]
    svg: bool,
}

impl AnalyzeArgs {
    fn apply(&self, raw: &mut RawConfig) {
        let path = |p: &PathBuf| p.to_string_lossy().into_owned();
        let pairs: [(&str, Option<String>); 16] = [
            ("input", self.input.as_ref().map(path)),
            ("split", self.split.clone()),
            ("gap_half_width", self.gap_half_width.map(|g| g.to_string())),
            ("crest_reference", self.crest_reference.clone()),
            ("theta_method", self.theta_method.clone()),
            ("run_length", self.run_length.map(|r| r.to_string())),
            ("theta_sample", self.theta_sample.clone()),
            ("threshold_grid", self.threshold_grid.clone()),
            ("fit_threshold", self.fit_threshold.clone()),
            ("fit_method", self.fit_method.clone()),
            ("families", self.families.clone()),
            ("plotting_positions", self.plotting_positions.clone()),
            ("levels", self.levels.clone()),
            ("interval_days", self.interval_days.clone()),
            ("plots", self.plots.clone()),
            ("out", self.out.as_ref().map(path)),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v);
            }
        }
        if self.svg {
            raw.set("svg", "true");
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<bool> {
    let mut raw = RawConfig::load(&args.config)?;
    args.apply(&mut raw);
    let mut cfg = raw.resolve()?;
    let seed_source = seed_from_env(&mut cfg.seed).map_err(anyhow::Error::msg)?;
    let analysis = pipeline::run_pipeline(&cfg)?;
    let outcome = write_outputs(&analysis, &cfg, seed_source)?;
    for seg in &outcome.report.segments {
        let fit = match &seg.fit {
            Some(f) => {
                let params: Vec<String> = f.parameters.iter().map(|(k, v)| format!("{k}={}", v.value)).collect();
                format!("{} ({})", f.family, params.join(", "))
            }
            None => "no fit".to_string(),
        };
        println!(
            "{} [{}..={}]: {}",
            seg.label, seg.start_index.value, seg.end_index.value, fit
        );
        for w in &seg.warnings {
            eprintln!("warning: {}: {w}", seg.label);
        }
    }
    for r in &analysis.input.parse.rejected {
        eprintln!("warning: input line {}: {}", r.line, r.reason);
    }
    println!(
        "wrote {} and {} plot file(s)",
        outcome.report_path.display(),
        outcome.plot_paths.len()
    );
    Ok(outcome.partial)
}

fn synth(out: &PathBuf, seed: u64, waves: Option<usize>) -> Result<()> {
    let mut seed = seed;
    seed_from_env(&mut seed).map_err(anyhow::Error::msg)?;
    let mut spec = SynthSpec::two_regime(seed);
    if let Some(w) = waves {
        for r in &mut spec.regimes {
            r.waves = w;
        }
    }
    let series = generate(&spec)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("two_regime.csv");
    let meta = out.join("two_regime.json");
    std::fs::write(&csv, series.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    std::fs::write(&meta, series.metadata_json()).with_context(|| format!("writing {}", meta.display()))?;
    println!(
        "wrote {} ({} observations, regime starts {:?}) and {}",
        csv.display(),
        series.levels.len(),
        series.regime_starts,
        meta.display()
    );
    Ok(())
}

fn reference_table() -> Result<()> {
    let cases = [
        ("before drop", reference::BEFORE_DROP, reference::BEFORE_DROP_PROBABILITIES),
        ("after drop", reference::AFTER_DROP, reference::AFTER_DROP_PROBABILITIES),
    ];
    for (name, (rate, shape), published) in cases {
        let rec = reconstruct_threshold(rate, shape, reference::LEVELS_M[0], published[0])?;
        println!(
            "{name}: Weibull λ={rate} r={shape}, threshold reconstructed from P({} m) = {}: u = {:.6} m",
            reference::LEVELS_M[0],
            render_percent(published[0]),
            rec.threshold
        );
        let fit = TailFit::from_weibull(rate, shape, rec.threshold)?;
        let table = risk::risk_table(&fit, &reference::LEVELS_M, reference::SAMPLING_INTERVAL_DAYS)?;
        println!("  level_m  computed_%  published_%  rel_error  return_period_days");
        for (row, &p) in table.rows.iter().zip(&published) {
            println!(
                "  {:>7}  {:>10}  {:>11}  {:>9.2e}  {:>18}",
                row.level_m,
                render_percent(row.probability),
                render_percent(p),
                (row.probability - p).abs() / p,
                row.return_period.days().map_or("inf".into(), |d| format!("{d:.4e}"))
            );
        }
    }
    for check in risk::reference_return_period_checks() {
        println!("note: {}", check.note);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Synth { out, seed, waves } => synth(out, *seed, *waves).map(|()| false),
        Command::ReferenceTable => reference_table().map(|()| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_PARTIAL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
