//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment. Every key is optional and falls
//! back to its default; unknown keys are rejected. Command-line flags are
//! applied as if they were extra lines at the end of the file, so a flag
//! always wins over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use evt_core::dist::Family;
use evt_core::fitgof::{FitMethod, PlottingPositions};
use evt_core::ingest::SplitSpec;
use evt_core::theta::{ThetaMethod, DEFAULT_DECLUSTER_TOLERANCE, DEFAULT_GRID_LOWER_QUANTILE, DEFAULT_GRID_POINTS};
use evt_core::Reference;
use thiserror::Error;

use crate::plots::Stage;

pub const DEFAULT_SEED: u64 = 20_190_715;

/// Keys accepted in a config file, in echo order.
pub const KEYS: &[&str] = &[
    "input",
    "delimiter",
    "date_column",
    "level_column",
    "split",
    "gap_half_width",
    "crest_reference",
    "theta_method",
    "run_length",
    "theta_sample",
    "threshold_grid",
    "decluster_tolerance",
    "fit_threshold",
    "families",
    "fit_method",
    "plotting_positions",
    "levels",
    "interval_days",
    "out",
    "plots",
    "svg",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub key: String,
    /// 1-based line in the config file; `None` for flags and cross-field checks.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
}

/// Which values the extremal index is estimated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaSample {
    /// Every observation of the segment.
    #[default]
    Raw,
    /// Only the crest maxima.
    Crests,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `points` evenly spaced thresholds from the given quantile to just below the maximum.
    Quantile { lower: f64, points: usize },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitThreshold {
    /// Use the declustering threshold found by the θ sweep.
    Declustering,
    /// One value for every segment, or one per segment in order.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub delimiter: char,
    pub date_column: String,
    pub level_column: String,
    pub split: SplitSpec,
    pub gap_half_width: usize,
    pub crest_reference: Reference,
    pub theta_method: ThetaMethod,
    pub run_length: usize,
    pub theta_sample: ThetaSample,
    pub threshold_grid: GridSpec,
    pub decluster_tolerance: f64,
    pub fit_threshold: FitThreshold,
    pub families: Vec<Family>,
    pub fit_method: FitMethod,
    pub plotting_positions: PlottingPositions,
    pub levels: Vec<f64>,
    /// `None` infers the interval from the timestamps.
    pub interval_days: Option<f64>,
    pub out: PathBuf,
    /// Plot stages written under `plots/`.
    pub plots: Vec<Stage>,
    pub svg: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            delimiter: ',',
            date_column: "date".into(),
            level_column: "level_m".into(),
            split: SplitSpec::Auto,
            gap_half_width: 0,
            crest_reference: Reference::SegmentMean,
            theta_method: ThetaMethod::Runs,
            run_length: 1,
            theta_sample: ThetaSample::Raw,
            threshold_grid: GridSpec::Quantile {
                lower: DEFAULT_GRID_LOWER_QUANTILE,
                points: DEFAULT_GRID_POINTS,
            },
            decluster_tolerance: DEFAULT_DECLUSTER_TOLERANCE,
            fit_threshold: FitThreshold::Declustering,
            families: Family::ALL.to_vec(),
            fit_method: FitMethod::QqRegression,
            plotting_positions: PlottingPositions::Weibull,
            levels: vec![61.0, 62.0, 63.0, 64.0, 65.0, 66.0],
            interval_days: None,
            out: PathBuf::from("evt-out"),
            plots: Stage::ALL.to_vec(),
            svg: false,
            seed: DEFAULT_SEED,
        }
    }
}

/// Raw settings keyed by name, each remembering the config line it came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (Option<usize>, String)>,
}

impl RawConfig {
    /// Parses the file text. Relative `input`/`out` paths are resolved
    /// against `base_dir` (normally the config file's directory).
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(FieldError {
                    key: content.to_string(),
                    line: Some(line_no),
                    message: "expected `key = value`".into(),
                });
                continue;
            };
            let key = key.trim().to_string();
            let mut value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                errors.push(FieldError {
                    key,
                    line: Some(line_no),
                    message: "unknown key".into(),
                });
                continue;
            }
            if raw.entries.contains_key(&key) {
                errors.push(FieldError {
                    key,
                    line: Some(line_no),
                    message: "set more than once".into(),
                });
                continue;
            }
            if (key == "input" || key == "out") && !value.is_empty() && Path::new(&value).is_relative() {
                value = base_dir.join(&value).to_string_lossy().into_owned();
            }
            raw.entries.insert(key, (Some(line_no), value));
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    /// Sets a value from a command-line flag, replacing any file value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        self.entries.insert(key.to_string(), (None, value.into()));
    }

    pub fn resolve(&self) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let mut errors = Vec::new();
        for (key, (line, value)) in &self.entries {
            if let Err(message) = apply(&mut cfg, key, value) {
                errors.push(FieldError {
                    key: key.clone(),
                    line: *line,
                    message,
                });
            }
        }
        if cfg.input.as_os_str().is_empty() {
            errors.push(FieldError {
                key: "input".into(),
                line: None,
                message: "required (set it in the config file or pass --input)".into(),
            });
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}

fn apply(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "input" => {
            if value.is_empty() {
                return Err("must not be empty".into());
            }
            cfg.input = PathBuf::from(value);
        }
        "delimiter" => cfg.delimiter = parse_delimiter(value)?,
        "date_column" => cfg.date_column = non_empty(value)?,
        "level_column" => cfg.level_column = non_empty(value)?,
        "split" => cfg.split = parse_split(value)?,
        "gap_half_width" => cfg.gap_half_width = parse_number(value)?,
        "crest_reference" => {
            cfg.crest_reference = match value.to_ascii_lowercase().as_str() {
                "mean" => Reference::SegmentMean,
                _ => Reference::Level(parse_finite(value).map_err(|e| format!("{e} (or `mean`)"))?),
            }
        }
        "theta_method" => cfg.theta_method = value.parse()?,
        "run_length" => {
            cfg.run_length = parse_number(value)?;
            if cfg.run_length == 0 {
                return Err("must be at least 1".into());
            }
        }
        "theta_sample" => {
            cfg.theta_sample = match value.to_ascii_lowercase().as_str() {
                "raw" => ThetaSample::Raw,
                "crests" => ThetaSample::Crests,
                other => return Err(format!("unknown sample '{other}' (raw|crests)")),
            }
        }
        "threshold_grid" => cfg.threshold_grid = parse_grid(value)?,
        "decluster_tolerance" => {
            let t = parse_finite(value)?;
            if !(0.0..1.0).contains(&t) {
                return Err(format!("{t} outside [0, 1)"));
            }
            cfg.decluster_tolerance = t;
        }
        "fit_threshold" => {
            cfg.fit_threshold = if value.eq_ignore_ascii_case("declustering") {
                FitThreshold::Declustering
            } else {
                FitThreshold::Fixed(parse_list(value).map_err(|e| format!("{e} (or `declustering`)"))?)
            }
        }
        "families" => cfg.families = parse_families(value)?,
        "fit_method" => cfg.fit_method = value.parse()?,
        "plotting_positions" => cfg.plotting_positions = value.parse()?,
        "levels" => {
            let levels = parse_list(value)?;
            if levels.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                return Err("levels must be strictly ascending".into());
            }
            cfg.levels = levels;
        }
        "interval_days" => {
            cfg.interval_days = if value.eq_ignore_ascii_case("auto") {
                None
            } else {
                let d = parse_finite(value)?;
                if d <= 0.0 {
                    return Err(format!("{d} is not a positive number of days"));
                }
                Some(d)
            }
        }
        "out" => cfg.out = PathBuf::from(non_empty(value)?),
        "plots" => cfg.plots = parse_stages(value)?,
        "svg" => {
            cfg.svg = match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(format!("expected true|false, got '{other}'")),
            }
        }
        "seed" => cfg.seed = parse_number(value)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

fn non_empty(value: &str) -> Result<String, String> {
    if value.is_empty() {
        Err("must not be empty".into())
    } else {
        Ok(value.to_string())
    }
}

fn parse_number<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("'{value}' is not a non-negative integer"))
}

fn parse_finite(value: &str) -> Result<f64, String> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{}' is not a finite number", value.trim())),
    }
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    let out = value.split(',').map(parse_finite).collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_delimiter(value: &str) -> Result<char, String> {
    match value {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        "semicolon" => Ok(';'),
        "space" => Ok(' '),
        _ => {
            let mut chars = value.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(format!("'{value}' is not a single character (or tab|comma|semicolon|space)")),
            }
        }
    }
}

pub fn parse_split(value: &str) -> Result<SplitSpec, String> {
    match value.to_ascii_lowercase().as_str() {
        "auto" => Ok(SplitSpec::Auto),
        "none" => Ok(SplitSpec::None),
        _ => {
            let idx = value
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| format!("'{}' is not an index (auto|none|i1,i2,...)", s.trim()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if idx.windows(2).any(|w| w[1] <= w[0]) {
                return Err("split indices must be strictly ascending".into());
            }
            Ok(SplitSpec::Indices(idx))
        }
    }
}

/// `quantile:<q>:<points>`, `default`, or an explicit ascending list.
pub fn parse_grid(value: &str) -> Result<GridSpec, String> {
    if value.eq_ignore_ascii_case("default") {
        return Ok(PipelineConfig::default().threshold_grid);
    }
    if let Some(rest) = value.strip_prefix("quantile:") {
        let (q, n) = rest
            .split_once(':')
            .ok_or_else(|| "expected quantile:<q>:<points>".to_string())?;
        let lower = parse_finite(q)?;
        if !(0.0..1.0).contains(&lower) {
            return Err(format!("lower quantile {lower} outside [0, 1)"));
        }
        let points: usize = parse_number(n.trim())?;
        if points < 2 {
            return Err("need at least 2 grid points".into());
        }
        return Ok(GridSpec::Quantile { lower, points });
    }
    let list = parse_list(value).map_err(|e| format!("{e} (or quantile:<q>:<points>)"))?;
    if list.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err("explicit thresholds must be strictly ascending".into());
    }
    Ok(GridSpec::Explicit(list))
}

fn parse_families(value: &str) -> Result<Vec<Family>, String> {
    let mut out: Vec<Family> = Vec::new();
    for part in value.split(',') {
        let f: Family = part.trim().parse().map_err(|e: evt_core::dist::DistError| e.to_string())?;
        if out.contains(&f) {
            return Err(format!("{} listed twice", f.name()));
        }
        out.push(f);
    }
    Ok(out)
}

fn parse_stages(value: &str) -> Result<Vec<Stage>, String> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(Stage::ALL.to_vec());
    }
    if value.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in value.split(',') {
        let stage: Stage = part.trim().parse().map_err(|e: crate::plots::PlotError| e.to_string())?;
        if !out.contains(&stage) {
            out.push(stage);
        }
    }
    out.sort();
    Ok(out)
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Canonical text of every analysis setting. The output directory is
    /// left out: it decides where results go, not what they are.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("input", self.input.to_string_lossy().into_owned());
        put(
            "delimiter",
            match self.delimiter {
                '\t' => "tab".into(),
                c => c.to_string(),
            },
        );
        put("date_column", self.date_column.clone());
        put("level_column", self.level_column.clone());
        put(
            "split",
            match &self.split {
                SplitSpec::Auto => "auto".into(),
                SplitSpec::None => "none".into(),
                SplitSpec::Indices(idx) => idx.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            },
        );
        put("gap_half_width", self.gap_half_width.to_string());
        put(
            "crest_reference",
            match self.crest_reference {
                Reference::SegmentMean => "mean".into(),
                Reference::Level(v) => v.to_string(),
            },
        );
        put("theta_method", self.theta_method.to_string());
        put("run_length", self.run_length.to_string());
        put(
            "theta_sample",
            match self.theta_sample {
                ThetaSample::Raw => "raw".into(),
                ThetaSample::Crests => "crests".into(),
            },
        );
        put(
            "threshold_grid",
            match &self.threshold_grid {
                GridSpec::Quantile { lower, points } => format!("quantile:{lower}:{points}"),
                GridSpec::Explicit(list) => join(list),
            },
        );
        put("decluster_tolerance", self.decluster_tolerance.to_string());
        put(
            "fit_threshold",
            match &self.fit_threshold {
                FitThreshold::Declustering => "declustering".into(),
                FitThreshold::Fixed(v) => join(v),
            },
        );
        put(
            "families",
            self.families.iter().map(|f| f.code().to_string()).collect::<Vec<_>>().join(","),
        );
        put(
            "fit_method",
            match self.fit_method {
                FitMethod::QqRegression => "qq".into(),
                FitMethod::Mle => "mle".into(),
            },
        );
        put("plotting_positions", self.plotting_positions.name().to_string());
        put("levels", join(&self.levels));
        put(
            "interval_days",
            self.interval_days.map_or_else(|| "auto".to_string(), |d| d.to_string()),
        );
        put(
            "plots",
            if self.plots.is_empty() {
                "none".into()
            } else {
                self.plots.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
            },
        );
        put("svg", self.svg.to_string());
        put("seed", self.seed.to_string());
        m
    }
}
