//! Extremal index estimation.
//!
//! Two estimators over a sample `H_1..H_n` and threshold `u`:
//!
//! ```text
//! runs:             θ̂ = [ 1/(n-r) Σ_{i=1}^{n-r} 1(H_i > u, max(H_{i+1..i+r}) <= u) ]
//!                       / [ 1/n Σ_{i=1}^{n} 1(H_i > u) ]
//!
//! interexceedance:  θ̂ = 2 [Σ (T_i - 1)]² / ( (N-1) Σ (T_i - 1)(T_i - 2) )
//! ```
//!
//! where `T_i = S_{i+1} - S_i` are the gaps between the 1-based exceedance
//! times `S_1 < .. < S_N`. Both sums are accumulated in integers and divided
//! once, so small worked examples evaluate to the correctly rounded rational.
//! Reported `theta` is `raw_theta` clamped into `[0, 1]`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThetaError {
    #[error("empty sample")]
    EmptySample,
    #[error("no exceedances of the threshold")]
    NoExceedances,
    #[error("run length {run_length} must satisfy 1 <= r < n = {n}")]
    InvalidRunLength { run_length: usize, n: usize },
    #[error("interexceedance estimator needs at least 3 exceedances, got {0}")]
    TooFewExceedances(usize),
    #[error("all interexceedance times are <= 2; estimator undefined")]
    ShortInterexceedanceTimes,
    #[error("threshold grid must be non-empty and ascending")]
    InvalidGrid,
}

impl ThetaError {
    /// True for data-dependent undefinedness, false for caller errors.
    pub fn is_undefined(&self) -> bool {
        matches!(
            self,
            ThetaError::NoExceedances
                | ThetaError::TooFewExceedances(_)
                | ThetaError::ShortInterexceedanceTimes
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaMethod {
    Runs,
    Interexceedance,
}

impl ThetaMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Runs => "runs",
            Self::Interexceedance => "interexceedance",
        }
    }
}

impl std::fmt::Display for ThetaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ThetaMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "runs" => Ok(Self::Runs),
            "interexceedance" | "intervals" => Ok(Self::Interexceedance),
            other => Err(format!("unknown theta method '{other}' (runs|interexceedance)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceRecord {
    pub threshold: f64,
    /// 1-based positions of strict exceedances.
    pub times: Vec<usize>,
    pub interexceedance_times: Vec<usize>,
}

impl ExceedanceRecord {
    pub fn count(&self) -> usize {
        self.times.len()
    }
}

pub fn exceedance_record(sample: &[f64], threshold: f64) -> Result<ExceedanceRecord, ThetaError> {
    if sample.is_empty() {
        return Err(ThetaError::EmptySample);
    }
    let times: Vec<usize> = sample
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > threshold)
        .map(|(i, _)| i + 1)
        .collect();
    if times.is_empty() {
        return Err(ThetaError::NoExceedances);
    }
    let interexceedance_times = times.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ExceedanceRecord {
        threshold,
        times,
        interexceedance_times,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub method: ThetaMethod,
    pub threshold: f64,
    /// Only set for the runs estimator.
    pub run_length: Option<usize>,
    pub theta: f64,
    pub raw_theta: f64,
    pub exceedance_count: usize,
}

fn capped(raw: f64) -> f64 {
    raw.clamp(0.0, 1.0)
}

pub fn runs_estimator(sample: &[f64], threshold: f64, run_length: usize) -> Result<ThetaEstimate, ThetaError> {
    let n = sample.len();
    if n == 0 {
        return Err(ThetaError::EmptySample);
    }
    if run_length == 0 || run_length >= n {
        return Err(ThetaError::InvalidRunLength { run_length, n });
    }
    let exceedances = sample.iter().filter(|&&h| h > threshold).count();
    if exceedances == 0 {
        return Err(ThetaError::NoExceedances);
    }

    // Walk backwards tracking the nearest later exceedance; position i (0-based)
    // ends a cluster when that exceedance is more than r steps away.
    let mut cluster_ends = 0usize;
    let mut next_exceedance = usize::MAX;
    for i in (0..n).rev() {
        let above = sample[i] > threshold;
        if above && i < n - run_length && next_exceedance.saturating_sub(i) > run_length {
            cluster_ends += 1;
        }
        if above {
            next_exceedance = i;
        }
    }

    let numerator = (cluster_ends as u128) * (n as u128);
    let denominator = (exceedances as u128) * ((n - run_length) as u128);
    let raw_theta = numerator as f64 / denominator as f64;
    Ok(ThetaEstimate {
        method: ThetaMethod::Runs,
        threshold,
        run_length: Some(run_length),
        theta: capped(raw_theta),
        raw_theta,
        exceedance_count: exceedances,
    })
}

/// Interexceedance estimate from the gap sequence alone.
pub fn interexceedance_from_times(gaps: &[usize]) -> Result<f64, ThetaError> {
    let count = gaps.len() + 1;
    if count < 3 {
        return Err(ThetaError::TooFewExceedances(count));
    }
    let s1: u128 = gaps.iter().map(|&t| (t - 1) as u128).sum();
    let s2: u128 = gaps
        .iter()
        .map(|&t| ((t - 1) * t.saturating_sub(2)) as u128)
        .sum();
    if s2 == 0 {
        return Err(ThetaError::ShortInterexceedanceTimes);
    }
    let numerator = 2 * s1 * s1;
    let denominator = (gaps.len() as u128) * s2;
    Ok(numerator as f64 / denominator as f64)
}

pub fn interexceedance_estimator(sample: &[f64], threshold: f64) -> Result<ThetaEstimate, ThetaError> {
    let record = exceedance_record(sample, threshold)?;
    let raw_theta = interexceedance_from_times(&record.interexceedance_times)?;
    Ok(ThetaEstimate {
        method: ThetaMethod::Interexceedance,
        threshold,
        run_length: None,
        theta: capped(raw_theta),
        raw_theta,
        exceedance_count: record.count(),
    })
}

pub fn estimate(
    sample: &[f64],
    threshold: f64,
    method: ThetaMethod,
    run_length: usize,
) -> Result<ThetaEstimate, ThetaError> {
    match method {
        ThetaMethod::Runs => runs_estimator(sample, threshold, run_length),
        ThetaMethod::Interexceedance => interexceedance_estimator(sample, threshold),
    }
}

/// One grid point of a sweep; `estimate` is `None` when θ is undefined there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub threshold: f64,
    pub estimate: Option<ThetaEstimate>,
    pub undefined_reason: Option<String>,
}

impl ThetaPoint {
    pub fn theta(&self) -> Option<f64> {
        self.estimate.map(|e| e.theta)
    }

    pub fn is_defined(&self) -> bool {
        self.estimate.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaCurve {
    pub method: ThetaMethod,
    pub run_length: Option<usize>,
    pub points: Vec<ThetaPoint>,
}

impl ThetaCurve {
    pub fn thresholds(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.threshold).collect()
    }

    pub fn undefined_count(&self) -> usize {
        self.points.iter().filter(|p| !p.is_defined()).count()
    }
}

/// Evaluates θ at every grid threshold. Thresholds are independent and run in
/// parallel; the curve keeps grid order.
pub fn theta_sweep(
    sample: &[f64],
    thresholds: &[f64],
    method: ThetaMethod,
    run_length: usize,
) -> Result<ThetaCurve, ThetaError> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ThetaError::InvalidGrid);
    }
    if sample.is_empty() {
        return Err(ThetaError::EmptySample);
    }
    if method == ThetaMethod::Runs && (run_length == 0 || run_length >= sample.len()) {
        return Err(ThetaError::InvalidRunLength {
            run_length,
            n: sample.len(),
        });
    }
    let points = thresholds
        .par_iter()
        .map(|&u| match estimate(sample, u, method, run_length) {
            Ok(e) => ThetaPoint {
                threshold: u,
                estimate: Some(e),
                undefined_reason: None,
            },
            Err(e) => ThetaPoint {
                threshold: u,
                estimate: None,
                undefined_reason: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ThetaCurve {
        method,
        run_length: (method == ThetaMethod::Runs).then_some(run_length),
        points,
    })
}

pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_GRID_LOWER_QUANTILE: f64 = 0.8;

/// Evenly spaced grid from the given lower quantile up to `max - step`.
pub fn threshold_grid(sample: &[f64], lower_quantile: f64, points: usize) -> Vec<f64> {
    if sample.is_empty() || points == 0 {
        return Vec::new();
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = stats::percentile_sorted(&sorted, lower_quantile);
    let hi = sorted[sorted.len() - 1];
    let step = (hi - lo) / points as f64;
    if step <= 0.0 {
        return vec![lo];
    }
    (0..points).map(|k| lo + step * k as f64).collect()
}

pub fn default_threshold_grid(sample: &[f64]) -> Vec<f64> {
    threshold_grid(sample, DEFAULT_GRID_LOWER_QUANTILE, DEFAULT_GRID_POINTS)
}

pub const DEFAULT_DECLUSTER_TOLERANCE: f64 = 1e-6;

/// Smallest threshold from which every defined estimate stays at
/// `θ >= 1 - tolerance`. `None` when the curve never settles at 1.
pub fn declustering_threshold(curve: &ThetaCurve, tolerance: f64) -> Option<f64> {
    let mut candidate = None;
    for point in curve.points.iter().rev() {
        match point.theta() {
            None => continue,
            Some(theta) if theta >= 1.0 - tolerance => candidate = Some(point.threshold),
            Some(_) => break,
        }
    }
    candidate
}
