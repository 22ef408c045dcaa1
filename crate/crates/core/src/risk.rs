//! Exceedance probabilities, return periods and threshold reconstruction.
//!
//! A tail fit describes excesses over its threshold `u`, so the probability
//! that a single observation exceeds an absolute level `L > u` is the fitted
//! survival at `L - u`. The return period of that level is
//!
//! ```text
//! T(L) = sampling_interval_days / P(L)
//! ```
//!
//! Probabilities are kept as fractions; percent appears only when rendering.

use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, DistributionModel};
use crate::fitgof::TailFit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("level {level} m is not above the fit threshold {threshold} m")]
    AtOrBelowThreshold { level: f64, threshold: f64 },
    #[error("sampling interval must be finite and > 0, got {0}")]
    InvalidInterval(f64),
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("target probability {0} outside (0, 1)")]
    InvalidTarget(f64),
    #[error("levels must be strictly ascending")]
    LevelsNotAscending,
    #[error("no threshold in ({lo}, {hi}) reproduces the target probability")]
    NoRoot { lo: f64, hi: f64 },
    #[error(transparent)]
    Model(#[from] DistError),
}

/// Per-observation probability of exceeding `level`.
pub fn exceedance_probability(fit: &TailFit, level: f64) -> Result<f64, RiskError> {
    if !(level > fit.threshold) {
        return Err(RiskError::AtOrBelowThreshold {
            level,
            threshold: fit.threshold,
        });
    }
    Ok(fit.model.survival(level - fit.threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "days", rename_all = "snake_case")]
pub enum ReturnPeriod {
    Finite(f64),
    /// The probability underflowed to zero.
    Infinite,
}

impl ReturnPeriod {
    pub fn days(self) -> Option<f64> {
        match self {
            ReturnPeriod::Finite(d) => Some(d),
            ReturnPeriod::Infinite => None,
        }
    }
}

pub fn return_period_days(probability: f64, sampling_interval_days: f64) -> Result<ReturnPeriod, RiskError> {
    if !(sampling_interval_days.is_finite() && sampling_interval_days > 0.0) {
        return Err(RiskError::InvalidInterval(sampling_interval_days));
    }
    if probability == 0.0 {
        return Ok(ReturnPeriod::Infinite);
    }
    if !(probability > 0.0 && probability <= 1.0) {
        return Err(RiskError::InvalidProbability(probability));
    }
    Ok(ReturnPeriod::Finite(sampling_interval_days / probability))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskRow {
    pub level_m: f64,
    pub probability: f64,
    pub return_period: ReturnPeriod,
}

impl RiskRow {
    pub fn probability_percent(&self) -> f64 {
        self.probability * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskTable {
    pub threshold_m: f64,
    pub model: DistributionModel,
    pub sampling_interval_days: f64,
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    pub fn levels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.level_m).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.probability).collect()
    }
}

pub fn risk_table(fit: &TailFit, levels: &[f64], sampling_interval_days: f64) -> Result<RiskTable, RiskError> {
    if !(sampling_interval_days.is_finite() && sampling_interval_days > 0.0) {
        return Err(RiskError::InvalidInterval(sampling_interval_days));
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RiskError::LevelsNotAscending);
    }
    let rows = levels
        .iter()
        .map(|&level_m| {
            let probability = exceedance_probability(fit, level_m)?;
            Ok(RiskRow {
                level_m,
                probability,
                return_period: return_period_days(probability, sampling_interval_days)?,
            })
        })
        .collect::<Result<Vec<_>, RiskError>>()?;
    Ok(RiskTable {
        threshold_m: fit.threshold,
        model: fit.model,
        sampling_interval_days,
        rows,
    })
}

/// Three significant digits in scientific notation, e.g. `1.70e-1`.
pub fn format_significant(value: f64) -> String {
    format!("{value:.2e}")
}

pub fn render_percent(probability: f64) -> String {
    format!("{} %", format_significant(probability * 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReconstruction {
    pub level: f64,
    pub target_probability: f64,
    pub threshold: f64,
    /// Relative residual `|S(level - u) - target| / target`.
    pub residual: f64,
}

/// Width of the bisection bracket below the level, in meters.
pub const RECONSTRUCTION_BRACKET_M: f64 = 50.0;
const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

/// Solves `exp(-λ (level - u)^r) = target` for `u` by bisection on
/// `(level - 50, level)`.
pub fn reconstruct_threshold(
    rate: f64,
    shape: f64,
    level: f64,
    target_probability: f64,
) -> Result<ThresholdReconstruction, RiskError> {
    if !(target_probability > 0.0 && target_probability < 1.0) {
        return Err(RiskError::InvalidTarget(target_probability));
    }
    let model = DistributionModel::weibull(rate, shape)?;
    let relative = |u: f64| (model.survival(level - u) - target_probability) / target_probability;

    // survival(level - u) grows with u: negative residual at lo, positive near level
    let (mut lo, mut hi) = (level - RECONSTRUCTION_BRACKET_M, level);
    if !(relative(lo) < 0.0) {
        return Err(RiskError::NoRoot { lo, hi });
    }
    let mut u = 0.5 * (lo + hi);
    let mut residual = relative(u);
    for _ in 0..200 {
        if residual.abs() < RECONSTRUCTION_TOLERANCE {
            break;
        }
        if residual < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        u = mid;
        residual = relative(u);
    }
    if !(residual.abs() < RECONSTRUCTION_TOLERANCE) {
        return Err(RiskError::NoRoot {
            lo: level - RECONSTRUCTION_BRACKET_M,
            hi: level,
        });
    }
    Ok(ThresholdReconstruction {
        level,
        target_probability,
        threshold: u,
        residual: residual.abs(),
    })
}

/// A return period quoted elsewhere for a given probability and interval,
/// compared with the value the formula gives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnPeriodCheck {
    pub probability: f64,
    pub sampling_interval_days: f64,
    pub quoted_days: f64,
    pub computed_days: f64,
    pub relative_difference: f64,
    pub consistent: bool,
    pub note: String,
}

/// Relative tolerance for calling a quoted return period consistent.
pub const RETURN_PERIOD_TOLERANCE: f64 = 0.01;

pub fn check_quoted_return_period(
    probability: f64,
    sampling_interval_days: f64,
    quoted_days: f64,
) -> Result<ReturnPeriodCheck, RiskError> {
    let computed_days = return_period_days(probability, sampling_interval_days)?
        .days()
        .ok_or(RiskError::InvalidProbability(probability))?;
    let relative_difference = (computed_days - quoted_days).abs() / quoted_days;
    let consistent = relative_difference <= RETURN_PERIOD_TOLERANCE;
    let note = if consistent {
        format!(
            "p = {} at {sampling_interval_days}-day sampling gives {computed_days:.0} days, consistent with the quoted {quoted_days} days",
            format_significant(probability)
        )
    } else {
        format!(
            "p = {} at {sampling_interval_days}-day sampling gives {computed_days:.0} days; the quoted {quoted_days} days differs by a factor of {:.2} and is not reproduced by interval / probability",
            format_significant(probability),
            computed_days / quoted_days
        )
    };
    Ok(ReturnPeriodCheck {
        probability,
        sampling_interval_days,
        quoted_days,
        computed_days,
        relative_difference,
        consistent,
        note,
    })
}

/// Reference exceedance table for the gauge the toolkit was first built for:
/// two Weibull tails `(λ, r)` with published probabilities (fractions, not
/// percent) at 61..66 m, and the return periods quoted alongside them.
pub mod reference {
    pub const LEVELS_M: [f64; 6] = [61.0, 62.0, 63.0, 64.0, 65.0, 66.0];
    pub const SAMPLING_INTERVAL_DAYS: f64 = 10.0;

    pub const BEFORE_DROP: (f64, f64) = (1.135, 1.410);
    pub const AFTER_DROP: (f64, f64) = (1.280, 1.494);

    pub const BEFORE_DROP_PROBABILITIES: [f64; 6] =
        [0.170e-2, 0.0104e-2, 0.000484e-2, 0.0000176e-2, 0.000000516e-2, 0.0000000123e-2];
    pub const AFTER_DROP_PROBABILITIES: [f64; 6] = [
        0.00112e-2,
        0.0000176e-2,
        0.000000184e-2,
        0.00000000132e-2,
        0.00000000000672e-2,
        0.0000000000000247e-2,
    ];

    /// `(probability, quoted return period in days)`.
    pub const QUOTED_RETURN_PERIODS: [(f64, f64); 2] = [(0.170e-2, 5880.0), (0.00112e-2, 89_285.0)];
}

pub fn reference_return_period_checks() -> Vec<ReturnPeriodCheck> {
    reference::QUOTED_RETURN_PERIODS
        .iter()
        .map(|&(p, quoted)| {
            check_quoted_return_period(p, reference::SAMPLING_INTERVAL_DAYS, quoted)
                .expect("reference constants are valid")
        })
        .collect()
}
