//! Wave-crest maxima and threshold excesses.
//!
//! A wave structure runs from one up-crossing of the reference level to the
//! next. An up-crossing at index `i` means `levels[i - 1] <= reference` and
//! `levels[i] > reference`. The stretch before the first up-crossing is a
//! partial structure and emits nothing.

use serde::Serialize;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrestError {
    #[error("crest extraction needs at least 3 levels, got {0}")]
    TooShort(usize),
    #[error("non-finite reference level {0}")]
    NonFiniteReference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Reference {
    SegmentMean,
    Level(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrestSeries {
    pub crest_indices: Vec<usize>,
    pub crest_levels: Vec<f64>,
    pub reference_level: f64,
}

impl CrestSeries {
    pub fn len(&self) -> usize {
        self.crest_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crest_levels.is_empty()
    }
}

/// Maximum of every wave structure, with the first index attaining it.
pub fn extract_crests(levels: &[f64], reference: Reference) -> Result<CrestSeries, CrestError> {
    if levels.len() < 3 {
        return Err(CrestError::TooShort(levels.len()));
    }
    let reference_level = match reference {
        Reference::SegmentMean => stats::mean(levels),
        Reference::Level(v) if v.is_finite() => v,
        Reference::Level(v) => return Err(CrestError::NonFiniteReference(v)),
    };

    let mut crest_indices = Vec::new();
    let mut crest_levels = Vec::new();
    let mut current: Option<(usize, f64)> = None;
    for i in 1..levels.len() {
        if levels[i - 1] <= reference_level && levels[i] > reference_level {
            if let Some((idx, lvl)) = current.take() {
                crest_indices.push(idx);
                crest_levels.push(lvl);
            }
            current = Some((i, levels[i]));
        } else if let Some((_, best)) = current {
            if levels[i] > best {
                current = Some((i, levels[i]));
            }
        }
    }
    if let Some((idx, lvl)) = current {
        crest_indices.push(idx);
        crest_levels.push(lvl);
    }
    Ok(CrestSeries {
        crest_indices,
        crest_levels,
        reference_level,
    })
}

/// Positive excesses `h - u` over the threshold, in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcessSample {
    pub threshold: f64,
    pub excesses: Vec<f64>,
}

pub fn excesses(levels: &[f64], threshold: f64) -> ExcessSample {
    ExcessSample {
        threshold,
        excesses: levels
            .iter()
            .filter(|&&h| h > threshold)
            .map(|h| h - threshold)
            // rounding can collapse a tiny excess to zero
            .filter(|&x| x > 0.0)
            .collect(),
    }
}

pub fn crest_excesses(crests: &CrestSeries, threshold: f64) -> ExcessSample {
    excesses(&crests.crest_levels, threshold)
}
