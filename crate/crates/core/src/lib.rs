//! Extreme value analysis of environmental level series.
//!
//! The pipeline stages map onto modules:
//!
//! - [`ingest`]: parse level records, deviation series, histograms, segmentation
//! - [`crest`]: wave-crest maxima and threshold excesses
//! - [`theta`]: extremal index (runs and interexceedance estimators)
//! - [`dist`]: exponential, Weibull, Gumbel and Fréchet families; empirical CDF
//! - [`fitgof`]: Q-Q coordinates, linearity, family selection, tail fits
//! - [`risk`]: exceedance probabilities and return periods
//!
//! Everything here is a pure function of its inputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crest;
pub mod dist;
pub mod fitgof;
pub mod ingest;
pub mod risk;
pub mod stats;
pub mod theta;

pub use crest::{extract_crests, CrestSeries, ExcessSample, Reference};
pub use dist::{DistributionModel, EmpiricalDistribution, Family};
pub use fitgof::{FitMethod, PlottingPositions, QqPlot, TailFit};
pub use ingest::{Segment, SplitSpec, WaterLevelSeries};
pub use risk::{RiskTable, ThresholdReconstruction};
pub use theta::{ThetaCurve, ThetaEstimate, ThetaMethod};
