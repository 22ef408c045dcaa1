//! Parametric tail families and the empirical distribution.
//!
//! Exponential and Weibull use the rate form
//!
//! ```text
//! F(x) = 1 - exp(-λ x)        exponential
//! F(x) = 1 - exp(-λ x^r)      weibull, x > 0
//! ```
//!
//! Gumbel and Fréchet use the standard location/scale forms
//!
//! ```text
//! F(x) = exp(-exp(-(x - loc) / scale))            gumbel
//! F(x) = exp(-((x - loc) / scale)^(-r)), x > loc  frechet
//! ```
//!
//! "Fréchet-Pareto" is accepted as an alias for the Fréchet family when parsing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("empirical quantile requires 0 <= p < 1, got {0}")]
    EmpiricalProbability(f64),
    #[error("empirical distribution needs at least one finite value")]
    EmptySample,
    #[error("unknown distribution family '{0}'")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Weibull,
    Gumbel,
    Frechet,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Weibull,
        Family::Exponential,
        Family::Gumbel,
        Family::Frechet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::Gumbel => "gumbel",
            Family::Frechet => "frechet",
        }
    }

    /// Single-letter code used by the `--families` flag.
    pub fn code(self) -> char {
        match self {
            Family::Exponential => 'e',
            Family::Weibull => 'w',
            Family::Gumbel => 'g',
            Family::Frechet => 'f',
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e" | "exp" | "exponential" => Ok(Family::Exponential),
            "w" | "weibull" => Ok(Family::Weibull),
            "g" | "gumbel" => Ok(Family::Gumbel),
            "f" | "frechet" | "fréchet" | "frechet-pareto" => Ok(Family::Frechet),
            other => Err(DistError::UnknownFamily(other.to_string())),
        }
    }
}

/// A validated member of one of the supported families.
///
/// Construct through the named constructors; parameters are checked once
/// there and every evaluation method assumes a valid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionModel {
    Exponential { rate: f64 },
    Weibull { rate: f64, shape: f64 },
    Gumbel { location: f64, scale: f64 },
    Frechet { shape: f64, location: f64, scale: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, DistError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DistError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64, DistError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DistError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

impl DistributionModel {
    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        Ok(Self::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    /// Weibull in rate form, `F(x) = 1 - exp(-rate * x^shape)`.
    pub fn weibull(rate: f64, shape: f64) -> Result<Self, DistError> {
        Ok(Self::Weibull {
            rate: positive("rate", rate)?,
            shape: positive("shape", shape)?,
        })
    }

    pub fn gumbel(location: f64, scale: f64) -> Result<Self, DistError> {
        Ok(Self::Gumbel {
            location: finite("location", location)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn frechet(shape: f64, location: f64, scale: f64) -> Result<Self, DistError> {
        Ok(Self::Frechet {
            shape: positive("shape", shape)?,
            location: finite("location", location)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Exponential { .. } => Family::Exponential,
            Self::Weibull { .. } => Family::Weibull,
            Self::Gumbel { .. } => Family::Gumbel,
            Self::Frechet { .. } => Family::Frechet,
        }
    }

    /// `λ x^r` for the exponential and Weibull families (0 outside the support).
    fn cumulative_hazard(rate: f64, shape: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x == f64::INFINITY {
            f64::INFINITY
        } else {
            rate * x.powf(shape)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => -(-Self::cumulative_hazard(rate, 1.0, x)).exp_m1(),
            Self::Weibull { rate, shape } => -(-Self::cumulative_hazard(rate, shape, x)).exp_m1(),
            Self::Gumbel { location, scale } => (-(-(x - location) / scale).exp()).exp(),
            Self::Frechet {
                shape,
                location,
                scale,
            } => {
                if x <= location {
                    0.0
                } else {
                    (-((x - location) / scale).powf(-shape)).exp()
                }
            }
        }
    }

    /// Upper tail probability `1 - F(x)`, evaluated without cancellation.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (-Self::cumulative_hazard(rate, 1.0, x)).exp(),
            Self::Weibull { rate, shape } => (-Self::cumulative_hazard(rate, shape, x)).exp(),
            Self::Gumbel { location, scale } => -(-(-(x - location) / scale).exp()).exp_m1(),
            Self::Frechet {
                shape,
                location,
                scale,
            } => {
                if x <= location {
                    1.0
                } else {
                    -(-((x - location) / scale).powf(-shape)).exp_m1()
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Self::Weibull { rate, shape } => {
                if x < 0.0 || x.is_infinite() {
                    return 0.0;
                }
                if x == 0.0 {
                    return if shape > 1.0 {
                        0.0
                    } else if shape == 1.0 {
                        rate
                    } else {
                        f64::INFINITY
                    };
                }
                let xr = x.powf(shape);
                rate * shape * xr / x * (-rate * xr).exp()
            }
            Self::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                if z.is_infinite() {
                    return 0.0;
                }
                let e = (-z).exp();
                if e.is_infinite() {
                    return 0.0;
                }
                e * (-e).exp() / scale
            }
            Self::Frechet {
                shape,
                location,
                scale,
            } => {
                if x <= location || x.is_infinite() {
                    return 0.0;
                }
                let z = (x - location) / scale;
                let zr = z.powf(-shape);
                shape / scale * zr / z * (-zr).exp()
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf) on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::ProbabilityOutOfRange(p));
        }
        // -ln(1 - p), accurate for small p
        let hazard = -(-p).ln_1p();
        Ok(match *self {
            Self::Exponential { rate } => hazard / rate,
            Self::Weibull { rate, shape } => (hazard / rate).powf(1.0 / shape),
            Self::Gumbel { location, scale } => location - scale * (-p.ln()).ln(),
            Self::Frechet {
                shape,
                location,
                scale,
            } => location + scale * (-p.ln()).powf(-1.0 / shape),
        })
    }
}

/// Sorted sample with the step-function CDF `F̂(x) = #{x_i <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(values: &[f64]) -> Result<Self, DistError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(DistError::EmptySample);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&v| v <= x);
        at_or_below as f64 / self.sorted.len() as f64
    }

    /// `Q̂(p) = inf { x : F̂(x) > p }`, i.e. the smallest order statistic whose
    /// empirical CDF strictly exceeds `p`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..1.0).contains(&p) {
            return Err(DistError::EmpiricalProbability(p));
        }
        let n = self.sorted.len();
        // F̂ at the k-th order statistic (1-based, counting ties) is at least k/n;
        // scan ties so the comparison uses the true step height.
        let mut k = 0;
        while k < n {
            let v = self.sorted[k];
            let mut j = k;
            while j + 1 < n && self.sorted[j + 1] == v {
                j += 1;
            }
            if (j + 1) as f64 / n as f64 > p {
                return Ok(v);
            }
            k = j + 1;
        }
        Ok(self.sorted[n - 1])
    }
}
