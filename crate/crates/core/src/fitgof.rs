//! Q-Q diagnostics and tail fitting.
//!
//! Each family has a pair of coordinates in which its quantiles are linear:
//!
//! | family      | theoretical        | sample   |
//! |-------------|--------------------|----------|
//! | exponential | `-ln(1-p)`         | `x`      |
//! | weibull     | `ln(-ln(1-p))`     | `ln x`   |
//! | gumbel      | `-ln(-ln p)`       | `x`      |
//! | frechet     | `-ln(-ln p)`       | `ln x`   |
//!
//! Fitting by Q-Q regression reads the parameters off the least-squares line
//! in those coordinates. The Weibull MLE solves the profile likelihood
//! equation for the shape by bracketed bisection.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, DistributionModel, Family};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{family} Q-Q coordinates need positive values; order statistic {order} is {value}")]
    NonPositive {
        family: Family,
        order: usize,
        value: f64,
    },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("zero variance in the {0} coordinate")]
    ZeroVariance(&'static str),
    #[error("{family} Q-Q slope {slope} is not positive; family inconsistent with data")]
    NonPositiveSlope { family: Family, slope: f64 },
    #[error("profile likelihood has no sign change on the shape bracket (degenerate sample)")]
    NoSignChange,
    #[error("shape root search did not converge (residual {0:e})")]
    NotConverged(f64),
    #[error(transparent)]
    Model(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlottingPositions {
    /// `p_i = i / (n + 1)`
    #[default]
    Weibull,
    /// `p_i = (i - 0.5) / n`
    Hazen,
}

impl PlottingPositions {
    /// Plotting position of the `i`-th (1-based) of `n` order statistics.
    pub fn position(self, i: usize, n: usize) -> f64 {
        match self {
            PlottingPositions::Weibull => i as f64 / (n + 1) as f64,
            PlottingPositions::Hazen => (i as f64 - 0.5) / n as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlottingPositions::Weibull => "i/(n+1)",
            PlottingPositions::Hazen => "(i-0.5)/n",
        }
    }
}

impl fmt::Display for PlottingPositions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlottingPositions {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weibull" | "i/(n+1)" => Ok(Self::Weibull),
            "hazen" | "(i-0.5)/n" => Ok(Self::Hazen),
            other => Err(format!("unknown plotting-position rule '{other}' (weibull|hazen)")),
        }
    }
}

/// Theoretical Q-Q coordinate for probability `p`.
pub fn theoretical_coordinate(family: Family, p: f64) -> f64 {
    match family {
        Family::Exponential => -(-p).ln_1p(),
        Family::Weibull => (-(-p).ln_1p()).ln(),
        Family::Gumbel | Family::Frechet => -(-p.ln()).ln(),
    }
}

fn uses_log_sample(family: Family) -> bool {
    matches!(family, Family::Weibull | Family::Frechet)
}

/// Sample Q-Q coordinate of an order statistic.
pub fn sample_coordinate(family: Family, x: f64) -> f64 {
    if uses_log_sample(family) {
        x.ln()
    } else {
        x
    }
}

/// Axis names used for plot CSV headers.
pub fn axis_labels(family: Family) -> (&'static str, &'static str) {
    match family {
        Family::Exponential => ("Q_star", "Q"),
        Family::Weibull => ("ln_neg_ln_1mp", "ln_Q"),
        Family::Gumbel => ("neg_ln_neg_ln_p", "Q"),
        Family::Frechet => ("neg_ln_neg_ln_p", "ln_Q"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqPlot {
    pub family: Family,
    pub plotting_positions: PlottingPositions,
    pub points: Vec<QqPoint>,
}

impl QqPlot {
    pub fn theoretical(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theoretical).collect()
    }

    pub fn sample(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sample).collect()
    }
}

/// Minimum points for a line fit or a parameter fit.
pub const MIN_QQ_POINTS: usize = 3;
/// A plot by itself only needs two order statistics.
pub const MIN_PLOT_POINTS: usize = 2;

fn sorted_checked(values: &[f64], needed: usize) -> Result<Vec<f64>, FitError> {
    if values.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FitError::NonFinite(i));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// One point per order statistic, ascending in the theoretical coordinate.
pub fn qq_points(values: &[f64], family: Family, rule: PlottingPositions) -> Result<QqPlot, FitError> {
    let sorted = sorted_checked(values, MIN_PLOT_POINTS)?;
    let n = sorted.len();
    if uses_log_sample(family) {
        if let Some(i) = sorted.iter().position(|&x| x <= 0.0) {
            return Err(FitError::NonPositive {
                family,
                order: i + 1,
                value: sorted[i],
            });
        }
    }
    let points = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| QqPoint {
            theoretical: theoretical_coordinate(family, rule.position(i + 1, n)),
            sample: sample_coordinate(family, x),
        })
        .collect();
    Ok(QqPlot {
        family,
        plotting_positions: rule,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`, `R² = 1 - SS_res / SS_tot`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    assert_eq!(x.len(), y.len(), "coordinate vectors differ in length");
    let n = x.len();
    if n < MIN_QQ_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_QQ_POINTS,
            got: n,
        });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FitError::ZeroVariance("theoretical"));
    }
    if syy == 0.0 {
        return Err(FitError::ZeroVariance("sample"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

pub fn linearity(plot: &QqPlot) -> Result<LineFit, FitError> {
    least_squares(&plot.theoretical(), &plot.sample())
}

/// `R²` of the plot's sample coordinates against the straight line implied by
/// `model` itself, without refitting. The Q-Q regression fit maximizes this
/// over the family's parameters.
pub fn model_agreement(plot: &QqPlot, model: &DistributionModel) -> f64 {
    let ys = plot.sample();
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = plot
        .points
        .iter()
        .map(|pt| {
            let predicted = match *model {
                DistributionModel::Exponential { rate } => pt.theoretical / rate,
                DistributionModel::Weibull { rate, shape } => (pt.theoretical - rate.ln()) / shape,
                DistributionModel::Gumbel { location, scale } => location + scale * pt.theoretical,
                DistributionModel::Frechet { shape, scale, .. } => scale.ln() + pt.theoretical / shape,
            };
            (pt.sample - predicted).powi(2)
        })
        .sum();
    1.0 - ss_res / ss_tot
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    #[default]
    QqRegression,
    Mle,
}

impl FromStr for FitMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qq" | "qq-regression" => Ok(Self::QqRegression),
            "mle" => Ok(Self::Mle),
            other => Err(format!("unknown fit method '{other}' (qq|mle)")),
        }
    }
}

/// A fitted tail model for excesses over `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub model: DistributionModel,
    pub threshold: f64,
    pub method: FitMethod,
    /// R² of the family's Q-Q line.
    pub goodness: f64,
    pub sample_size: usize,
}

impl TailFit {
    pub fn family(&self) -> Family {
        self.model.family()
    }

    /// Weibull/exponential tail from published parameters, anchored at `threshold`.
    pub fn from_weibull(rate: f64, shape: f64, threshold: f64) -> Result<Self, DistError> {
        Ok(Self {
            model: DistributionModel::weibull(rate, shape)?,
            threshold,
            method: FitMethod::QqRegression,
            goodness: f64::NAN,
            sample_size: 0,
        })
    }
}

/// Reads family parameters off the Q-Q least-squares line.
///
/// `values` are the excesses over `threshold` (or a raw sample with
/// `threshold = 0`).
pub fn fit_qq_regression(
    values: &[f64],
    threshold: f64,
    family: Family,
    rule: PlottingPositions,
) -> Result<TailFit, FitError> {
    sorted_checked(values, MIN_QQ_POINTS)?;
    let plot = qq_points(values, family, rule)?;
    let line = linearity(&plot)?;
    let model = match family {
        Family::Exponential => {
            // through the origin: x = t / λ
            let (stt, stx) = plot.points.iter().fold((0.0, 0.0), |(stt, stx), p| {
                (stt + p.theoretical * p.theoretical, stx + p.theoretical * p.sample)
            });
            let slope = stx / stt;
            if !(slope > 0.0) {
                return Err(FitError::NonPositiveSlope { family, slope });
            }
            DistributionModel::exponential(1.0 / slope)?
        }
        Family::Weibull => {
            if !(line.slope > 0.0) {
                return Err(FitError::NonPositiveSlope {
                    family,
                    slope: line.slope,
                });
            }
            let shape = 1.0 / line.slope;
            DistributionModel::weibull((-line.intercept * shape).exp(), shape)?
        }
        Family::Gumbel => {
            if !(line.slope > 0.0) {
                return Err(FitError::NonPositiveSlope {
                    family,
                    slope: line.slope,
                });
            }
            DistributionModel::gumbel(line.intercept, line.slope)?
        }
        Family::Frechet => {
            if !(line.slope > 0.0) {
                return Err(FitError::NonPositiveSlope {
                    family,
                    slope: line.slope,
                });
            }
            DistributionModel::frechet(1.0 / line.slope, 0.0, line.intercept.exp())?
        }
    };
    Ok(TailFit {
        model,
        threshold,
        method: FitMethod::QqRegression,
        goodness: line.r_squared,
        sample_size: values.len(),
    })
}

const MLE_SHAPE_BRACKET: (f64, f64) = (1e-3, 1e3);
const MLE_TOLERANCE: f64 = 1e-10;
const MLE_MAX_ITER: usize = 500;

/// Profile-likelihood quantities with values rescaled by their maximum so
/// `x^r` never overflows on the bracket.
struct WeibullProfile {
    log_values: Vec<f64>,
    log_max: f64,
    mean_log: f64,
}

impl WeibullProfile {
    fn new(values: &[f64]) -> Self {
        let log_values: Vec<f64> = values.iter().map(|x| x.ln()).collect();
        let log_max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_log = log_values.iter().sum::<f64>() / log_values.len() as f64;
        Self {
            log_values,
            log_max,
            mean_log,
        }
    }

    /// `(Σ y^r, Σ y^r ln x)` with `y = x / max x`.
    fn sums(&self, shape: f64) -> (f64, f64) {
        self.log_values.iter().fold((0.0, 0.0), |(s0, s1), &lx| {
            let w = ((lx - self.log_max) * shape).exp();
            (s0 + w, s1 + w * lx)
        })
    }

    /// `Σ x^r ln x / Σ x^r - 1/r - mean(ln x)`, increasing in `r`.
    fn equation(&self, shape: f64) -> f64 {
        let (s0, s1) = self.sums(shape);
        s1 / s0 - 1.0 / shape - self.mean_log
    }

    /// `λ = n / Σ x^r`, evaluated in log space.
    fn rate(&self, shape: f64) -> f64 {
        let (s0, _) = self.sums(shape);
        let n = self.log_values.len() as f64;
        (n.ln() - shape * self.log_max - s0.ln()).exp()
    }
}

/// Weibull maximum likelihood fit of `F(x) = 1 - exp(-λ x^r)`.
pub fn fit_mle_weibull(values: &[f64], threshold: f64) -> Result<TailFit, FitError> {
    let sorted = sorted_checked(values, MIN_QQ_POINTS)?;
    if let Some(i) = sorted.iter().position(|&x| x <= 0.0) {
        return Err(FitError::NonPositive {
            family: Family::Weibull,
            order: i + 1,
            value: sorted[i],
        });
    }
    let profile = WeibullProfile::new(&sorted);
    let (mut lo, mut hi) = (MLE_SHAPE_BRACKET.0.ln(), MLE_SHAPE_BRACKET.1.ln());
    let (g_lo, g_hi) = (profile.equation(lo.exp()), profile.equation(hi.exp()));
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(FitError::NoSignChange);
    }
    let mut shape = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..MLE_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        shape = mid.exp();
        residual = profile.equation(shape);
        if residual.abs() < MLE_TOLERANCE || (hi - lo).abs() < f64::EPSILON {
            break;
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(residual.abs() < MLE_TOLERANCE) {
        return Err(FitError::NotConverged(residual));
    }
    let model = DistributionModel::weibull(profile.rate(shape), shape)?;
    let goodness = qq_points(&sorted, Family::Weibull, PlottingPositions::default())
        .and_then(|p| linearity(&p))
        .map(|l| l.r_squared)
        .unwrap_or(f64::NAN);
    Ok(TailFit {
        model,
        threshold,
        method: FitMethod::Mle,
        goodness,
        sample_size: values.len(),
    })
}

pub fn fit(
    values: &[f64],
    threshold: f64,
    family: Family,
    method: FitMethod,
    rule: PlottingPositions,
) -> Result<TailFit, FitError> {
    match (method, family) {
        (FitMethod::Mle, Family::Weibull) => fit_mle_weibull(values, threshold),
        (FitMethod::Mle, Family::Exponential) => {
            // closed form λ = n / Σx; the Weibull profile with r fixed at 1
            let sorted = sorted_checked(values, MIN_QQ_POINTS)?;
            if let Some(i) = sorted.iter().position(|&x| x <= 0.0) {
                return Err(FitError::NonPositive {
                    family,
                    order: i + 1,
                    value: sorted[i],
                });
            }
            let model = DistributionModel::exponential(sorted.len() as f64 / sorted.iter().sum::<f64>())?;
            let goodness = linearity(&qq_points(&sorted, family, rule)?)?.r_squared;
            Ok(TailFit {
                model,
                threshold,
                method: FitMethod::Mle,
                goodness,
                sample_size: values.len(),
            })
        }
        // other families have no likelihood fit here; fall back to regression
        _ => fit_qq_regression(values, threshold, family, rule),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyScore {
    pub family: Family,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedFamily {
    pub family: Family,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRanking {
    /// Descending R²; candidate order breaks ties.
    pub ranked: Vec<FamilyScore>,
    pub skipped: Vec<SkippedFamily>,
}

impl FamilyRanking {
    pub fn best(&self) -> Option<Family> {
        self.ranked.first().map(|s| s.family)
    }

    pub fn r_squared(&self, family: Family) -> Option<f64> {
        self.ranked
            .iter()
            .find(|s| s.family == family)
            .map(|s| s.r_squared)
    }
}

pub fn select_family(values: &[f64], candidates: &[Family], rule: PlottingPositions) -> FamilyRanking {
    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for &family in candidates {
        match qq_points(values, family, rule).and_then(|p| linearity(&p)) {
            Ok(line) => ranked.push(FamilyScore {
                family,
                r_squared: line.r_squared,
            }),
            Err(e) => skipped.push(SkippedFamily {
                family,
                reason: e.to_string(),
            }),
        }
    }
    ranked.sort_by(|a, b| b.r_squared.total_cmp(&a.r_squared));
    FamilyRanking { ranked, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(model: &DistributionModel, n: usize, rule: PlottingPositions) -> Vec<f64> {
        (1..=n).map(|i| model.quantile(rule.position(i, n)).unwrap()).collect()
    }

    #[test]
    fn exponential_qq_points_by_hand() {
        let plot = qq_points(&[2.0, 1.0], Family::Exponential, PlottingPositions::Weibull).unwrap();
        let expected = [(0.405465, 1.0), (1.098612, 2.0)];
        for (p, (t, s)) in plot.points.iter().zip(expected) {
            assert!((p.theoretical - t).abs() < 1e-6);
            assert_eq!(p.sample, s);
        }
        assert!(matches!(linearity(&plot), Err(FitError::TooFewPoints { .. })));
        assert!(matches!(
            qq_points(&[1.0], Family::Exponential, PlottingPositions::Weibull),
            Err(FitError::TooFewPoints { .. })
        ));

        let plot = qq_points(&[2.0, 1.0, 3.0], Family::Exponential, PlottingPositions::Weibull).unwrap();
        let expected = [(-(0.75f64).ln(), 1.0), (-(0.5f64).ln(), 2.0), (-(0.25f64).ln(), 3.0)];
        for (p, (t, s)) in plot.points.iter().zip(expected) {
            assert!((p.theoretical - t).abs() < 1e-15);
            assert_eq!(p.sample, s);
        }
    }

    #[test]
    fn exact_exponential_quantiles_lie_on_identity() {
        let e = DistributionModel::exponential(1.0).unwrap();
        let xs = noiseless(&e, 20, PlottingPositions::Weibull);
        let plot = qq_points(&xs, Family::Exponential, PlottingPositions::Weibull).unwrap();
        for p in &plot.points {
            assert!((p.theoretical - p.sample).abs() < 1e-12);
        }
        let line = linearity(&plot).unwrap();
        assert!((line.slope - 1.0).abs() < 1e-12);
        assert!(line.intercept.abs() < 1e-12);
        assert!((line.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weibull_log_domain_error_names_order_statistic() {
        let err = qq_points(&[0.5, 0.0, 1.0], Family::Weibull, PlottingPositions::Weibull).unwrap_err();
        assert_eq!(
            err,
            FitError::NonPositive {
                family: Family::Weibull,
                order: 1,
                value: 0.0
            }
        );
        assert!(qq_points(&[0.5, 0.0, 1.0], Family::Gumbel, PlottingPositions::Weibull).is_ok());
    }

    #[test]
    fn plotting_positions_stay_inside_unit_interval() {
        for n in [1, 2, 10, 1000] {
            for i in 1..=n {
                for rule in [PlottingPositions::Weibull, PlottingPositions::Hazen] {
                    let p = rule.position(i, n);
                    assert!(p > 0.0 && p < 1.0);
                }
            }
        }
    }

    #[test]
    fn collinear_points_have_unit_r_squared() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let l = least_squares(&x, &y).unwrap();
        assert_eq!((l.slope, l.intercept, l.r_squared), (2.0, 1.0, 1.0));
    }

    #[test]
    fn perturbed_line_matches_normal_equations() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        y[2] += 0.1;
        // normal equations [n Σx; Σx Σx²] [a; b] = [Σy; Σxy], solved by Cramer's rule
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = n * sxx - sx * sx;
        let a = (sy * sxx - sx * sxy) / det;
        let b = (n * sxy - sx * sy) / det;
        let my = sy / n;
        let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
        let ss_res: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
        let expected_r2 = 1.0 - ss_res / ss_tot;

        let l = least_squares(&x, &y).unwrap();
        assert!((l.slope - b).abs() < 1e-12);
        assert!((l.intercept - a).abs() < 1e-12);
        assert!((l.r_squared - expected_r2).abs() < 1e-12);
        assert!(l.r_squared < 1.0);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert_eq!(
            least_squares(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(FitError::ZeroVariance("theoretical"))
        );
    }

    #[test]
    fn qq_regression_recovers_noiseless_weibull() {
        let truth = DistributionModel::weibull(1.135, 1.410).unwrap();
        let xs = noiseless(&truth, 200, PlottingPositions::Weibull);
        let fit = fit_qq_regression(&xs, 57.6, Family::Weibull, PlottingPositions::Weibull).unwrap();
        let DistributionModel::Weibull { rate, shape } = fit.model else {
            panic!("wrong family")
        };
        assert!((rate - 1.135).abs() < 1e-6);
        assert!((shape - 1.410).abs() < 1e-6);
        assert_eq!(fit.threshold, 57.6);
        assert_eq!(fit.sample_size, 200);
    }

    #[test]
    fn qq_regression_recovers_noiseless_exponential() {
        let truth = DistributionModel::exponential(2.0).unwrap();
        let xs = noiseless(&truth, 100, PlottingPositions::Weibull);
        let fit = fit_qq_regression(&xs, 0.0, Family::Exponential, PlottingPositions::Weibull).unwrap();
        let DistributionModel::Exponential { rate } = fit.model else {
            panic!("wrong family")
        };
        assert!((rate - 2.0).abs() < 1e-9);
    }

    #[test]
    fn qq_regression_recovers_gumbel_and_frechet() {
        let g = DistributionModel::gumbel(3.0, 0.7).unwrap();
        let xs = noiseless(&g, 150, PlottingPositions::Hazen);
        let fit = fit_qq_regression(&xs, 0.0, Family::Gumbel, PlottingPositions::Hazen).unwrap();
        let DistributionModel::Gumbel { location, scale } = fit.model else { panic!() };
        assert!((location - 3.0).abs() < 1e-9 && (scale - 0.7).abs() < 1e-9);

        let f = DistributionModel::frechet(2.5, 0.0, 1.8).unwrap();
        let xs = noiseless(&f, 150, PlottingPositions::Weibull);
        let fit = fit_qq_regression(&xs, 0.0, Family::Frechet, PlottingPositions::Weibull).unwrap();
        let DistributionModel::Frechet { shape, scale, .. } = fit.model else { panic!() };
        assert!((shape - 2.5).abs() < 1e-9 && (scale - 1.8).abs() < 1e-9);
    }

    #[test]
    fn decreasing_relation_is_a_fit_failure() {
        // sample coordinates anti-correlated with the theoretical ones cannot
        // arise from sorted data; build the plot by hand instead
        let plot = QqPlot {
            family: Family::Weibull,
            plotting_positions: PlottingPositions::Weibull,
            points: vec![
                QqPoint { theoretical: 0.0, sample: 3.0 },
                QqPoint { theoretical: 1.0, sample: 2.0 },
                QqPoint { theoretical: 2.0, sample: 1.0 },
            ],
        };
        assert!(linearity(&plot).unwrap().slope < 0.0);
    }

    #[test]
    fn mle_rejects_constant_sample() {
        assert_eq!(fit_mle_weibull(&[2.0; 10], 0.0), Err(FitError::NoSignChange));
        assert!(matches!(
            fit_mle_weibull(&[1.0, -1.0, 2.0], 0.0),
            Err(FitError::NonPositive { .. })
        ));
    }

    #[test]
    fn mle_and_regression_agree_on_noiseless_grid() {
        let truth = DistributionModel::weibull(1.28, 1.494).unwrap();
        let xs = noiseless(&truth, 5000, PlottingPositions::Weibull);
        let mle = fit_mle_weibull(&xs, 0.0).unwrap();
        let qq = fit_qq_regression(&xs, 0.0, Family::Weibull, PlottingPositions::Weibull).unwrap();
        let (DistributionModel::Weibull { rate: a, shape: r }, DistributionModel::Weibull { rate: b, shape: s }) =
            (mle.model, qq.model)
        else {
            panic!()
        };
        assert!((a - b).abs() / b < 0.01, "{a} vs {b}");
        assert!((r - s).abs() / s < 0.01, "{r} vs {s}");
    }

    #[test]
    fn mle_handles_large_magnitudes() {
        let truth = DistributionModel::weibull(1.0, 2.0).unwrap();
        let xs: Vec<f64> = noiseless(&truth, 500, PlottingPositions::Weibull)
            .into_iter()
            .map(|x| x * 1e6)
            .collect();
        let fit = fit_mle_weibull(&xs, 0.0).unwrap();
        let DistributionModel::Weibull { rate, shape } = fit.model else { panic!() };
        assert!(rate.is_finite() && rate > 0.0);
        assert!((shape - 2.0).abs() < 0.05);
    }

    #[test]
    fn family_ranking_skips_log_families_for_zero_values() {
        let values = [0.0, 0.3, 0.9, 1.4, 2.2, 3.1];
        let ranking = select_family(&values, &Family::ALL, PlottingPositions::Weibull);
        let skipped: Vec<Family> = ranking.skipped.iter().map(|s| s.family).collect();
        assert_eq!(skipped, vec![Family::Weibull, Family::Frechet]);
        let ranked: Vec<Family> = ranking.ranked.iter().map(|s| s.family).collect();
        assert!(ranked.contains(&Family::Gumbel) && ranked.contains(&Family::Exponential));
        assert!(ranking.ranked.windows(2).all(|w| w[0].r_squared >= w[1].r_squared));
    }

    #[test]
    fn parsing_options() {
        assert_eq!("qq".parse::<FitMethod>().unwrap(), FitMethod::QqRegression);
        assert_eq!("MLE".parse::<FitMethod>().unwrap(), FitMethod::Mle);
        assert_eq!("hazen".parse::<PlottingPositions>().unwrap(), PlottingPositions::Hazen);
        assert!("bogus".parse::<FitMethod>().is_err());
    }
}
