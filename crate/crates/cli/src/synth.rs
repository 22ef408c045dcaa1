//! Seeded synthetic level series with known Weibull crest tails.
//!
//! Each regime is a train of triangular waves. A wave rises from a trough
//! below the regime anchor `u` to a crest `u + W`, with `W` drawn from the
//! regime's Weibull law `1 - exp(-λ x^r)`, then falls to the next trough.
//! Every wave crosses the segment mean exactly once upwards, so crest
//! extraction recovers one crest per wave and the crest excesses over `u`
//! are the Weibull draws themselves (up to output rounding).

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::Serialize;
use thiserror::Error;

/// Decimal places written to the CSV (0.1 mm).
pub const LEVEL_DECIMALS: usize = 4;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("regime {index}: invalid Weibull parameters rate={rate}, shape={shape}")]
    InvalidWeibull { index: usize, rate: f64, shape: f64 },
    #[error("regime {0} has no waves")]
    NoWaves(usize),
    #[error("date range overflows the calendar")]
    DateOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeSpec {
    /// Anchor threshold `u` in metres; crests are `u + W`.
    pub threshold_m: f64,
    pub rate: f64,
    pub shape: f64,
    pub waves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub start: NaiveDate,
    pub interval_days: u64,
    pub regimes: Vec<RegimeSpec>,
}

impl SynthSpec {
    /// The bundled two-regime series: a higher regime followed by a drop.
    pub fn two_regime(seed: u64) -> Self {
        Self {
            seed,
            start: NaiveDate::from_ymd_opt(1700, 1, 1).expect("valid date"),
            interval_days: 10,
            regimes: vec![
                RegimeSpec {
                    threshold_m: 57.6,
                    rate: 1.135,
                    shape: 1.410,
                    waves: 1200,
                },
                RegimeSpec {
                    threshold_m: 56.68,
                    rate: 1.280,
                    shape: 1.494,
                    waves: 1200,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSeries {
    pub spec: SynthSpec,
    pub dates: Vec<NaiveDate>,
    pub levels: Vec<f64>,
    /// First index of each regime after the first.
    pub regime_starts: Vec<usize>,
}

fn round_level(x: f64) -> f64 {
    let scale = 10f64.powi(LEVEL_DECIMALS as i32);
    (x * scale).round() / scale
}

pub fn generate(spec: &SynthSpec) -> Result<SynthSeries, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut levels = Vec::new();
    let mut regime_starts = Vec::new();
    for (index, regime) in spec.regimes.iter().enumerate() {
        if regime.waves == 0 {
            return Err(SynthError::NoWaves(index));
        }
        if !(regime.rate > 0.0 && regime.shape > 0.0) {
            return Err(SynthError::InvalidWeibull {
                index,
                rate: regime.rate,
                shape: regime.shape,
            });
        }
        // rand_distr parameterises by scale: λ x^r = (x / scale)^r
        let weibull = Weibull::new(regime.rate.powf(-1.0 / regime.shape), regime.shape).map_err(|_| {
            SynthError::InvalidWeibull {
                index,
                rate: regime.rate,
                shape: regime.shape,
            }
        })?;
        if index > 0 {
            regime_starts.push(levels.len());
        }
        let trough = |rng: &mut ChaCha8Rng| regime.threshold_m - 1.5 - rng.random::<f64>();
        let mut current = trough(&mut rng);
        levels.push(round_level(current));
        for _ in 0..regime.waves {
            let crest = regime.threshold_m + weibull.sample(&mut rng);
            let next = trough(&mut rng);
            let rise: u32 = rng.random_range(2..=4);
            let fall: u32 = rng.random_range(2..=4);
            for k in 1..=rise {
                let t = f64::from(k) / f64::from(rise);
                levels.push(round_level(current + (crest - current) * t));
            }
            for k in 1..=fall {
                let t = f64::from(k) / f64::from(fall);
                levels.push(round_level(crest + (next - crest) * t));
            }
            current = next;
        }
    }
    let dates = (0..levels.len() as u64)
        .map(|i| {
            spec.start
                .checked_add_days(Days::new(i * spec.interval_days))
                .ok_or(SynthError::DateOverflow)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SynthSeries {
        spec: spec.clone(),
        dates,
        levels,
        regime_starts,
    })
}

impl SynthSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.levels.len() * 20);
        out.push_str("date,level_m\n");
        for (d, h) in self.dates.iter().zip(&self.levels) {
            out.push_str(&format!("{},{:.*}\n", d.format("%Y-%m-%d"), LEVEL_DECIMALS, h));
        }
        out
    }

    /// Generator truth, written next to the CSV.
    pub fn metadata_json(&self) -> String {
        #[derive(Serialize)]
        struct Meta<'a> {
            generator: &'static str,
            seed: u64,
            start: String,
            interval_days: u64,
            observations: usize,
            regime_starts: &'a [usize],
            regimes: &'a [RegimeSpec],
        }
        let meta = Meta {
            generator: "triangular waves with Weibull crest excesses",
            seed: self.spec.seed,
            start: self.spec.start.format("%Y-%m-%d").to_string(),
            interval_days: self.spec.interval_days,
            observations: self.levels.len(),
            regime_starts: &self.regime_starts,
            regimes: &self.spec.regimes,
        };
        serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use evt_core::crest::{crest_excesses, extract_crests, Reference};

    #[test]
    fn same_seed_same_series() {
        let spec = SynthSpec::two_regime(3);
        assert_eq!(generate(&spec).unwrap().levels, generate(&spec).unwrap().levels);
        let other = SynthSpec::two_regime(4);
        assert_ne!(generate(&spec).unwrap().levels, generate(&other).unwrap().levels);
    }

    #[test]
    fn one_crest_per_wave_above_the_anchor() {
        let mut spec = SynthSpec::two_regime(9);
        spec.regimes.truncate(1);
        spec.regimes[0].waves = 300;
        let s = generate(&spec).unwrap();
        let crests = extract_crests(&s.levels, Reference::SegmentMean).unwrap();
        // the first wave starts at the series' first trough, so every wave counts
        assert_eq!(crests.len(), 300);
        let ex = crest_excesses(&crests, spec.regimes[0].threshold_m);
        assert!(ex.excesses.len() >= 298);
    }
}
