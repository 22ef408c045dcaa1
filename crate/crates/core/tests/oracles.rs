//! Independent numerical oracles: quadrature, finite differences and seeded
//! Monte Carlo generators.

use evt_core::dist::{DistributionModel, Family};
use evt_core::fitgof::{fit_mle_weibull, fit_qq_regression, qq_points, linearity, select_family, PlottingPositions};
use evt_core::ingest::{histogram, Binning};
use evt_core::stats::percentile;
use evt_core::theta::{interexceedance_estimator, runs_estimator, theta_sweep, ThetaMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Frechet, Weibull};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1) + adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive_simpson(f, a, b, simpson(f, a, b), 1e-12, 40)
}

fn random_models(rng: &mut ChaCha8Rng, count: usize) -> Vec<DistributionModel> {
    (0..count)
        .flat_map(|_| {
            vec![
                DistributionModel::exponential(rng.random_range(0.2..5.0)).unwrap(),
                DistributionModel::weibull(rng.random_range(0.2..5.0), rng.random_range(1.0..4.0)).unwrap(),
                DistributionModel::gumbel(rng.random_range(-5.0..5.0), rng.random_range(0.2..3.0)).unwrap(),
                DistributionModel::frechet(rng.random_range(1.0..4.0), rng.random_range(-2.0..2.0), rng.random_range(0.2..3.0))
                    .unwrap(),
            ]
        })
        .collect()
}

#[test]
fn pdf_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for model in random_models(&mut rng, 5) {
        let (lo, tail_mass_below) = match model {
            DistributionModel::Exponential { .. } | DistributionModel::Weibull { .. } => (0.0, 0.0),
            DistributionModel::Frechet { location, .. } => (location, 0.0),
            DistributionModel::Gumbel { .. } => (model.quantile(1e-15).unwrap(), 1e-15),
        };
        let upper_p = 1.0 - 1e-10;
        let hi = model.quantile(upper_p).unwrap();
        // integrate piecewise between a few interior points
        let mut knots = vec![lo];
        for p in [0.01, 0.1, 0.5, 0.9, 0.99, 0.9999] {
            let q = model.quantile(p).unwrap();
            if q > lo && q < hi {
                knots.push(q);
            }
        }
        knots.push(hi);
        let pdf = |x: f64| model.pdf(x);
        let mass: f64 = knots.windows(2).map(|w| integrate(&pdf, w[0], w[1])).sum();
        let expected = 1.0 - tail_mass_below - (1.0 - upper_p);
        assert!((mass - expected).abs() < 1e-6, "{model:?}: {mass}");
    }
}

#[test]
fn pdf_matches_finite_difference_of_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for model in random_models(&mut rng, 5) {
        for k in 1..20 {
            let x = model.quantile(0.05 * f64::from(k)).unwrap();
            let h = 1e-5 * x.abs().max(1.0);
            let fd = (model.cdf(x + h) - model.cdf(x - h)) / (2.0 * h);
            let pdf = model.pdf(x);
            assert!((fd - pdf).abs() <= 1e-6 * pdf, "{model:?} x={x}: fd={fd} pdf={pdf}");
        }
    }
}

#[test]
fn survival_keeps_precision_deep_in_the_tail() {
    // invert S(x) = exp(-λ x^r) by hand and check the relative error
    for (rate, shape) in [(1.135, 1.410), (1.280, 1.494), (0.5, 0.7), (3.0, 2.5)] {
        let w = DistributionModel::weibull(rate, shape).unwrap();
        for target in [1e-3f64, 1e-9, 1e-15, 2.47e-17, 1e-19, 1e-25] {
            let x = ((1.0 / target).ln() / rate).powf(1.0 / shape);
            let s = w.survival(x);
            assert!((s - target).abs() / target < 5e-4, "λ={rate} r={shape}: {s} vs {target}");
        }
    }
}

#[test]
fn uniform_histogram_law_of_large_numbers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2019);
    let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let edges: Vec<f64> = (0..=10).map(|k| f64::from(k) / 10.0).collect();
    let h = histogram(&values, &Binning::Edges(edges)).unwrap();
    for p in h.probabilities {
        assert!((p - 0.1).abs() < 0.05, "{p}");
    }
}

fn iid_uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// `X_i = max(Z_i, Z_{i-1})` with unit-Fréchet `Z`; extremal index 1/2.
fn moving_maximum(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frechet = Frechet::new(0.0, 1.0, 1.0).unwrap();
    let z: Vec<f64> = (0..=n).map(|_| frechet.sample(&mut rng)).collect();
    z.windows(2).map(|w| w[0].max(w[1])).collect()
}

#[test]
fn iid_sample_has_unit_theta_at_high_thresholds() {
    let sample = iid_uniform(100_000, 42);
    let grid: Vec<f64> = (90..100).map(|q| percentile(&sample, f64::from(q) / 100.0)).collect();
    let curve = theta_sweep(&sample, &grid, ThetaMethod::Runs, 1).unwrap();
    for point in &curve.points {
        let theta = point.theta().unwrap();
        assert!((theta - 1.0).abs() < 0.1, "u={} θ={theta}", point.threshold);
    }
    let u95 = percentile(&sample, 0.95);
    let e = interexceedance_estimator(&sample, u95).unwrap();
    assert!((e.theta - 1.0).abs() < 0.1, "{e:?}");
}

#[test]
fn moving_maximum_has_half_theta() {
    let sample = moving_maximum(100_000, 42);
    for q in [0.95, 0.97, 0.99] {
        let u = percentile(&sample, q);
        let runs = runs_estimator(&sample, u, 1).unwrap();
        assert!((runs.theta - 0.5).abs() < 0.1, "q={q} runs θ={}", runs.theta);
        let inter = interexceedance_estimator(&sample, u).unwrap();
        assert!((inter.theta - 0.5).abs() < 0.1, "q={q} interexceedance θ={}", inter.theta);
    }
}

fn weibull_draws(rate: f64, shape: f64, n: usize, seed: u64) -> Vec<f64> {
    // rand_distr's Weibull has F(x) = 1 - exp(-(x/scale)^shape)
    let scale = rate.powf(-1.0 / shape);
    let dist = Weibull::new(scale, shape).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

fn weibull_params(model: DistributionModel) -> (f64, f64) {
    match model {
        DistributionModel::Weibull { rate, shape } => (rate, shape),
        other => panic!("expected weibull, got {other:?}"),
    }
}

#[test]
fn qq_regression_on_random_weibull_draws() {
    let sample = weibull_draws(1.28, 1.494, 5000, 3);
    let fit = fit_qq_regression(&sample, 0.0, Family::Weibull, PlottingPositions::Weibull).unwrap();
    let (rate, shape) = weibull_params(fit.model);
    assert!((rate - 1.28).abs() / 1.28 < 0.10, "{rate}");
    assert!((shape - 1.494).abs() / 1.494 < 0.10, "{shape}");
}

#[test]
fn mle_on_random_weibull_draws() {
    let sample = weibull_draws(1.0, 2.0, 5000, 5);
    let fit = fit_mle_weibull(&sample, 0.0).unwrap();
    let (rate, shape) = weibull_params(fit.model);
    assert!((rate - 1.0).abs() < 0.05, "{rate}");
    assert!((shape - 2.0).abs() / 2.0 < 0.05, "{shape}");
}

#[test]
fn weibull_qq_beats_exponential_on_weibull_data() {
    let sample = weibull_draws(1.135, 1.410, 500, 1);
    let w = linearity(&qq_points(&sample, Family::Weibull, PlottingPositions::Weibull).unwrap()).unwrap();
    let e = linearity(&qq_points(&sample, Family::Exponential, PlottingPositions::Weibull).unwrap()).unwrap();
    assert!(w.r_squared > 0.99, "{}", w.r_squared);
    assert!(w.r_squared > e.r_squared, "{} vs {}", w.r_squared, e.r_squared);
}

#[test]
fn family_selection_prefers_weibull_for_weibull_data() {
    let sample = weibull_draws(1.135, 1.410, 2000, 9);
    let ranking = select_family(&sample, &Family::ALL, PlottingPositions::Weibull);
    assert_eq!(ranking.best(), Some(Family::Weibull), "{ranking:?}");
    assert!(ranking.skipped.is_empty());
}

#[test]
fn exponential_data_fits_weibull_with_unit_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let exp = Exp::new(1.7).unwrap();
    let sample: Vec<f64> = (0..2000).map(|_| exp.sample(&mut rng)).collect();
    let ranking = select_family(&sample, &[Family::Exponential, Family::Weibull], PlottingPositions::Weibull);
    assert!(ranking.r_squared(Family::Exponential).unwrap() > 0.98);
    assert!(ranking.r_squared(Family::Weibull).unwrap() > 0.98);
    let fit = fit_qq_regression(&sample, 0.0, Family::Weibull, PlottingPositions::Weibull).unwrap();
    let (_, shape) = weibull_params(fit.model);
    assert!((shape - 1.0).abs() < 0.1, "{shape}");
}
