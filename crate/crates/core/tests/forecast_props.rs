use leadshare::forecast::{confidence_band, ols_fit, parity_year, DEFAULT_HORIZON, DEFAULT_WINDOW};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn noisy_line(m: f64, b: f64, sigma: f64, years: std::ops::RangeInclusive<i32>, seed: u64) -> Vec<(i32, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    years.map(|x| (x, m * x as f64 + b + noise.sample(&mut rng))).collect()
}

#[test]
fn noisy_slope_within_three_standard_errors() {
    let pts = noisy_line(0.012, -24.25, 0.01, 2010..=2021, 42);
    let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
    assert!((f.slope - 0.012).abs() <= 3.0 * f.slope_se());
}

#[test]
fn band_matches_independent_formula() {
    let pts = noisy_line(0.01, -19.9, 0.02, 2010..=2021, 7);
    let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
    assert_eq!(f.n, 12);
    // recompute from raw sums with a different t implementation
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0 as f64).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 as f64).powi(2)).sum::<f64>() - sx * sx / n;
    let sxy: f64 = pts.iter().map(|p| p.0 as f64 * p.1).sum::<f64>() - sx * sy / n;
    let slope = sxy / sxx;
    let icpt = sy / n - slope * sx / n;
    let sse: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0 as f64).powi(2)).sum();
    let t = StudentsT::new(0.0, 1.0, n - 2.0).unwrap().inverse_cdf(0.975);
    let x = 2030.0;
    let y = icpt + slope * x;
    let h = t * (sse / (n - 2.0) * (1.0 / n + (x - sx / n).powi(2) / sxx)).sqrt();
    let (lo, hi) = confidence_band(&f, x);
    assert!((lo - (y - h)).abs() < 1e-9, "{lo} vs {}", y - h);
    assert!((hi - (y + h)).abs() < 1e-9);
}

#[test]
fn coverage_at_the_centroid() {
    let (m, b) = (0.01, -19.9);
    let trials = 2000;
    let mut hits = 0;
    for seed in 0..trials {
        let pts = noisy_line(m, b, 0.03, 2010..=2021, 1000 + seed);
        let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
        let (lo, hi) = confidence_band(&f, f.x_mean);
        let truth = m * f.x_mean + b;
        if lo <= truth && truth <= hi {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    assert!((rate - 0.95).abs() <= 0.03, "coverage {rate}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn centroid_and_residuals(pts in prop::collection::btree_map(2010..=2021i32, -1.0..1.0f64, 3..12)) {
        let pts: Vec<(i32, f64)> = pts.into_iter().collect();
        let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
        let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        prop_assert!((f.intercept + f.slope * f.x_mean - y_mean).abs() < 1e-9);
        let resid: f64 = pts.iter().map(|p| p.1 - f.predict(p.0 as f64)).sum();
        prop_assert!(resid.abs() < 1e-9);
        prop_assert_eq!(f.dof, f.n - 2);
    }

    #[test]
    fn zero_noise_recovery(m in 0.001..0.05f64, at in 2015.0..2080.0f64) {
        let b = 0.5 - m * at;
        let pts: Vec<(i32, f64)> = (2010..=2021).map(|x| (x, m * x as f64 + b)).collect();
        let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
        prop_assert!((f.slope - m).abs() < 1e-9);
        prop_assert!((f.intercept - b).abs() < 1e-9 * (1.0 + b.abs()));
        let p = parity_year(&f, 0.5, DEFAULT_HORIZON);
        prop_assert!((p.point_year.unwrap() - at).abs() < 1e-6);
    }

    #[test]
    fn wider_level_nests_narrower(seed in 0u64..500, x in 1990.0..2060.0f64) {
        let f = ols_fit(&noisy_line(0.01, -19.9, 0.02, 2010..=2021, seed), DEFAULT_WINDOW).unwrap();
        let narrow = f.clone().with_confidence(0.90).unwrap();
        let (lo95, hi95) = confidence_band(&f, x);
        let (lo90, hi90) = confidence_band(&narrow, x);
        prop_assert!(lo95 <= lo90 && hi90 <= hi95);
    }

    #[test]
    fn parity_is_shift_equivariant(seed in 0u64..500, delta in -40i32..40) {
        let pts = noisy_line(0.015, -29.85, 0.01, 2010..=2021, seed);
        let shifted: Vec<(i32, f64)> = pts.iter().map(|&(x, y)| (x + delta, y)).collect();
        let window = (DEFAULT_WINDOW.0 + delta, DEFAULT_WINDOW.1 + delta);
        let a = parity_year(&ols_fit(&pts, DEFAULT_WINDOW).unwrap(), 0.5, 2400.0);
        let b = parity_year(&ols_fit(&shifted, window).unwrap(), 0.5, 2400.0 + delta as f64);
        for (x, y) in [(a.point_year, b.point_year), (a.lower_year, b.lower_year), (a.upper_year, b.upper_year)] {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((y - x - delta as f64).abs() < 1e-6, "{x} {y}"),
                (None, None) => {}
                other => prop_assert!(false, "mismatch {other:?}"),
            }
        }
        prop_assert_eq!(a.already_reached, b.already_reached);
    }

    #[test]
    fn band_interval_brackets_point(seed in 0u64..500, m in 0.002..0.03f64) {
        let pts = noisy_line(m, 0.4 - m * 2015.0, 0.01, 2010..=2021, seed);
        let f = ols_fit(&pts, DEFAULT_WINDOW).unwrap();
        prop_assume!(f.slope > 0.0);
        let p = parity_year(&f, 0.5, 1e6);
        if let (Some(l), Some(pt), Some(u)) = (p.lower_year, p.point_year, p.upper_year) {
            prop_assert!(l <= pt + 1e-9 && pt <= u + 1e-9, "{l} {pt} {u}");
        }
        // the edges really sit on the threshold at their crossings
        if let Some(l) = p.lower_year {
            if l > 2010.0 {
                prop_assert!((confidence_band(&f, l).1 - 0.5).abs() < 1e-6);
            }
        }
        if let Some(u) = p.upper_year {
            if u > 2010.0 {
                prop_assert!((confidence_band(&f, u).0 - 0.5).abs() < 1e-6);
            }
        }
    }
}
