//! Tests of estimation quality against independently computed ground
//! truth: analytic impulse-response recursions, Yule-Walker moments, and
//! brute-force reimplementations.

#![allow(clippy::needless_range_loop)]

use mintt::{
    builtin_model, deciles, estimate_effect, rule_of_thumb_bandwidths, simulate,
    true_effect_detailed, BoostConfig, Query, SemModel, TimeSeries, Transform,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{ar_impulse_response, solve_linear_system};

#[test]
fn deciles_of_standard_normal_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let draws: Vec<f64> = (0..1000)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let d = deciles(&draws).unwrap();

    // Sorting-based quantile oracle on the same draws.
    let mut sorted = draws.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (i, &v) in d.iter().enumerate() {
        let h = (sorted.len() - 1) as f64 * (i + 1) as f64 / 10.0;
        let lo = h.floor() as usize;
        let expect = sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]);
        assert!((v - expect).abs() <= 1e-12);
    }
    assert!((d[0] + 1.2816).abs() <= 0.15, "d1 = {}", d[0]);
    assert!((d[8] - 1.2816).abs() <= 0.15, "d9 = {}", d[8]);
}

#[test]
fn empirical_sd_of_standard_normal_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws: Vec<f64> = (0..1000)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let ts = TimeSeries::univariate(draws.clone()).unwrap();
    let sd = ts.empirical_sd(0).unwrap();

    // Direct two-pass formula.
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let expect = (draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (draws.len() - 1) as f64)
        .sqrt();
    assert!((sd - expect).abs() <= 1e-12);
    assert!((sd - 1.0).abs() <= 0.1, "sd = {sd}");
}

/// Yule-Walker autocovariances of the builtin linear autoregression: solve
/// the stationary moment equations directly and compare the simulated
/// lag-2 autocovariance.
#[test]
fn simulated_autocovariance_matches_yule_walker() {
    let p = 10;
    let mut phi = vec![0.0; p + 1];
    phi[2] = 0.4;
    phi[6] = -0.6;
    phi[10] = 0.3;

    // Unknowns gamma_0..gamma_p. Equations:
    //   gamma_0 = sum_j phi_j gamma_j + sigma^2
    //   gamma_k = sum_j phi_j gamma_{|k-j|}, k = 1..p
    let dim = p + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for k in 0..=p {
        a[k][k] += 1.0;
        for j in 1..=p {
            if phi[j] != 0.0 {
                a[k][(k as isize - j as isize).unsigned_abs()] -= phi[j];
            }
        }
        b[k] = if k == 0 { 1.0 } else { 0.0 };
    }
    let gamma = solve_linear_system(a, b);

    let model = builtin_model(1).unwrap();
    let n = 100_000;
    let ts = simulate(&model, n, 2024, 500).unwrap();
    let col = ts.column(0).unwrap();
    let mean = col.iter().sum::<f64>() / n as f64;
    let lag = 2;
    let emp: f64 = (0..n - lag)
        .map(|t| (col[t] - mean) * (col[t + lag] - mean))
        .sum::<f64>()
        / n as f64;
    assert!(
        (emp - gamma[lag]).abs() <= 0.05,
        "empirical {emp} vs yule-walker {}",
        gamma[lag]
    );
}

/// For a linear model with mean-zero noise the interventional expectation
/// is linear in the intervention value.
#[test]
fn linear_model_oracle_is_linear_in_x() {
    let model = builtin_model(1).unwrap();
    let ts = simulate(&model, 4000, 5, 500).unwrap();
    let d = deciles(&ts.column(0).unwrap()).unwrap();
    // Lag 2 carries a nonzero impulse response for this model.
    let query = Query::new(0, 0, 2, d.to_vec());
    let (curve, _) = true_effect_detailed(&model, &query, 100_000, 62, 99).unwrap();

    // Least-squares line through (x, effect); R^2 must be ~1.
    let k = curve.xs.len() as f64;
    let mx = curve.xs.iter().sum::<f64>() / k;
    let my = curve.effects.iter().sum::<f64>() / k;
    let sxy: f64 = curve
        .xs
        .iter()
        .zip(&curve.effects)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = curve.xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = curve.effects.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 >= 0.999, "R^2 = {r2}");
}

/// The squared-response effect of the pure volatility model is symmetric
/// in the intervention value.
#[test]
fn arch_squared_effect_is_symmetric() {
    let model = builtin_model(3).unwrap();
    let xs = vec![-1.5, -0.7, -0.2, 0.2, 0.7, 1.5];
    let query = Query::new(0, 0, 2, xs.clone()).with_transform(Transform::Square);
    let (curve, se) = true_effect_detailed(&model, &query, 40_000, 60, 7).unwrap();
    for i in 0..3 {
        let a = curve.effects[i];
        let b = curve.effects[5 - i];
        let tol = 3.0 * (se[i] * se[i] + se[5 - i] * se[5 - i]).sqrt();
        assert!((a - b).abs() <= tol, "asymmetry {a} vs {b}, tol {tol}");
    }
}

/// Volatility models have zero causal effect on the untransformed
/// response; the oracle must agree within Monte-Carlo error.
#[test]
fn garch_identity_effect_is_zero() {
    let model = builtin_model(4).unwrap();
    let query = Query::new(0, 0, 2, vec![-1.0, 0.5, 2.0]);
    let (curve, se) = true_effect_detailed(&model, &query, 30_000, 60, 11).unwrap();
    for (e, s) in curve.effects.iter().zip(&se) {
        assert!(e.abs() <= 3.0 * s, "effect {e} exceeds 3 SE {s}");
    }
}

/// White-noise input: the estimated effect curve is flat at zero.
#[test]
fn estimate_on_white_noise_is_flat() {
    let model = SemModel::linear_ar(vec![0.0], 1.0).unwrap();
    let ts = simulate(&model, 1000, 41, 500).unwrap();
    let d = deciles(&ts.column(0).unwrap()).unwrap();
    let query = Query::new(0, 0, 2, d.to_vec());
    let bw = rule_of_thumb_bandwidths(&ts, &query, 3, 2.0).unwrap();
    let curve = estimate_effect(&ts, &query, 3, &bw, &BoostConfig::default()).unwrap();
    for e in &curve.effects {
        assert!(e.abs() <= 0.15, "effect {e}");
    }
}

/// AR(1) with known coefficient: the estimate tracks the impulse-response
/// oracle across the first three lags.
#[test]
fn estimate_tracks_ar1_recursion() {
    let phi = vec![0.5];
    let model = SemModel::linear_ar(phi.clone(), 1.0).unwrap();
    let ts = simulate(&model, 1000, 17, 500).unwrap();
    let d = deciles(&ts.column(0).unwrap()).unwrap();
    let psi = ar_impulse_response(&phi, 3);

    let mut sq_sum = 0.0;
    let mut count = 0;
    for s in 1..=3usize {
        let query = Query::new(0, 0, s, d.to_vec());
        let bw = rule_of_thumb_bandwidths(&ts, &query, 10, 2.0).unwrap();
        let curve = estimate_effect(&ts, &query, 10, &bw, &BoostConfig::default()).unwrap();
        for (x, e) in curve.xs.iter().zip(&curve.effects) {
            let truth = psi[s] * x;
            sq_sum += (e - truth) * (e - truth);
            count += 1;
        }
    }
    let rmse = (sq_sum / count as f64).sqrt();
    assert!(rmse <= 0.1, "rmse = {rmse}");
}

/// Boosting reduces the oversmoothing bias: with the rule-of-thumb
/// bandwidth the boosted fit beats the unboosted one against the analytic
/// oracle on the linear benchmark model.
#[test]
fn boosting_improves_oversmoothed_fit() {
    let model = builtin_model(1).unwrap();
    let phi = {
        let mut v = vec![0.0; 10];
        v[1] = 0.4;
        v[5] = -0.6;
        v[9] = 0.3;
        v
    };
    let ts = simulate(&model, 1000, 3, 500).unwrap();
    let d = deciles(&ts.column(0).unwrap()).unwrap();
    let psi = ar_impulse_response(&phi, 6);

    let mse_for = |b_max: usize| {
        let mut total = 0.0;
        for s in [1usize, 2, 4, 6] {
            let query = Query::new(0, 0, s, d.to_vec());
            let bw = rule_of_thumb_bandwidths(&ts, &query, 10, 2.0).unwrap();
            let cfg = BoostConfig {
                b_max,
                stopping_enabled: false,
                ..BoostConfig::default()
            };
            let curve = estimate_effect(&ts, &query, 10, &bw, &cfg).unwrap();
            total += curve
                .xs
                .iter()
                .zip(&curve.effects)
                .map(|(x, e)| (e - psi[s] * x) * (e - psi[s] * x))
                .sum::<f64>();
        }
        total
    };

    let unboosted = mse_for(1);
    let boosted = mse_for(10);
    assert!(
        boosted < unboosted,
        "boosted {boosted} not below unboosted {unboosted}"
    );
}

/// The estimated squared-response curve for the volatility model stays
/// close to the Monte-Carlo oracle.
#[test]
fn arch_squared_estimate_matches_oracle() {
    let model = builtin_model(3).unwrap();
    let ts = simulate(&model, 1000, 29, 500).unwrap();
    let d = deciles(&ts.column(0).unwrap()).unwrap();
    let query = Query::new(0, 0, 1, d.to_vec()).with_transform(Transform::Square);
    let bw = rule_of_thumb_bandwidths(&ts, &query, 4, 2.0).unwrap();
    let est = estimate_effect(&ts, &query, 4, &bw, &BoostConfig::default()).unwrap();
    let (truth, _) = true_effect_detailed(&model, &query, 10_000, 55, 31).unwrap();
    let sse: f64 = est
        .effects
        .iter()
        .zip(&truth.effects)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    assert!(sse <= 0.02, "sum of squared errors {sse}");
}

/// A two-component system with exactly one strong lagged link: the
/// causal-strength ranking must put that link first for almost every seed.
#[test]
fn single_edge_system_ranks_its_edge_first() {
    use mintt::{causal_strength, ComponentStep, EquationFn, Noise};
    use std::sync::Arc;

    let s_max = 4;
    let p = 3;
    // Squared responses carry a large constant level, so the graph recipe
    // runs a fixed number of boosting iterations instead of the stopping
    // rule, with a moderate bandwidth.
    let cfg = BoostConfig {
        stopping_enabled: false,
        ..BoostConfig::default()
    };
    let mut hits = 0;
    for seed in 0..10u64 {
        let eq1: EquationFn = Arc::new(|_ctx, eps| ComponentStep::value(eps));
        let eq2: EquationFn =
            Arc::new(|ctx, eps| ComponentStep::value(1.2 * ctx.x_lag(0, 3) + eps));
        let model = SemModel::new(
            vec!["a".into(), "b".into()],
            3,
            vec![eq1, eq2],
            vec![Noise::Gaussian { sd: 1.0 }, Noise::Gaussian { sd: 1.0 }],
        )
        .unwrap();
        let ts = simulate(&model, 2000, 1000 + seed, 300).unwrap();

        let mut curves = Vec::new();
        for c1 in 0..2 {
            for c2 in 0..2 {
                let d = deciles(&ts.column(c2).unwrap()).unwrap();
                for s in 1..=s_max {
                    let query = Query::new(c1, c2, s, d.to_vec()).with_transform(Transform::Square);
                    let bw = rule_of_thumb_bandwidths(&ts, &query, p, 1.5).unwrap();
                    curves.push(estimate_effect(&ts, &query, p, &bw, &cfg).unwrap());
                }
            }
        }
        let cs = causal_strength(&curves, &ts, s_max).unwrap();
        let best = cs
            .iter_scored()
            .max_by(|a, b| a.3.partial_cmp(&b.3).unwrap())
            .unwrap();
        if (best.0, best.1, best.2) == (1, 0, 3) {
            hits += 1;
        }
    }
    assert!(
        hits >= 9,
        "strongest edge identified in only {hits}/10 seeds"
    );
}
