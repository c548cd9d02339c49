//! Structural invariants checked over randomized inputs.

use mintt::{
    boost, deciles, estimate_effect, kernel_weight, lag_embed, locally_constant_fit,
    partially_locally_linear_fit, product_kernel_weight, rule_of_thumb_bandwidths, Bandwidths,
    BoostConfig, Query, TimeSeries, Transform,
};
use proptest::prelude::*;

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deciles_permutation_invariant(mut values in finite_vec(1..50), shifts in prop::collection::vec(any::<usize>(), 0..8)) {
        let original = deciles(&values).unwrap();
        for (i, &s) in shifts.iter().enumerate() {
            let a = (i * 7 + 1) % values.len();
            let b = s % values.len();
            values.swap(a, b);
        }
        let permuted = deciles(&values).unwrap();
        prop_assert_eq!(original, permuted);
    }

    #[test]
    fn deciles_affine_equivariant(values in finite_vec(1..50), a in 0.01..10.0f64, b in -50.0..50.0f64) {
        let base = deciles(&values).unwrap();
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let transformed = deciles(&mapped).unwrap();
        for (orig, t) in base.iter().zip(&transformed) {
            prop_assert!((a * orig + b - t).abs() <= 1e-9 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn kernel_symmetry(u in -50.0..50.0f64, h in 0.01..20.0f64) {
        prop_assert_eq!(kernel_weight(u, h).unwrap(), kernel_weight(-u, h).unwrap());
    }

    #[test]
    fn kernel_scale_relation(u in -20.0..20.0f64, h in 0.1..10.0f64, a in 0.1..10.0f64) {
        let lhs = kernel_weight(a * u, a * h).unwrap();
        let rhs = kernel_weight(u, h).unwrap() / a;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn product_kernel_factorizes(
        u1 in finite_vec(1..6),
        u2 in finite_vec(1..6),
    ) {
        let h1: Vec<f64> = (0..u1.len()).map(|i| 0.5 + i as f64 * 0.3).collect();
        let h2: Vec<f64> = (0..u2.len()).map(|i| 1.5 + i as f64 * 0.2).collect();
        let joint_u: Vec<f64> = u1.iter().chain(&u2).copied().collect();
        let joint_h: Vec<f64> = h1.iter().chain(&h2).copied().collect();
        let joint = product_kernel_weight(&joint_u, &joint_h).unwrap();
        let split = product_kernel_weight(&u1, &h1).unwrap() * product_kernel_weight(&u2, &h2).unwrap();
        prop_assert!((joint - split).abs() <= 1e-12 * (1.0 + split.abs()));
    }

    #[test]
    fn embedding_shift_equivariance(
        values in finite_vec(12..40),
        c in -10.0..10.0f64,
        s in 1usize..3,
        p in 1usize..4,
    ) {
        prop_assume!(values.len() > s + p);
        let ts = TimeSeries::univariate(values.clone()).unwrap();
        let shifted = TimeSeries::univariate(values.iter().map(|v| v + c).collect()).unwrap();
        let q = Query::new(0, 0, s, vec![0.0]);
        let a = lag_embed(&ts, &q, p).unwrap();
        let b = lag_embed(&shifted, &q, p).unwrap();
        for k in 0..a.m() {
            prop_assert!((a.responses()[k] + c - b.responses()[k]).abs() <= 1e-9);
            prop_assert!((a.regressors()[k] + c - b.regressors()[k]).abs() <= 1e-9);
            for (x, y) in a.adjustment_row(k).iter().zip(b.adjustment_row(k)) {
                prop_assert!((x + c - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn plain_embedding_is_suffix_of_instantaneous(
        seed_vals in finite_vec(30..60),
        s in 1usize..3,
        p in 1usize..3,
    ) {
        // Two components derived from the driving values.
        let values: Vec<f64> = seed_vals
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| [v, v * 0.5 + i as f64 * 0.1])
            .collect();
        let ts = TimeSeries::new(values, vec!["a".into(), "b".into()]).unwrap();
        prop_assume!(ts.n() > s + p);
        let plain = lag_embed(&ts, &Query::new(0, 1, s, vec![0.0]), p).unwrap();
        let inst = lag_embed(
            &ts,
            &Query::new(0, 1, s, vec![0.0]).with_instantaneous(true),
            p,
        )
        .unwrap();
        prop_assert_eq!(inst.q(), plain.q() + ts.l() - 1);
        for k in 0..plain.m() {
            let tail = &inst.adjustment_row(k)[ts.l() - 1..];
            prop_assert_eq!(tail, plain.adjustment_row(k));
        }
    }

    #[test]
    fn pll_equals_lc_on_degenerate_regressors(
        targets in finite_vec(5..20),
        x in -5.0..5.0f64,
    ) {
        // A series whose regressor window is constant: all samples share
        // the regressor value x.
        let m = targets.len();
        let mut values = vec![0.0; m + 2];
        for v in values.iter_mut().take(m + 1).skip(1) {
            *v = x;
        }
        values[0] = 1.0;
        values[m + 1] = -1.0;
        let ts = TimeSeries::univariate(values).unwrap();
        let design = lag_embed(&ts, &Query::new(0, 0, 1, vec![0.0]), 1).unwrap();
        let bw = Bandwidths::new(1.0, vec![1.0]).unwrap();
        let point = [0.25];
        let lc = locally_constant_fit(&design, &targets, x, &point, &bw).unwrap();
        let pll = partially_locally_linear_fit(&design, &targets, x, &point, &bw).unwrap();
        prop_assert!((lc - pll).abs() <= 1e-9 * (1.0 + lc.abs()));
    }

    #[test]
    fn boosting_respects_b_max(
        values in finite_vec(25..60),
        b_max in 1usize..6,
        stopping in any::<bool>(),
    ) {
        prop_assume!(values.len() > 4);
        prop_assume!(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            > values.iter().cloned().fold(f64::INFINITY, f64::min));
        let ts = TimeSeries::univariate(values).unwrap();
        let query = Query::new(0, 0, 1, vec![0.0]);
        let design = lag_embed(&ts, &query, 2).unwrap();
        let bw = Bandwidths::new(1.0, vec![1.0, 1.0]).unwrap();
        let cfg = BoostConfig {
            b_max,
            stopping_enabled: stopping,
            ..BoostConfig::default()
        };
        let model = boost(design, bw, &cfg, &[0.0, 1.0]).unwrap();
        prop_assert!(model.iterations() >= 1);
        prop_assert!(model.iterations() <= b_max);
    }
}

/// Shift equivariance of the full pipeline: estimating on a shifted series
/// at shifted intervention values reproduces the original effects plus the
/// shift.
#[test]
fn estimator_shift_equivariance() {
    let model = mintt::SemModel::linear_ar(vec![0.4], 1.0).unwrap();
    let ts = mintt::simulate(&model, 400, 31, 100).unwrap();
    let c = 2.5;
    let shifted =
        TimeSeries::univariate(ts.column(0).unwrap().iter().map(|v| v + c).collect()).unwrap();

    let xs = vec![-0.8, 0.0, 0.8];
    let xs_shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
    let query = Query::new(0, 0, 1, xs.clone());
    let query_shifted = Query::new(0, 0, 1, xs_shifted);
    let bw = rule_of_thumb_bandwidths(&ts, &query, 2, 2.0).unwrap();
    // Fixed iteration count: the stopping rule's absolute criterion is
    // relative to the estimate's level and is not shift-invariant.
    let cfg = BoostConfig {
        stopping_enabled: false,
        ..BoostConfig::default()
    };

    let base = estimate_effect(&ts, &query, 2, &bw, &cfg).unwrap();
    let moved = estimate_effect(&shifted, &query_shifted, 2, &bw, &cfg).unwrap();
    for (a, b) in base.effects.iter().zip(&moved.effects) {
        assert!(
            (a + c - b).abs() <= 1e-8,
            "shift equivariance violated: {a} + {c} vs {b}"
        );
    }
}

/// The square transform at embedding time matches transforming the series
/// by hand before an identity-transform estimate.
#[test]
fn transform_applies_at_embedding_time() {
    let model = mintt::SemModel::linear_ar(vec![0.4], 1.0).unwrap();
    let ts = mintt::simulate(&model, 300, 33, 100).unwrap();
    let query = Query::new(0, 0, 1, vec![0.0, 0.5]).with_transform(Transform::Square);
    let design = lag_embed(&ts, &query, 2).unwrap();
    for (k, r) in design.responses().iter().enumerate() {
        let raw = ts.value(1 + 2 + k, 0);
        assert_eq!(*r, raw * raw);
    }
}
