//! Estimation of total causal effects `E[g(X_{c1,t}) | do(X_{c2,t-s} = x)]`
//! from observational stationary time series.
//!
//! The estimator regresses the transformed response on the intervention
//! variable and a lagged adjustment set with a product Gaussian kernel,
//! reduces the bias of the deliberately oversmoothed fit by L2-boosting,
//! and marginally integrates the boosted surface over the empirical
//! adjustment distribution. Alongside the estimator the crate ships a
//! structural-equation simulator with a Monte-Carlo interventional oracle,
//! an additive-autoregression reference method, MSE benchmarking, and
//! causal-strength graph construction.
//!
//! ```
//! use mintt::{
//!     estimate_effect, rule_of_thumb_bandwidths, simulate, BoostConfig, Query, SemModel,
//! };
//!
//! let model = SemModel::linear_ar(vec![0.5], 1.0).unwrap();
//! let ts = simulate(&model, 500, 7, 500).unwrap();
//! let query = Query::new(0, 0, 1, vec![-1.0, 0.0, 1.0]);
//! let bw = rule_of_thumb_bandwidths(&ts, &query, 3, 2.0).unwrap();
//! let curve = estimate_effect(&ts, &query, 3, &bw, &BoostConfig::default()).unwrap();
//! assert_eq!(curve.effects.len(), 3);
//! ```

// Kernel-weight accumulation walks several parallel buffers by index;
// iterator chains obscure those loops.
#![allow(clippy::needless_range_loop)]

mod additive;
mod design;
mod error;
mod estimator;
mod eval;
mod kernel;
mod query;
mod sem;
mod series;

pub use additive::{fit_additive_model, reference_effect, AdditiveModel, NoiseMode, SmoothFn};
pub use design::{lag_embed, DesignMeta, LaggedDesign};
pub use error::{Error, Result};
pub use estimator::{
    boost, estimate_effect, locally_constant_fit, partially_locally_linear_fit, stopping_metric,
    BoostConfig, BoostedModel, FitMode,
};
pub use eval::{
    build_graph, causal_strength, mse, run_benchmark, BenchmarkConfig, BenchmarkReport,
    BenchmarkSeeds, CausalGraph, CsScores, GraphEdge, InterventionRule, Method,
};
pub use kernel::{
    dimension_factor, kernel_weight, product_kernel_weight, rule_of_thumb_bandwidths, Bandwidths,
};
pub use query::{EffectCurve, Provenance, Query, Transform};
pub use sem::{
    builtin_model, default_adjustment_lag, interventional_mc, simulate, true_effect,
    true_effect_detailed, ComponentStep, EquationFn, Noise, SemModel, StepCtx, DEFAULT_BURN_IN,
    ORACLE_HORIZON_SLACK,
};
pub use series::{deciles, TimeSeries};
