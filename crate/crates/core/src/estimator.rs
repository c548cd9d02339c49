//! Kernel fits, L2-boosting and marginal integration of the fitted
//! regression surface into one-dimensional effect curves.
//!
//! The estimation pipeline is: embed the series into regression samples,
//! fit a locally constant (or partially locally linear) surface with
//! deliberately large bandwidths, reduce its bias with L2-boosting of the
//! residuals, then average the boosted surface over the empirical
//! distribution of the adjustment set.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{lag_embed, LaggedDesign};
use crate::error::{Error, Result};
use crate::kernel::{gauss, product_diff_weight, Bandwidths};
use crate::query::{EffectCurve, Provenance, Query};
use crate::series::{deciles, TimeSeries};

/// Weighted-sum floor below which a kernel fit falls back to the
/// unweighted target mean. Gaussian weights cannot be exactly zero in
/// theory, but they underflow in practice.
const EPS_WEIGHT_PER_SAMPLE: f64 = 1e-300;

/// Relative determinant floor for the 2x2 normal equations of the
/// partially locally linear fit; below it a ridge term is added.
const SINGULARITY_TOL: f64 = 1e-12;

/// Ridge factor applied to the slope diagonal when near-singular,
/// relative to the total kernel weight.
const RIDGE_FACTOR: f64 = 1e-8;

/// Which estimator produces the initial surface. Boosting layers always
/// use the locally constant fit; the mode only changes the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMode {
    LocallyConstant,
    PartiallyLocallyLinear,
}

/// Boosting schedule and stopping-rule thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostConfig {
    /// Upper bound on the number of layers (initial fit included).
    pub b_max: usize,
    /// Stop when the increment's marginal magnitude falls below this
    /// fraction of the current estimate's marginal magnitude.
    pub stop_abs_frac: f64,
    /// Stop when the ratio of two consecutive increments falls below this.
    pub stop_ratio: f64,
    pub stopping_enabled: bool,
    pub fit_mode: FitMode,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            b_max: 10,
            stop_abs_frac: 0.005,
            stop_ratio: 0.75,
            stopping_enabled: true,
            fit_mode: FitMode::LocallyConstant,
        }
    }
}

impl BoostConfig {
    fn validate(&self) -> Result<()> {
        if self.b_max == 0 {
            return Err(Error::InvalidConfig("b_max must be >= 1".to_string()));
        }
        for (name, v) in [
            ("stop_abs_frac", self.stop_abs_frac),
            ("stop_ratio", self.stop_ratio),
        ] {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A boosted regression surface.
///
/// Layer 1 holds the raw responses (its fit is the initial surface); each
/// later layer holds the residuals of the model built from the layers
/// before it. Evaluation sums the per-layer fits.
#[derive(Debug, Clone)]
pub struct BoostedModel {
    design: LaggedDesign,
    bandwidths: Bandwidths,
    layers: Vec<Vec<f64>>,
    fit_mode: FitMode,
}

impl BoostedModel {
    /// Number of layers actually fitted (`<= b_max`).
    pub fn iterations(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn design(&self) -> &LaggedDesign {
        &self.design
    }

    pub fn bandwidths(&self) -> &Bandwidths {
        &self.bandwidths
    }

    pub fn fit_mode(&self) -> FitMode {
        self.fit_mode
    }

    /// Evaluates the boosted surface at one point, summing per-layer fits.
    pub fn evaluate(&self, x: f64, adjustment_point: &[f64]) -> Result<f64> {
        let mut total = match self.fit_mode {
            FitMode::LocallyConstant => locally_constant_fit(
                &self.design,
                &self.layers[0],
                x,
                adjustment_point,
                &self.bandwidths,
            )?,
            FitMode::PartiallyLocallyLinear => partially_locally_linear_fit(
                &self.design,
                &self.layers[0],
                x,
                adjustment_point,
                &self.bandwidths,
            )?,
        };
        for layer in &self.layers[1..] {
            total +=
                locally_constant_fit(&self.design, layer, x, adjustment_point, &self.bandwidths)?;
        }
        Ok(total)
    }

    /// Marginal integration of the boosted surface over the adjustment
    /// samples at intervention value `x`, via the cached weight matrix.
    pub fn marginal_effect(&self, x: f64) -> f64 {
        let cache = WeightCache::build(&self.design, &self.bandwidths);
        marginal_of_model(&cache, self, x)
    }
}

#[inline]
fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn check_fit_inputs(
    design: &LaggedDesign,
    targets: &[f64],
    adjustment_point: &[f64],
    bw: &Bandwidths,
) -> Result<()> {
    if targets.len() != design.m() {
        return Err(Error::DimensionMismatch {
            expected: design.m(),
            actual: targets.len(),
        });
    }
    if adjustment_point.len() != design.q() {
        return Err(Error::DimensionMismatch {
            expected: design.q(),
            actual: adjustment_point.len(),
        });
    }
    if bw.h2().len() != design.q() {
        return Err(Error::DimensionMismatch {
            expected: design.q(),
            actual: bw.h2().len(),
        });
    }
    Ok(())
}

/// Kernel-weighted mean of `targets` around `(x, adjustment_point)`.
///
/// Falls back to the unweighted target mean when the total kernel weight
/// underflows.
pub fn locally_constant_fit(
    design: &LaggedDesign,
    targets: &[f64],
    x: f64,
    adjustment_point: &[f64],
    bw: &Bandwidths,
) -> Result<f64> {
    check_fit_inputs(design, targets, adjustment_point, bw)?;
    let m = design.m();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..m {
        let w = gauss(design.regressors()[k] - x, bw.h1())
            * product_diff_weight(design.adjustment_row(k), adjustment_point, bw.h2());
        num += w * targets[k];
        den += w;
    }
    if den < EPS_WEIGHT_PER_SAMPLE * m as f64 {
        Ok(mean(targets))
    } else {
        Ok(num / den)
    }
}

/// Weighted least squares of `targets` on the centred intervention
/// coordinate, returning the intercept. Linear only in the intervention
/// coordinate; the adjustment set enters through the kernel weights.
///
/// Near-singular normal equations get a small ridge on the slope
/// diagonal; a rank-deficient system falls back to the locally constant
/// fit.
pub fn partially_locally_linear_fit(
    design: &LaggedDesign,
    targets: &[f64],
    x: f64,
    adjustment_point: &[f64],
    bw: &Bandwidths,
) -> Result<f64> {
    check_fit_inputs(design, targets, adjustment_point, bw)?;
    let m = design.m();
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut t0 = 0.0;
    let mut t1 = 0.0;
    for k in 0..m {
        let u = design.regressors()[k] - x;
        let w = gauss(u, bw.h1())
            * product_diff_weight(design.adjustment_row(k), adjustment_point, bw.h2());
        s0 += w;
        s1 += w * u;
        s2 += w * u * u;
        t0 += w * targets[k];
        t1 += w * u * targets[k];
    }
    if s0 < EPS_WEIGHT_PER_SAMPLE * m as f64 {
        return Ok(mean(targets));
    }
    Ok(pll_solve(s0, s1, s2, t0, t1))
}

/// Solves the 2x2 normal equations for (intercept, slope) and returns the
/// intercept, with ridge/fallback handling of degenerate geometry.
#[inline]
fn pll_solve(s0: f64, s1: f64, s2: f64, t0: f64, t1: f64) -> f64 {
    let det = s0 * s2 - s1 * s1;
    let scale = s0 * s2 + s1 * s1;
    if det > SINGULARITY_TOL * scale && det.is_finite() {
        return (t0 * s2 - s1 * t1) / det;
    }
    let s2r = s2 + RIDGE_FACTOR * s0;
    let det_r = s0 * s2r - s1 * s1;
    if det_r > 0.0 && det_r.is_finite() {
        (t0 * s2r - s1 * t1) / det_r
    } else {
        t0 / s0
    }
}

/// Precomputed kernel weights for one (design, bandwidths) pair.
///
/// The adjustment-set kernel between samples depends only on the sample
/// pair, so the m x m matrix is built once and reused across boosting
/// iterations and intervention values.
pub(crate) struct WeightCache<'a> {
    design: &'a LaggedDesign,
    bw: &'a Bandwidths,
    /// `L(adjustment_j - adjustment_k)`, row-major m x m (symmetric).
    lmat: Vec<f64>,
    /// Full design-point weights `K(r_k - r_j) * lmat[j,k]`.
    wdesign: Vec<f64>,
    wdesign_rowsum: Vec<f64>,
    eps: f64,
}

impl<'a> WeightCache<'a> {
    pub(crate) fn build(design: &'a LaggedDesign, bw: &'a Bandwidths) -> Self {
        let m = design.m();
        let h2 = bw.h2();
        let mut lmat = vec![0.0; m * m];
        for j in 0..m {
            let row_j = design.adjustment_row(j);
            for k in j..m {
                let w = product_diff_weight(row_j, design.adjustment_row(k), h2);
                lmat[j * m + k] = w;
                lmat[k * m + j] = w;
            }
        }
        let mut wdesign = vec![0.0; m * m];
        let mut wdesign_rowsum = vec![0.0; m];
        for j in 0..m {
            let rj = design.regressors()[j];
            let mut sum = 0.0;
            for k in 0..m {
                let w = gauss(design.regressors()[k] - rj, bw.h1()) * lmat[j * m + k];
                wdesign[j * m + k] = w;
                sum += w;
            }
            wdesign_rowsum[j] = sum;
        }
        Self {
            design,
            bw,
            lmat,
            wdesign,
            wdesign_rowsum,
            eps: EPS_WEIGHT_PER_SAMPLE * m as f64,
        }
    }

    fn m(&self) -> usize {
        self.design.m()
    }

    /// Locally constant fitted values of `targets` at all design points.
    fn nw_fit_design(&self, targets: &[f64]) -> Vec<f64> {
        let m = self.m();
        let tmean = mean(targets);
        (0..m)
            .map(|j| {
                let row = &self.wdesign[j * m..(j + 1) * m];
                let den = self.wdesign_rowsum[j];
                if den < self.eps {
                    tmean
                } else {
                    let num: f64 = row.iter().zip(targets).map(|(w, t)| w * t).sum();
                    num / den
                }
            })
            .collect()
    }

    /// Partially locally linear fitted values of `targets` at all design
    /// points (used only for the initial layer in that mode).
    fn pll_fit_design(&self, targets: &[f64]) -> Vec<f64> {
        let m = self.m();
        let tmean = mean(targets);
        let r = self.design.regressors();
        (0..m)
            .map(|j| {
                let row = &self.lmat[j * m..(j + 1) * m];
                let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for k in 0..m {
                    let u = r[k] - r[j];
                    let w = gauss(u, self.bw.h1()) * row[k];
                    s0 += w;
                    s1 += w * u;
                    s2 += w * u * u;
                    t0 += w * targets[k];
                    t1 += w * u * targets[k];
                }
                if s0 < self.eps {
                    tmean
                } else {
                    pll_solve(s0, s1, s2, t0, t1)
                }
            })
            .collect()
    }

    /// Marginal integration of the locally constant fit of `targets` at
    /// intervention value `x`: the fit is averaged over all adjustment
    /// rows of the design.
    fn marginal_nw(&self, targets: &[f64], x: f64) -> f64 {
        let m = self.m();
        let tmean = mean(targets);
        let kvec: Vec<f64> = self
            .design
            .regressors()
            .iter()
            .map(|&r| gauss(r - x, self.bw.h1()))
            .collect();
        let mut acc = 0.0;
        for j in 0..m {
            let row = &self.lmat[j * m..(j + 1) * m];
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..m {
                let w = kvec[k] * row[k];
                num += w * targets[k];
                den += w;
            }
            acc += if den < self.eps { tmean } else { num / den };
        }
        acc / m as f64
    }

    /// Marginal integration of the partially locally linear fit.
    fn marginal_pll(&self, targets: &[f64], x: f64) -> f64 {
        let m = self.m();
        let tmean = mean(targets);
        let r = self.design.regressors();
        let kvec: Vec<f64> = r.iter().map(|&v| gauss(v - x, self.bw.h1())).collect();
        let mut acc = 0.0;
        for j in 0..m {
            let row = &self.lmat[j * m..(j + 1) * m];
            let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for k in 0..m {
                let u = r[k] - x;
                let w = kvec[k] * row[k];
                s0 += w;
                s1 += w * u;
                s2 += w * u * u;
                t0 += w * targets[k];
                t1 += w * u * targets[k];
            }
            acc += if s0 < self.eps {
                tmean
            } else {
                pll_solve(s0, s1, s2, t0, t1)
            };
        }
        acc / m as f64
    }

    fn fit_design(&self, targets: &[f64], mode: FitMode) -> Vec<f64> {
        match mode {
            FitMode::LocallyConstant => self.nw_fit_design(targets),
            FitMode::PartiallyLocallyLinear => self.pll_fit_design(targets),
        }
    }

    fn marginal(&self, targets: &[f64], x: f64, mode: FitMode) -> f64 {
        match mode {
            FitMode::LocallyConstant => self.marginal_nw(targets, x),
            FitMode::PartiallyLocallyLinear => self.marginal_pll(targets, x),
        }
    }
}

/// Sum of the absolute marginal-integrated values of one stored layer's
/// fit over the evaluation points: the magnitude of that boosting
/// increment as seen by the stopping rule.
pub fn stopping_metric(model: &BoostedModel, b: usize, eval_points: &[f64]) -> Result<f64> {
    if b == 0 || b > model.iterations() {
        return Err(Error::InvalidConfig(format!(
            "layer index {b} out of range 1..={}",
            model.iterations()
        )));
    }
    if eval_points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cache = WeightCache::build(&model.design, &model.bandwidths);
    let mode = if b == 1 {
        model.fit_mode
    } else {
        FitMode::LocallyConstant
    };
    Ok(eval_points
        .iter()
        .map(|&x| cache.marginal(&model.layers[b - 1], x, mode).abs())
        .sum())
}

/// Runs the boosting loop on an embedded design.
///
/// `eval_points` drive the stopping rule (typically the nine deciles of
/// the intervention component).
pub fn boost(
    design: LaggedDesign,
    bw: Bandwidths,
    cfg: &BoostConfig,
    eval_points: &[f64],
) -> Result<BoostedModel> {
    cfg.validate()?;
    if eval_points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bw.h2().len() != design.q() {
        return Err(Error::DimensionMismatch {
            expected: design.q(),
            actual: bw.h2().len(),
        });
    }
    let cache = WeightCache::build(&design, &bw);
    let layers = boost_layers(&cache, cfg, eval_points);
    Ok(BoostedModel {
        design,
        bandwidths: bw,
        layers,
        fit_mode: cfg.fit_mode,
    })
}

fn boost_layers(cache: &WeightCache<'_>, cfg: &BoostConfig, eval_points: &[f64]) -> Vec<Vec<f64>> {
    let responses = cache.design.responses().to_vec();

    // Fitted values at the design points and marginal values at the
    // evaluation points for the current cumulative model.
    let mut fitted: Vec<f64> = cache.fit_design(&responses, cfg.fit_mode);
    let mut marginal: Vec<f64> = eval_points
        .par_iter()
        .map(|&x| cache.marginal(&responses, x, cfg.fit_mode))
        .collect();

    let mut layers = vec![responses.clone()];
    let mut prev_increment: Option<f64> = None;

    while layers.len() < cfg.b_max {
        let residuals: Vec<f64> = responses.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        // An exactly-zero residual vector is a fixed point; further layers
        // would change nothing.
        if residuals.iter().all(|&r| r == 0.0) {
            break;
        }
        let marginal_inc: Vec<f64> = eval_points
            .par_iter()
            .map(|&x| cache.marginal_nw(&residuals, x))
            .collect();
        let increment: f64 = marginal_inc.iter().map(|v| v.abs()).sum();

        if cfg.stopping_enabled {
            let current: f64 = marginal.iter().map(|v| v.abs()).sum();
            let halt = increment == 0.0
                || increment < cfg.stop_abs_frac * current
                || prev_increment.is_some_and(|p| increment / p < cfg.stop_ratio);
            if halt {
                break;
            }
        }

        let fitted_inc = cache.nw_fit_design(&residuals);
        for (f, inc) in fitted.iter_mut().zip(&fitted_inc) {
            *f += inc;
        }
        for (mgl, inc) in marginal.iter_mut().zip(&marginal_inc) {
            *mgl += inc;
        }
        prev_increment = Some(increment);
        layers.push(residuals);
    }
    layers
}

/// Marginal effect of a boosted model at `x` through the weight cache.
///
/// Locally constant fits are linear in their targets with weights shared
/// across layers, so all locally constant layers are summed before a
/// single pass.
fn marginal_of_model(cache: &WeightCache<'_>, model: &BoostedModel, x: f64) -> f64 {
    match model.fit_mode {
        FitMode::LocallyConstant => {
            let summed = sum_layers(&model.layers);
            cache.marginal_nw(&summed, x)
        }
        FitMode::PartiallyLocallyLinear => {
            let init = cache.marginal_pll(&model.layers[0], x);
            if model.layers.len() == 1 {
                init
            } else {
                let summed = sum_layers(&model.layers[1..]);
                init + cache.marginal_nw(&summed, x)
            }
        }
    }
}

fn sum_layers(layers: &[Vec<f64>]) -> Vec<f64> {
    let mut total = layers[0].clone();
    for layer in &layers[1..] {
        for (t, v) in total.iter_mut().zip(layer) {
            *t += v;
        }
    }
    total
}

/// Full estimation pipeline for one query: embed, boost, and marginally
/// integrate into an effect curve over the query's intervention values.
pub fn estimate_effect(
    ts: &TimeSeries,
    query: &Query,
    p: usize,
    bw: &Bandwidths,
    cfg: &BoostConfig,
) -> Result<EffectCurve> {
    cfg.validate()?;
    let design = lag_embed(ts, query, p)?;
    if bw.h2().len() != design.q() {
        return Err(Error::DimensionMismatch {
            expected: design.q(),
            actual: bw.h2().len(),
        });
    }
    let eval_points = deciles(&ts.column(query.c2)?)?;
    let cache = WeightCache::build(&design, bw);
    let layers = boost_layers(&cache, cfg, &eval_points);
    let model = BoostedModel {
        design: design.clone(),
        bandwidths: bw.clone(),
        layers,
        fit_mode: cfg.fit_mode,
    };
    let effects: Vec<f64> = query
        .intervention_values
        .par_iter()
        .map(|&x| marginal_of_model(&cache, &model, x))
        .collect();
    Ok(EffectCurve::new(
        query.intervention_values.clone(),
        effects,
        query.clone(),
        Provenance::MintT,
    ))
}
