//! The comparison baseline: fit an additive autoregressive model by
//! backfitting, then estimate interventional effects by simulating from
//! the fitted model.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::gauss;
use crate::query::{EffectCurve, Provenance, Query};
use crate::sem::{interventional_mc, ComponentStep, EquationFn, Noise, SemModel};
use crate::series::TimeSeries;

/// Number of grid points each fitted smooth function is stored on.
const GRID_POINTS: usize = 201;

/// Backfitting sweep limit and relative convergence tolerance.
const MAX_SWEEPS: usize = 50;
const SWEEP_TOL: f64 = 1e-4;

/// Bandwidth factor for the univariate local-linear smoother, relative to
/// the predictor component's empirical standard deviation.
const SMOOTHER_BANDWIDTH_FACTOR: f64 = 1.0;

/// A univariate smooth function stored on a uniform grid, evaluated by
/// linear interpolation with constant extrapolation beyond the range.
#[derive(Debug, Clone)]
pub struct SmoothFn {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl SmoothFn {
    fn zero(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            values: vec![0.0; GRID_POINTS],
        }
    }

    /// Builds a smooth from explicit grid values over `[lo, hi]`.
    pub fn from_values(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidModel(
                "smooth function needs grid values and an ordered range".to_string(),
            ));
        }
        Ok(Self { lo, hi, values })
    }

    /// Samples a function onto the standard grid over `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..GRID_POINTS)
            .map(|i| f(lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64))
            .collect();
        Self::from_values(lo, hi, values)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        if x <= self.lo || self.hi <= self.lo || last == 0 {
            return self.values[0];
        }
        if x >= self.hi {
            return self.values[last];
        }
        let pos = (x - self.lo) / (self.hi - self.lo) * last as f64;
        let idx = pos.floor() as usize;
        let frac = pos - idx as f64;
        self.values[idx] + frac * (self.values[idx + 1] - self.values[idx])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// How noise is drawn when simulating from a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Resample the fitted residual pool with replacement (default).
    ResampleResiduals,
    /// Gaussian with the residual variance, for a fully parametric
    /// error assumption.
    GaussianResiduals,
}

/// A fitted additive autoregression: per target component an intercept,
/// one centred smooth function per (component, lag) predictor, and the
/// centred residual pool.
#[derive(Debug, Clone)]
pub struct AdditiveModel {
    names: Vec<String>,
    l: usize,
    p: usize,
    intercepts: Vec<f64>,
    /// terms[c][c_prime * p + (lag - 1)]
    terms: Vec<Vec<SmoothFn>>,
    residuals: Vec<Vec<f64>>,
    pub converged: bool,
    pub sweeps_run: usize,
}

impl AdditiveModel {
    /// Assembles a model from explicit parts, e.g. to drive the
    /// interventional simulation with externally known functions.
    /// `terms[c]` holds `l * p` smooths ordered component-major, nearest
    /// lag first.
    pub fn from_parts(
        names: Vec<String>,
        p: usize,
        intercepts: Vec<f64>,
        terms: Vec<Vec<SmoothFn>>,
        residuals: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let l = names.len();
        if l == 0 || p == 0 {
            return Err(Error::InvalidModel(
                "need components and p >= 1".to_string(),
            ));
        }
        if intercepts.len() != l || terms.len() != l || residuals.len() != l {
            return Err(Error::InvalidModel(format!(
                "expected {l} intercepts, term sets and residual pools"
            )));
        }
        if let Some(bad) = terms.iter().position(|t| t.len() != l * p) {
            return Err(Error::InvalidModel(format!(
                "component {bad} has {} terms, expected {}",
                terms[bad].len(),
                l * p
            )));
        }
        if residuals.iter().any(|r| r.is_empty()) {
            return Err(Error::InvalidModel("empty residual pool".to_string()));
        }
        Ok(Self {
            names,
            l,
            p,
            intercepts,
            terms,
            residuals,
            converged: true,
            sweeps_run: 0,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn intercept(&self, c: usize) -> f64 {
        self.intercepts[c]
    }

    /// The fitted smooth for target `c` against predictor component
    /// `c_prime` at `lag`.
    pub fn term(&self, c: usize, c_prime: usize, lag: usize) -> &SmoothFn {
        &self.terms[c][c_prime * self.p + (lag - 1)]
    }

    pub fn residuals(&self, c: usize) -> &[f64] {
        &self.residuals[c]
    }

    /// Exposes the fitted system as a structural model so interventional
    /// simulation runs through the same engine as the ground-truth oracle.
    pub fn to_sem(&self, noise_mode: NoiseMode) -> SemModel {
        let l = self.l;
        let p = self.p;
        let mut equations: Vec<EquationFn> = Vec::with_capacity(l);
        let mut noise = Vec::with_capacity(l);
        for c in 0..l {
            let intercept = self.intercepts[c];
            let terms: Arc<Vec<SmoothFn>> = Arc::new(self.terms[c].clone());
            equations.push(Arc::new(move |ctx, eps| {
                let mut v = intercept + eps;
                for c_prime in 0..l {
                    for lag in 1..=p {
                        v += terms[c_prime * p + (lag - 1)].eval(ctx.x_lag(c_prime, lag));
                    }
                }
                ComponentStep::value(v)
            }));
            noise.push(match noise_mode {
                NoiseMode::ResampleResiduals => Noise::Resample {
                    pool: Arc::new(self.residuals[c].clone()),
                },
                NoiseMode::GaussianResiduals => {
                    let r = &self.residuals[c];
                    let var = r.iter().map(|v| v * v).sum::<f64>() / (r.len() - 1).max(1) as f64;
                    Noise::Gaussian { sd: var.sqrt() }
                }
            });
        }
        SemModel::new(self.names.clone(), p, equations, noise)
            .expect("fitted model dimensions are consistent")
    }
}

/// Pseudo-observation count of the zero prior each local fit is shrunk
/// against, and the predictor-quantile trim beyond which the fit continues
/// as a constant. Local-linear fits extrapolate their slope where the data
/// thins out; both guards keep simulated trajectories from picking up
/// tail artifacts.
const SHRINKAGE_PSEUDO_POINTS: f64 = 50.0;
const SUPPORT_TRIM_QUANTILE: f64 = 0.025;

/// Local-linear kernel smoother of `targets` on `predictors`, evaluated at
/// `grid` points. Each fitted value is scaled by
/// `neff / (neff + SHRINKAGE_PSEUDO_POINTS)` with
/// `neff = (sum w)^2 / sum w^2` the effective local sample size; grid
/// points beyond the trim quantiles of the predictor sample copy the
/// nearest supported value.
fn local_linear_smooth(
    predictors: &[f64],
    targets: &[f64],
    bandwidth: f64,
    grid: &[f64],
) -> Vec<f64> {
    let tmean = targets.iter().sum::<f64>() / targets.len() as f64;
    let (q_lo, q_hi) = {
        let mut sorted = predictors.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite predictors"));
        let h = (sorted.len() - 1) as f64 * SUPPORT_TRIM_QUANTILE;
        let lo = sorted[h.round() as usize];
        let hi = sorted[sorted.len() - 1 - h.round() as usize];
        (lo, hi)
    };
    let fits: Vec<f64> = grid
        .iter()
        .map(|&g| {
            let (mut s0, mut s1, mut s2, mut t0, mut t1, mut sq) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for (&u, &y) in predictors.iter().zip(targets) {
                let d = u - g;
                let w = gauss(d, bandwidth);
                s0 += w;
                s1 += w * d;
                s2 += w * d * d;
                t0 += w * y;
                t1 += w * d * y;
                sq += w * w;
            }
            if s0 <= 0.0 || sq <= 0.0 {
                return tmean;
            }
            let det = s0 * s2 - s1 * s1;
            let alpha = if det > 1e-12 * (s0 * s2 + s1 * s1) {
                (t0 * s2 - s1 * t1) / det
            } else {
                t0 / s0
            };
            let neff = s0 * s0 / sq;
            alpha * neff / (neff + SHRINKAGE_PSEUDO_POINTS)
        })
        .collect();
    // Constant continuation beyond the supported predictor range.
    let first = grid.iter().position(|&g| g >= q_lo).unwrap_or(0);
    let last = grid
        .iter()
        .rposition(|&g| g <= q_hi)
        .unwrap_or(grid.len() - 1);
    (0..grid.len())
        .map(|i| fits[i.clamp(first, last)])
        .collect()
}

type TargetFit = (f64, Vec<SmoothFn>, Vec<f64>, bool, usize);

struct TermFit {
    smooth: SmoothFn,
    /// Fitted values at the backfitting samples (already centred).
    fitted: Vec<f64>,
}

/// Fits one target component by backfitting; returns (intercept, terms,
/// residuals, converged, sweeps).
fn backfit_target(
    ts: &TimeSeries,
    target: usize,
    p: usize,
    predictor_columns: &[Vec<f64>],
    bandwidths: &[f64],
) -> (f64, Vec<SmoothFn>, Vec<f64>, bool, usize) {
    let n = ts.n();
    let l = ts.l();
    let m = n - p;
    let y: Vec<f64> = (0..m).map(|i| ts.value(p + i, target)).collect();
    let mut intercept = y.iter().sum::<f64>() / m as f64;
    let y_sd = {
        let var = y
            .iter()
            .map(|v| (v - intercept) * (v - intercept))
            .sum::<f64>()
            / (m - 1).max(1) as f64;
        var.sqrt().max(1e-12)
    };

    // Lagged predictor samples per term, aligned with y: term (c', lag)
    // uses rows p + i - lag.
    let n_terms = l * p;
    let samples: Vec<Vec<f64>> = (0..n_terms)
        .map(|term| {
            let c_prime = term / p;
            let lag = term % p + 1;
            (0..m)
                .map(|i| predictor_columns[c_prime][p + i - lag])
                .collect()
        })
        .collect();

    let grids: Vec<(f64, f64, Vec<f64>)> = (0..n_terms)
        .map(|term| {
            let s = &samples[term];
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let grid: Vec<f64> = (0..GRID_POINTS)
                .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
                .collect();
            (lo, hi, grid)
        })
        .collect();

    let mut fits: Vec<TermFit> = (0..n_terms)
        .map(|term| TermFit {
            smooth: SmoothFn::zero(grids[term].0, grids[term].1),
            fitted: vec![0.0; m],
        })
        .collect();

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for term in 0..n_terms {
            // Partial residuals against all other terms.
            let mut partial: Vec<f64> = y.iter().map(|v| v - intercept).collect();
            for (other, fit) in fits.iter().enumerate() {
                if other != term {
                    for (pr, f) in partial.iter_mut().zip(&fit.fitted) {
                        *pr -= f;
                    }
                }
            }
            let (lo, hi, ref grid) = grids[term];
            let c_prime = term / p;
            let mut grid_values =
                local_linear_smooth(&samples[term], &partial, bandwidths[c_prime], grid);
            let mut smooth = SmoothFn {
                lo,
                hi,
                values: std::mem::take(&mut grid_values),
            };
            let mut fitted: Vec<f64> = samples[term].iter().map(|&u| smooth.eval(u)).collect();
            // Centre over the fitting sample for identifiability.
            let centre = fitted.iter().sum::<f64>() / m as f64;
            for v in smooth.values.iter_mut() {
                *v -= centre;
            }
            for v in fitted.iter_mut() {
                *v -= centre;
            }
            let change = fits[term]
                .fitted
                .iter()
                .zip(&fitted)
                .fold(0.0f64, |a, (old, new)| a.max((old - new).abs()));
            max_change = max_change.max(change / y_sd);
            fits[term] = TermFit { smooth, fitted };
        }
        if max_change < SWEEP_TOL {
            converged = true;
            break;
        }
    }

    // Residual pool, centred exactly; the mean moves into the intercept.
    let mut residuals: Vec<f64> = (0..m)
        .map(|i| {
            let mut r = y[i] - intercept;
            for fit in &fits {
                r -= fit.fitted[i];
            }
            r
        })
        .collect();
    let rmean = residuals.iter().sum::<f64>() / m as f64;
    intercept += rmean;
    for r in residuals.iter_mut() {
        *r -= rmean;
    }

    (
        intercept,
        fits.into_iter().map(|f| f.smooth).collect(),
        residuals,
        converged,
        sweeps,
    )
}

/// Fits an additive autoregression of every component on the `p` previous
/// values of all components.
///
/// Requires a sample long enough for the number of smooth terms
/// (`n > p + 10 * l * p`). Non-convergence after the sweep limit is not an
/// error; the model reports it through its `converged` flag.
pub fn fit_additive_model(ts: &TimeSeries, p: usize) -> Result<AdditiveModel> {
    if p == 0 {
        return Err(Error::InvalidConfig("p must be >= 1".to_string()));
    }
    let n = ts.n();
    let l = ts.l();
    let required = p + 10 * l * p;
    if n <= required {
        return Err(Error::SeriesTooShort { n, required });
    }
    let predictor_columns: Vec<Vec<f64>> = (0..l).map(|c| ts.column(c)).collect::<Result<_>>()?;
    let bandwidths: Vec<f64> = (0..l)
        .map(|c| {
            let sd = ts.empirical_sd(c)?;
            if sd <= 0.0 {
                return Err(Error::DegenerateSeries { component: c });
            }
            Ok(SMOOTHER_BANDWIDTH_FACTOR * sd)
        })
        .collect::<Result<_>>()?;

    let per_target: Vec<TargetFit> = (0..l)
        .into_par_iter()
        .map(|c| backfit_target(ts, c, p, &predictor_columns, &bandwidths))
        .collect();

    let mut intercepts = Vec::with_capacity(l);
    let mut terms = Vec::with_capacity(l);
    let mut residuals = Vec::with_capacity(l);
    let mut converged = true;
    let mut sweeps_run = 0;
    for (intercept, t, r, conv, sweeps) in per_target {
        intercepts.push(intercept);
        terms.push(t);
        residuals.push(r);
        converged &= conv;
        sweeps_run = sweeps_run.max(sweeps);
    }

    Ok(AdditiveModel {
        names: ts.names().to_vec(),
        l,
        p,
        intercepts,
        terms,
        residuals,
        converged,
        sweeps_run,
    })
}

/// Interventional effect curve from a fitted additive model: simulate
/// `replications` trajectories of length `horizon` from zero initial
/// values, intervene on `c2` at `horizon - s`, and average the transformed
/// response at the final step.
pub fn reference_effect(
    model: &AdditiveModel,
    query: &Query,
    replications: usize,
    horizon: usize,
    seed: u64,
    noise_mode: NoiseMode,
) -> Result<EffectCurve> {
    let sem = model.to_sem(noise_mode);
    let (mut curve, _se) = interventional_mc(
        &sem,
        query,
        replications,
        horizon,
        seed,
        Provenance::Reference,
    )?;
    curve.provenance = Provenance::Reference;
    Ok(curve)
}
