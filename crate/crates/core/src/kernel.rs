//! Gaussian kernel weights and the rule-of-thumb bandwidth heuristic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::Query;
use crate::series::TimeSeries;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian kernel weight without bandwidth validation; callers guarantee
/// `h > 0`.
#[inline]
pub(crate) fn gauss(u: f64, h: f64) -> f64 {
    let z = u / h;
    INV_SQRT_2PI / h * (-0.5 * z * z).exp()
}

/// `K_h(u) = h^{-1} phi(u / h)` with `phi` the standard normal density.
pub fn kernel_weight(u: f64, h: f64) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    Ok(gauss(u, h))
}

/// Product Gaussian kernel over an adjustment-set difference vector, one
/// bandwidth per coordinate.
pub fn product_kernel_weight(u: &[f64], h: &[f64]) -> Result<f64> {
    if u.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            actual: u.len(),
        });
    }
    for &hj in h {
        if !hj.is_finite() || hj <= 0.0 {
            return Err(Error::NonPositiveBandwidth(hj));
        }
    }
    Ok(product_gauss(u, h))
}

/// Unit-stride product kernel on pre-validated bandwidths. The per-factor
/// exponents are summed before a single `exp`, which keeps the m x m weight
/// matrices cheap to build.
#[inline]
pub(crate) fn product_gauss(u: &[f64], h: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), h.len());
    let mut expo = 0.0;
    let mut scale = 1.0;
    for (uj, hj) in u.iter().zip(h) {
        let z = uj / hj;
        expo += z * z;
        scale *= INV_SQRT_2PI / hj;
    }
    scale * (-0.5 * expo).exp()
}

/// Product kernel of the coordinatewise difference `row - point`.
#[inline]
pub(crate) fn product_diff_weight(row: &[f64], point: &[f64], h: &[f64]) -> f64 {
    debug_assert_eq!(row.len(), point.len());
    let mut expo = 0.0;
    let mut scale = 1.0;
    for ((a, b), hj) in row.iter().zip(point).zip(h) {
        let z = (a - b) / hj;
        expo += z * z;
        scale *= INV_SQRT_2PI / hj;
    }
    scale * (-0.5 * expo).exp()
}

/// Kernel bandwidths for one query: `h1` for the intervention coordinate
/// and one `h2` entry per adjustment column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bandwidths {
    h1: f64,
    h2: Vec<f64>,
}

impl Bandwidths {
    pub fn new(h1: f64, h2: Vec<f64>) -> Result<Self> {
        if !h1.is_finite() || h1 <= 0.0 {
            return Err(Error::NonPositiveBandwidth(h1));
        }
        if let Some(&bad) = h2.iter().find(|&&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::NonPositiveBandwidth(bad));
        }
        Ok(Self { h1, h2 })
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> &[f64] {
        &self.h2
    }
}

/// Dimension correction for multivariate adjustment sets:
/// `n^(1/(4+p) - 1/(4+p*l))`, equal to 1 in the univariate case.
pub fn dimension_factor(n: usize, l: usize, p: usize) -> f64 {
    let n = n as f64;
    n.powf(1.0 / (4.0 + p as f64) - 1.0 / (4.0 + (p * l) as f64))
}

/// Rule-of-thumb bandwidths: `multiplier * sigma_hat` per coordinate,
/// scaled by [`dimension_factor`] and by the empirical standard deviation
/// of the component each adjustment column belongs to. The recommended
/// default multiplier is 2, paired with boosting to correct the resulting
/// bias.
pub fn rule_of_thumb_bandwidths(
    ts: &TimeSeries,
    query: &Query,
    p: usize,
    multiplier: f64,
) -> Result<Bandwidths> {
    query.validate(ts)?;
    if p == 0 {
        return Err(Error::InvalidQuery(
            "adjustment lag p must be >= 1".to_string(),
        ));
    }
    if !multiplier.is_finite() || multiplier <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "bandwidth multiplier must be positive, got {multiplier}"
        )));
    }
    let l = ts.l();
    let mut sd = Vec::with_capacity(l);
    for c in 0..l {
        let s = ts.empirical_sd(c)?;
        if s <= 0.0 {
            return Err(Error::DegenerateSeries { component: c });
        }
        sd.push(s);
    }
    let factor = dimension_factor(ts.n(), l, p) * multiplier;

    let h1 = factor * sd[query.c2];
    // One entry per adjustment column, in the exact layout of `lag_embed`.
    let mut h2 = Vec::new();
    if query.instantaneous {
        for c in 0..l {
            if c != query.c2 {
                h2.push(factor * sd[c]);
            }
        }
    }
    for _lag in 1..=p {
        for c in 0..l {
            h2.push(factor * sd[c]);
        }
    }
    Bandwidths::new(h1, h2)
}
