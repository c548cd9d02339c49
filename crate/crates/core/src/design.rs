//! Lag embedding: turning a stationary series into regression samples of
//! (response, intervention regressor, adjustment set).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::Query;
use crate::series::TimeSeries;

/// Identifies which query and lag window a design was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DesignMeta {
    pub c1: usize,
    pub c2: usize,
    pub s: usize,
    pub p: usize,
    pub instantaneous: bool,
}

/// The `m = n - s - p` regression samples behind one causal query.
///
/// Sample `k` (0-based) pairs the transformed response `g(X_{c1, s+p+k})`
/// with the intervention regressor `X_{c2, p+k}` and an adjustment row
/// holding the `p` previous time steps of all components, component-major
/// within each lag and nearest lag first. With `instantaneous` set, the row
/// is prefixed by the contemporaneous values of all components other than
/// `c2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    responses: Vec<f64>,
    regressors: Vec<f64>,
    adjustment: Vec<f64>,
    m: usize,
    q: usize,
    meta: DesignMeta,
}

impl LaggedDesign {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of adjustment columns: `p*l`, plus `l - 1` when the
    /// instantaneous variables are included.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn regressors(&self) -> &[f64] {
        &self.regressors
    }

    #[inline]
    pub fn adjustment_row(&self, k: usize) -> &[f64] {
        &self.adjustment[k * self.q..(k + 1) * self.q]
    }

    pub fn meta(&self) -> DesignMeta {
        self.meta
    }
}

/// Builds the regression design for `query` with adjustment lag window `p`.
///
/// The response already carries the query transform `g`.
pub fn lag_embed(ts: &TimeSeries, query: &Query, p: usize) -> Result<LaggedDesign> {
    query.validate(ts)?;
    if p == 0 {
        return Err(Error::InvalidQuery(
            "adjustment lag p must be >= 1".to_string(),
        ));
    }
    let n = ts.n();
    let l = ts.l();
    let s = query.s;
    if n <= s + p {
        return Err(Error::SeriesTooShort { n, required: s + p });
    }
    let m = n - s - p;
    let q = p * l + if query.instantaneous { l - 1 } else { 0 };

    let mut responses = Vec::with_capacity(m);
    let mut regressors = Vec::with_capacity(m);
    let mut adjustment = Vec::with_capacity(m * q);
    for k in 0..m {
        responses.push(query.transform.apply(ts.value(s + p + k, query.c1)));
        regressors.push(ts.value(p + k, query.c2));
        if query.instantaneous {
            for c in 0..l {
                if c != query.c2 {
                    adjustment.push(ts.value(p + k, c));
                }
            }
        }
        for lag in 1..=p {
            for c in 0..l {
                adjustment.push(ts.value(p + k - lag, c));
            }
        }
    }

    Ok(LaggedDesign {
        responses,
        regressors,
        adjustment,
        m,
        q,
        meta: DesignMeta {
            c1: query.c1,
            c2: query.c2,
            s,
            p,
            instantaneous: query.instantaneous,
        },
    })
}
