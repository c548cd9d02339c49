//! Multivariate time-series container and basic empirical statistics.

use serde::Serialize;

use crate::error::{Error, Result};

/// A sample of a stationary multivariate time series: an `n x l` matrix of
/// observations with rows in ascending time order and one named column per
/// component.
///
/// Every entry is finite and component names are unique; both are enforced
/// at construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    names: Vec<String>,
    n: usize,
    l: usize,
}

impl TimeSeries {
    /// Builds a series from a row-major `n x l` value buffer.
    pub fn new(values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let l = names.len();
        if l == 0 {
            return Err(Error::EmptyInput);
        }
        if values.is_empty() || !values.len().is_multiple_of(l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: values.len(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / l,
                    col: idx % l,
                });
            }
        }
        let n = values.len() / l;
        Ok(Self {
            values,
            names,
            n,
            l,
        })
    }

    /// Builds a univariate series with the default component name `x`.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(values, vec!["x".to_string()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Resolves a component name to its column index.
    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Value at time row `t` (0-based) and component `c`.
    #[inline]
    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.values[t * self.l + c]
    }

    /// One time step as a slice of all `l` components.
    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.l..(t + 1) * self.l]
    }

    /// Copies out one component column.
    pub fn column(&self, c: usize) -> Result<Vec<f64>> {
        if c >= self.l {
            return Err(Error::ComponentOutOfRange {
                index: c,
                count: self.l,
            });
        }
        Ok((0..self.n).map(|t| self.value(t, c)).collect())
    }

    /// Sample standard deviation (denominator `n - 1`) of one component.
    ///
    /// Returns 0.0 for a constant column; downstream bandwidth selection
    /// rejects that as a degenerate series.
    pub fn empirical_sd(&self, component: usize) -> Result<f64> {
        if component >= self.l {
            return Err(Error::ComponentOutOfRange {
                index: component,
                count: self.l,
            });
        }
        if self.n < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                actual: self.n,
            });
        }
        let mean = (0..self.n).map(|t| self.value(t, component)).sum::<f64>() / self.n as f64;
        let ss = (0..self.n)
            .map(|t| {
                let d = self.value(t, component) - mean;
                d * d
            })
            .sum::<f64>();
        Ok((ss / (self.n - 1) as f64).sqrt())
    }
}

/// Empirical quantiles at probabilities 0.1, 0.2, ..., 0.9, computed with
/// linear interpolation between order statistics (`h = (m - 1) p + 1`).
pub fn deciles(values: &[f64]) -> Result<[f64; 9]> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: idx, col: 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let m = sorted.len();
    let mut out = [0.0; 9];
    for (i, slot) in out.iter_mut().enumerate() {
        let p = (i + 1) as f64 / 10.0;
        let h = (m - 1) as f64 * p;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        *slot = if lo + 1 < m {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        } else {
            sorted[m - 1]
        };
    }
    Ok(out)
}
