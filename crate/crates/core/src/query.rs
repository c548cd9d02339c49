//! Causal queries, response transforms and estimated effect curves.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Transform `g` applied to the response component before estimation, so
/// queries target `E[g(X_{c1,t}) | do(X_{c2,t-s} = x)]`.
#[derive(Clone)]
pub enum Transform {
    Identity,
    Square,
    Abs,
    /// Indicator `1{v <= b}`; estimates an interventional CDF value.
    IndicatorLe(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Transform {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Square => v * v,
            Transform::Abs => v.abs(),
            Transform::IndicatorLe(b) => {
                if v <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            Transform::Custom(f) => f(v),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Transform::Identity => "identity".to_string(),
            Transform::Square => "square".to_string(),
            Transform::Abs => "abs".to_string(),
            Transform::IndicatorLe(b) => format!("indicator_le({b})"),
            Transform::Custom(_) => "custom".to_string(),
        }
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl PartialEq for Transform {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Transform::Identity, Transform::Identity) => true,
            (Transform::Square, Transform::Square) => true,
            (Transform::Abs, Transform::Abs) => true,
            (Transform::IndicatorLe(a), Transform::IndicatorLe(b)) => a == b,
            _ => false,
        }
    }
}

impl Serialize for Transform {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

/// One causal question: the effect of `do(X_{c2,t-s} = x)` on
/// `g(X_{c1,t})`, evaluated at each intervention value.
///
/// Component indices are 0-based column indices into the [`TimeSeries`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    /// Response component.
    pub c1: usize,
    /// Intervention component.
    pub c2: usize,
    /// Positive time lag between intervention and response.
    pub s: usize,
    /// Intervention values at which the effect curve is evaluated.
    pub intervention_values: Vec<f64>,
    pub transform: Transform,
    /// Use the enlarged adjustment set that also conditions on the
    /// contemporaneous values of all other components.
    pub instantaneous: bool,
}

impl Query {
    pub fn new(c1: usize, c2: usize, s: usize, intervention_values: Vec<f64>) -> Self {
        Self {
            c1,
            c2,
            s,
            intervention_values,
            transform: Transform::Identity,
            instantaneous: false,
        }
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_instantaneous(mut self, instantaneous: bool) -> Self {
        self.instantaneous = instantaneous;
        self
    }

    /// Checks the query against a series it is supposed to run on.
    pub fn validate(&self, ts: &TimeSeries) -> Result<()> {
        let l = ts.l();
        if self.c1 >= l {
            return Err(Error::ComponentOutOfRange {
                index: self.c1,
                count: l,
            });
        }
        if self.c2 >= l {
            return Err(Error::ComponentOutOfRange {
                index: self.c2,
                count: l,
            });
        }
        if self.s == 0 {
            return Err(Error::InvalidQuery("lag s must be >= 1".to_string()));
        }
        if self.intervention_values.is_empty() {
            return Err(Error::InvalidQuery(
                "intervention values must be nonempty".to_string(),
            ));
        }
        if let Some(v) = self.intervention_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "non-finite intervention value {v}"
            )));
        }
        Ok(())
    }
}

/// Where an effect curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    #[serde(rename = "mint-t")]
    MintT,
    #[serde(rename = "reference")]
    Reference,
    #[serde(rename = "true-oracle")]
    TrueOracle,
}

/// Estimated (or simulated) effect values paired with the intervention
/// values they belong to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectCurve {
    pub xs: Vec<f64>,
    pub effects: Vec<f64>,
    pub query: Query,
    pub provenance: Provenance,
}

impl EffectCurve {
    pub fn new(xs: Vec<f64>, effects: Vec<f64>, query: Query, provenance: Provenance) -> Self {
        debug_assert_eq!(xs.len(), effects.len());
        Self {
            xs,
            effects,
            query,
            provenance,
        }
    }
}
