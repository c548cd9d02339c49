//! Configuration resolution: defaults, optional JSON config file, and
//! command-line flags, with flags taking precedence over file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mintt::{BoostConfig, FitMode, InterventionRule, Method, NoiseMode, Transform};
use serde::{Deserialize, Serialize};

/// Flat key-value config file; every field optional. CLI flags override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<String>,
    pub model: Option<u32>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub burn_in: Option<usize>,
    pub logdiff: Option<bool>,
    pub c1: Option<String>,
    pub c2: Option<String>,
    pub s: Option<usize>,
    pub p: Option<usize>,
    pub h_mult: Option<f64>,
    pub boost: Option<usize>,
    pub stop_frac: Option<f64>,
    pub stop_ratio: Option<f64>,
    pub stopping: Option<bool>,
    pub fit_mode: Option<String>,
    pub transform: Option<String>,
    pub interventions: Option<String>,
    pub instantaneous: Option<bool>,
    pub s_max: Option<usize>,
    pub method: Option<String>,
    pub oracle_reps: Option<usize>,
    pub reference_reps: Option<usize>,
    pub noise_mode: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("cannot parse config file {}", p.display()))
            }
        }
    }
}

/// Fully resolved run configuration, serialized next to every command's
/// outputs for reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<u32>,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub logdiff: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub p: usize,
    pub h_mult: f64,
    pub boost: usize,
    pub stop_frac: f64,
    pub stop_ratio: f64,
    pub stopping: bool,
    pub fit_mode: String,
    pub transform: String,
    pub interventions: String,
    pub instantaneous: bool,
    pub s_max: usize,
    pub method: String,
    pub oracle_reps: usize,
    pub reference_reps: usize,
    pub noise_mode: String,
    pub workers: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn boost_config(&self) -> Result<BoostConfig> {
        Ok(BoostConfig {
            b_max: self.boost,
            stop_abs_frac: self.stop_frac,
            stop_ratio: self.stop_ratio,
            stopping_enabled: self.stopping,
            fit_mode: parse_fit_mode(&self.fit_mode)?,
        })
    }

    pub fn transform_value(&self) -> Result<Transform> {
        parse_transform(&self.transform)
    }

    pub fn intervention_rule(&self) -> Result<InterventionRule> {
        parse_interventions(&self.interventions)
    }

    pub fn method_value(&self) -> Result<Method> {
        match self.method.as_str() {
            "mint-t" => Ok(Method::MintT),
            "reference" => Ok(Method::Reference),
            other => bail!("unknown method `{other}` (expected mint-t or reference)"),
        }
    }

    pub fn noise_mode_value(&self) -> Result<NoiseMode> {
        match self.noise_mode.as_str() {
            "resample" => Ok(NoiseMode::ResampleResiduals),
            "gaussian" => Ok(NoiseMode::GaussianResiduals),
            other => bail!("unknown noise mode `{other}` (expected resample or gaussian)"),
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// Stable fingerprint of the resolved configuration (FNV-1a over the
    /// canonical JSON).
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_json().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

pub fn parse_fit_mode(s: &str) -> Result<FitMode> {
    match s {
        "locally-constant" => Ok(FitMode::LocallyConstant),
        "partially-locally-linear" => Ok(FitMode::PartiallyLocallyLinear),
        other => bail!(
            "unknown fit mode `{other}` (expected locally-constant or partially-locally-linear)"
        ),
    }
}

pub fn parse_transform(s: &str) -> Result<Transform> {
    if let Some(b) = s.strip_prefix("le:") {
        let b: f64 = b
            .parse()
            .with_context(|| format!("bad indicator bound in transform `{s}`"))?;
        return Ok(Transform::IndicatorLe(b));
    }
    match s {
        "identity" => Ok(Transform::Identity),
        "square" => Ok(Transform::Square),
        "abs" => Ok(Transform::Abs),
        other => bail!("unknown transform `{other}` (expected identity, square, abs or le:<b>)"),
    }
}

pub fn parse_interventions(s: &str) -> Result<InterventionRule> {
    if s == "deciles" {
        return Ok(InterventionRule::Deciles);
    }
    if let Some(k) = s.strip_suffix("xdeciles") {
        let k: f64 = k
            .parse()
            .with_context(|| format!("bad scale in intervention rule `{s}`"))?;
        if !k.is_finite() || k <= 0.0 {
            bail!("intervention-rule scale must be positive, got {k}");
        }
        return Ok(InterventionRule::ScaledDeciles(k));
    }
    let values: Vec<f64> = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad intervention value `{v}`"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("empty intervention list");
    }
    Ok(InterventionRule::Explicit(values))
}
