//! Experiment configuration: a flat `key = value` document, one key per line.
//!
//! ```text
//! # Fig. 5 style setup
//! M = 100
//! K = 10
//! L = 1
//! model = rayleigh
//! sigma_f = 1
//! sigma_g = 2
//! c_values = 1e-2, 1e-3, 1e-4
//! policies = ccs, dgf, chernoff, sluggish
//! trials = 1000
//! master_seed = 7
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! repeated keys are errors.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ccs::{CcsError, CcsParams};
use crate::engine::DEFAULT_STEP_CAP;
use crate::model::{ModelError, ObservationModel};
use crate::policy::{PolicyKind, UnknownPolicy};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_S_RATIO: f64 = 5.0;
pub const DEFAULT_P_STICK: f64 = 0.9;

/// `s_ratio * max(c)` above this triggers a warning: the analysis assumes `s = O(c)`.
pub const SWITCH_COST_WARNING: f64 = 0.1;

const KNOWN_KEYS: &[&str] = &[
    "M",
    "K",
    "L",
    "model",
    "sigma_f",
    "sigma_g",
    "p_f",
    "p_g",
    "c_values",
    "s_ratio",
    "policies",
    "trials",
    "master_seed",
    "p_stick",
    "step_cap",
    "prior",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: &'static str, value: String },

    #[error("invalid system size: need 1 <= L <= K <= M and L < M (M={m}, K={k}, L={l})")]
    Dimensions { m: usize, k: usize, l: usize },

    #[error("c_values must be non-empty with every entry in (0, 1), got {0:?}")]
    CostValues(Vec<f64>),

    #[error("s_ratio must be finite and >= 0, got {0}")]
    SwitchRatio(f64),

    #[error("trials must be at least 1")]
    Trials,

    #[error("step_cap must be at least 1")]
    StepCap,

    #[error("p_stick must lie in [0, 1), got {0}")]
    Stickiness(f64),

    #[error("policies must list at least one policy")]
    NoPolicies,

    #[error(transparent)]
    Policy(#[from] UnknownPolicy),

    #[error("unknown model `{0}` (expected rayleigh or table)")]
    ModelName(String),

    #[error("model: {0}")]
    Model(#[from] ModelError),

    #[error("prior must have {expected} nonnegative entries summing to 1, got {got:?}")]
    Prior { expected: usize, got: Vec<f64> },

    #[error("prior leaves fewer than L = {0} cells with positive mass")]
    PriorSupport(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub model: ObservationModel,
    pub c_values: Vec<f64>,
    pub s_ratio: f64,
    pub policies: Vec<PolicyKind>,
    pub trials: usize,
    pub master_seed: u64,
    pub p_stick: f64,
    pub step_cap: u64,
    pub prior: Prior,
    /// Non-fatal findings, such as a switching cost large relative to `c`.
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Parameters for one value of `c`.
    pub fn params(&self, c: f64) -> Result<CcsParams, CcsError> {
        CcsParams::new(self.m, self.k, self.l, c, self.model.kl())
    }

    pub fn switch_cost(&self, c: f64) -> f64 {
        self.s_ratio * c
    }

    pub fn prior_weights(&self) -> Option<&[f64]> {
        match &self.prior {
            Prior::Uniform => None,
            Prior::Explicit(p) => Some(p),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Value {
        key,
        value: value.to_string(),
    })
}

fn parse_list(key: &'static str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: BTreeMap<&'static str, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            });
        };
        let key = key.trim();
        let Some(&known) = KNOWN_KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if entries.insert(known, value.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }

    let get = |key: &'static str| entries.get(key).map(String::as_str);
    let required = |key: &'static str| get(key).ok_or(ConfigError::Missing(key));

    let m: usize = parse_num("M", required("M")?)?;
    let k: usize = parse_num("K", required("K")?)?;
    let l: usize = match get("L") {
        Some(v) => parse_num("L", v)?,
        None => 1,
    };
    if !(l >= 1 && l <= k && k <= m && l < m) {
        return Err(ConfigError::Dimensions { m, k, l });
    }

    let model = match get("model")
        .unwrap_or("rayleigh")
        .to_ascii_lowercase()
        .as_str()
    {
        "rayleigh" => ObservationModel::rayleigh(
            parse_num("sigma_f", required("sigma_f")?)?,
            parse_num("sigma_g", required("sigma_g")?)?,
        )?,
        "table" => ObservationModel::table(
            parse_list("p_f", required("p_f")?)?,
            parse_list("p_g", required("p_g")?)?,
        )?,
        other => return Err(ConfigError::ModelName(other.to_string())),
    };

    let c_values = parse_list("c_values", required("c_values")?)?;
    if c_values.is_empty() || c_values.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(ConfigError::CostValues(c_values));
    }

    let s_ratio = match get("s_ratio") {
        Some(v) => parse_num("s_ratio", v)?,
        None => DEFAULT_S_RATIO,
    };
    if !(s_ratio.is_finite() && s_ratio >= 0.0) {
        return Err(ConfigError::SwitchRatio(s_ratio));
    }

    let policies = match get("policies") {
        Some(v) => v
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<PolicyKind>, _>>()?,
        None => PolicyKind::ALL.to_vec(),
    };
    if policies.is_empty() {
        return Err(ConfigError::NoPolicies);
    }

    let trials = match get("trials") {
        Some(v) => parse_num("trials", v)?,
        None => DEFAULT_TRIALS,
    };
    if trials == 0 {
        return Err(ConfigError::Trials);
    }
    let master_seed = match get("master_seed") {
        Some(v) => parse_num("master_seed", v)?,
        None => 0,
    };
    let p_stick = match get("p_stick") {
        Some(v) => parse_num("p_stick", v)?,
        None => DEFAULT_P_STICK,
    };
    if !(0.0..1.0).contains(&p_stick) {
        return Err(ConfigError::Stickiness(p_stick));
    }
    let step_cap = match get("step_cap") {
        Some(v) => parse_num("step_cap", v)?,
        None => DEFAULT_STEP_CAP,
    };
    if step_cap == 0 {
        return Err(ConfigError::StepCap);
    }

    let prior = match get("prior") {
        None => Prior::Uniform,
        Some(v) if v.eq_ignore_ascii_case("uniform") => Prior::Uniform,
        Some(v) => {
            let p = parse_list("prior", v)?;
            let sum: f64 = p.iter().sum();
            if p.len() != m || p.iter().any(|&x| x.is_nan() || x < 0.0) || (sum - 1.0).abs() > 1e-9
            {
                return Err(ConfigError::Prior {
                    expected: m,
                    got: p,
                });
            }
            if p.iter().filter(|&&x| x > 0.0).count() < l {
                return Err(ConfigError::PriorSupport(l));
            }
            Prior::Explicit(p)
        }
    };

    let mut warnings = Vec::new();
    let c_max = c_values.iter().copied().fold(0.0, f64::max);
    if s_ratio * c_max > SWITCH_COST_WARNING {
        warnings.push(format!(
            "switching cost s = {} is large relative to 1; the asymptotic analysis assumes s = O(c)",
            s_ratio * c_max
        ));
    }

    Ok(ExperimentConfig {
        m,
        k,
        l,
        model,
        c_values,
        s_ratio,
        policies,
        trials,
        master_seed,
        p_stick,
        step_cap,
        prior,
        warnings,
    })
}
