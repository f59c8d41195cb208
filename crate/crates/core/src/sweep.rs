//! Sweeps over policies and observation costs, emitting one row per
//! `(policy, c)` cell in configuration order.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ccs::CcsError;
use crate::config::ExperimentConfig;
use crate::engine::{
    estimate_risk, lower_bound, relative_loss, EpisodeError, EpisodeResult, RiskSummary, TrialSetup,
};
use crate::policy::PolicyKind;

/// Column order of the CSV output.
pub const CSV_HEADER: &str = "policy,M,K,L,c,s,trials,error_rate,mean_tau,se_tau,mean_switch,se_switch,bayes_risk,bayes_risk_no_switch,rate_I,lower_bound,relative_loss,relative_loss_no_switch,aborted";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid parameters: {0}")]
    Params(#[from] CcsError),

    #[error("episode failed: {0}")]
    Episode(EpisodeError),

    #[error("writing results: {0}")]
    Io(#[from] io::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub policy: PolicyKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub c: f64,
    pub s: f64,
    pub trials: usize,
    pub error_rate: f64,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub mean_switch: f64,
    pub se_switch: f64,
    pub bayes_risk: f64,
    pub bayes_risk_no_switch: f64,
    #[serde(rename = "rate_I")]
    pub rate_i: f64,
    pub lower_bound: f64,
    pub relative_loss: f64,
    pub relative_loss_no_switch: f64,
    pub aborted: usize,
    /// Full estimate with switching cost; `None` when every trial aborted.
    #[serde(skip)]
    pub risk: Option<RiskSummary>,
    #[serde(skip)]
    pub risk_no_switch: Option<RiskSummary>,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.m,
            self.k,
            self.l,
            self.c,
            self.s,
            self.trials,
            self.error_rate,
            self.mean_tau,
            self.se_tau,
            self.mean_switch,
            self.se_switch,
            self.bayes_risk,
            self.bayes_risk_no_switch,
            self.rate_i,
            self.lower_bound,
            self.relative_loss,
            self.relative_loss_no_switch,
            self.aborted
        )
    }
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, a pure function of its coordinates in the sweep.
pub fn trial_seed(master_seed: u64, policy: PolicyKind, c_index: usize, trial: usize) -> u64 {
    [policy.id(), c_index as u64, trial as u64]
        .into_iter()
        .fold(mix(master_seed), |acc, x| mix(acc ^ mix(x)))
}

/// Episode outcomes of one sweep cell, in trial order.
pub fn run_cell(
    config: &ExperimentConfig,
    policy: PolicyKind,
    c_index: usize,
) -> Result<Vec<Result<EpisodeResult, EpisodeError>>, SweepError> {
    let c = config.c_values[c_index];
    let params = config.params(c)?;
    let setup = TrialSetup {
        policy,
        model: &config.model,
        params: &params,
        p_stick: config.p_stick,
        prior: config.prior_weights(),
        step_cap: config.step_cap,
    };
    Ok((0..config.trials)
        .into_par_iter()
        .map(|t| setup.run(trial_seed(config.master_seed, policy, c_index, t)))
        .collect())
}

/// Aggregates one cell's outcomes into an output row. Step-cap aborts are
/// counted and excluded; any other episode failure is an error.
pub fn summarize_cell(
    config: &ExperimentConfig,
    policy: PolicyKind,
    c: f64,
    outcomes: Vec<Result<EpisodeResult, EpisodeError>>,
) -> Result<SweepRow, SweepError> {
    let mut done = Vec::with_capacity(outcomes.len());
    let mut aborted = 0;
    for outcome in outcomes {
        match outcome {
            Ok(r) => done.push(r),
            Err(EpisodeError::StepCap(_)) => aborted += 1,
            Err(e) => return Err(SweepError::Episode(e)),
        }
    }
    let params = config.params(c)?;
    let rate = params.rate();
    let r_lb = lower_bound(c, rate);
    let s = config.switch_cost(c);
    let (risk, risk_no_switch) = if done.is_empty() {
        (None, None)
    } else {
        (
            Some(estimate_risk(&done, c, s)),
            Some(estimate_risk(&done, c, 0.0)),
        )
    };
    let pick = |r: &Option<RiskSummary>, f: fn(&RiskSummary) -> f64| r.as_ref().map_or(f64::NAN, f);
    let bayes_risk = pick(&risk, |r| r.bayes_risk);
    let bayes_risk_no_switch = pick(&risk_no_switch, |r| r.bayes_risk);
    Ok(SweepRow {
        policy,
        m: config.m,
        k: config.k,
        l: config.l,
        c,
        s,
        trials: config.trials,
        error_rate: pick(&risk, |r| r.error_rate),
        mean_tau: pick(&risk, |r| r.mean_tau),
        se_tau: pick(&risk, |r| r.se_tau),
        mean_switch: pick(&risk, |r| r.mean_switch),
        se_switch: pick(&risk, |r| r.se_switch),
        bayes_risk,
        bayes_risk_no_switch,
        rate_i: rate,
        lower_bound: r_lb,
        relative_loss: relative_loss(bayes_risk, r_lb),
        relative_loss_no_switch: relative_loss(bayes_risk_no_switch, r_lb),
        aborted,
        risk,
        risk_no_switch,
    })
}

/// Runs every `(policy, c)` cell and streams rows to `sink` as they finish.
/// Rows already written stay flushed if a later write fails.
pub fn run_sweep(
    config: &ExperimentConfig,
    format: OutputFormat,
    jobs: Option<usize>,
    sink: &mut dyn Write,
) -> Result<Vec<SweepRow>, SweepError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;

    let mut rows = Vec::new();
    match format {
        OutputFormat::Csv => writeln!(sink, "{CSV_HEADER}")?,
        OutputFormat::Json => write!(sink, "[")?,
    }
    sink.flush()?;
    for &policy in &config.policies {
        for (c_index, &c) in config.c_values.iter().enumerate() {
            let outcomes = pool.install(|| run_cell(config, policy, c_index))?;
            let row = summarize_cell(config, policy, c, outcomes)?;
            match format {
                OutputFormat::Csv => writeln!(sink, "{}", row.to_csv())?,
                OutputFormat::Json => {
                    let sep = if rows.is_empty() { "" } else { "," };
                    let json = serde_json::to_string(&row).map_err(io::Error::from)?;
                    write!(sink, "{sep}\n  {json}")?;
                }
            }
            sink.flush()?;
            rows.push(row);
        }
    }
    if format == OutputFormat::Json {
        writeln!(sink, "\n]")?;
        sink.flush()?;
    }
    Ok(rows)
}
