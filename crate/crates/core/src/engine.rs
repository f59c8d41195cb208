//! Runs sequential-search episodes and turns their outcomes into Bayes-risk
//! estimates.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::belief::BeliefState;
use crate::ccs::{declare, should_stop, CcsParams};
use crate::model::{CellState, ObservationModel};
use crate::policy::{stream_rng, PolicyKind, SelectionPolicy};

/// Default hard limit on episode length.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

const STREAM_TRUTH: u64 = 0;
const STREAM_OBSERVATIONS: u64 = 1;
// Sluggish uses STREAM_POLICY + 1 for its coin.
const STREAM_POLICY: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("episode exceeded the step cap of {0} steps")]
    StepCap(u64),

    #[error("cell {cell} probed by two machines at step {step}")]
    DoubleProbe { step: u64, cell: usize },

    #[error("policy returned an invalid play at step {step}: {reason}")]
    InvalidAction { step: u64, reason: String },
}

/// The set of abnormal cells, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    targets: Vec<usize>,
}

impl GroundTruth {
    pub fn new(mut targets: Vec<usize>) -> Self {
        targets.sort_unstable();
        targets.dedup();
        Self { targets }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn state(&self, cell: usize) -> CellState {
        if self.targets.binary_search(&cell).is_ok() {
            CellState::Abnormal
        } else {
            CellState::Normal
        }
    }

    /// Uniform over all `L`-subsets of `M` cells.
    pub fn sample_uniform<R: Rng + ?Sized>(m: usize, l: usize, rng: &mut R) -> Self {
        Self::new(index::sample(rng, m, l).into_vec())
    }

    /// Draws `L` cells one at a time from `prior`, renormalised over the
    /// cells not yet chosen. With `L = 1` this is exactly the prior.
    pub fn sample_prior<R: Rng + ?Sized>(prior: &[f64], l: usize, rng: &mut R) -> Self {
        let mut weights = prior.to_vec();
        let mut targets = Vec::with_capacity(l);
        for _ in 0..l {
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = None;
            for (cell, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(cell);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            let cell = pick.expect("prior has positive mass left");
            weights[cell] = 0.0;
            targets.push(cell);
        }
        Self::new(targets)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpisodeResult {
    /// Stopping time in steps.
    pub tau: u64,
    pub tau_switch: u64,
    pub declared: Vec<usize>,
    pub correct: bool,
    /// Machine-steps left unused (`K - |play|` summed over steps).
    pub idle_slots: u64,
    pub explore_steps: u64,
}

/// Number of cells in `curr` that were not in `prev`. The first play is free.
pub fn count_switches(prev: Option<&[usize]>, curr: &[usize]) -> u64 {
    match prev {
        None => 0,
        Some(prev) => curr.iter().filter(|c| !prev.contains(c)).count() as u64,
    }
}

/// Runs one episode to its stopping time.
pub fn run_episode(
    policy: &mut dyn SelectionPolicy,
    model: &ObservationModel,
    params: &CcsParams,
    truth: &GroundTruth,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeResult, EpisodeError> {
    run_episode_observed(policy, model, params, truth, step_cap, rng, |_, _| {})
}

/// [`run_episode`], calling `on_play(step, play)` for every play.
pub fn run_episode_observed(
    policy: &mut dyn SelectionPolicy,
    model: &ObservationModel,
    params: &CcsParams,
    truth: &GroundTruth,
    step_cap: u64,
    rng: &mut ChaCha8Rng,
    mut on_play: impl FnMut(u64, &[usize]),
) -> Result<EpisodeResult, EpisodeError> {
    let (m, k, l, c) = (
        params.cells(),
        params.plays(),
        params.targets(),
        params.cost(),
    );
    let mut belief = BeliefState::new(m);
    let mut previous: Option<Vec<usize>> = None;
    let mut tau_switch = 0;
    let mut idle_slots = 0;
    let mut explore_steps = 0;
    let mut obs = Vec::with_capacity(k);
    let mut seen = vec![false; m];

    while !should_stop(&belief, l, c) {
        let step = belief.time();
        if step >= step_cap {
            return Err(EpisodeError::StepCap(step_cap));
        }
        let play = policy.select(&belief);
        if play.len() > k {
            return Err(EpisodeError::InvalidAction {
                step,
                reason: format!("{} cells with K = {k}", play.len()),
            });
        }
        for &cell in &play {
            if cell >= m {
                return Err(EpisodeError::InvalidAction {
                    step,
                    reason: format!("cell {cell} out of range"),
                });
            }
            if std::mem::replace(&mut seen[cell], true) {
                return Err(EpisodeError::DoubleProbe { step, cell });
            }
        }
        play.iter().for_each(|&cell| seen[cell] = false);
        on_play(step, &play);

        if policy.exploring() {
            explore_steps += 1;
        }
        tau_switch += count_switches(previous.as_deref(), &play);
        idle_slots += (k - play.len()) as u64;
        obs.clear();
        obs.extend(
            play.iter()
                .map(|&cell| (cell, model.sample_llr(truth.state(cell), rng))),
        );
        belief.apply_observations(&obs);
        previous = Some(play);
    }

    let mut declared = declare(&belief, l);
    declared.sort_unstable();
    let correct = declared == truth.targets();
    Ok(EpisodeResult {
        tau: belief.time(),
        tau_switch,
        declared,
        correct,
        idle_slots,
        explore_steps,
    })
}

/// Everything needed to run independent trials of one policy.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub policy: PolicyKind,
    pub model: &'a ObservationModel,
    pub params: &'a CcsParams,
    pub p_stick: f64,
    /// `None` for the uniform prior over `L`-subsets.
    pub prior: Option<&'a [f64]>,
    pub step_cap: u64,
}

impl TrialSetup<'_> {
    /// One trial; `seed` determines the truth, the observations and any
    /// randomized choices of the policy.
    pub fn run(&self, seed: u64) -> Result<EpisodeResult, EpisodeError> {
        let (m, l) = (self.params.cells(), self.params.targets());
        let mut truth_rng = stream_rng(seed, STREAM_TRUTH);
        let truth = match self.prior {
            Some(prior) => GroundTruth::sample_prior(prior, l, &mut truth_rng),
            None => GroundTruth::sample_uniform(m, l, &mut truth_rng),
        };
        let mut policy =
            self.policy
                .instantiate(self.params, self.p_stick, stream_rng(seed, STREAM_POLICY));
        let mut rng = stream_rng(seed, STREAM_OBSERVATIONS);
        run_episode(
            policy.as_mut(),
            self.model,
            self.params,
            &truth,
            self.step_cap,
            &mut rng,
        )
    }
}

/// Plug-in Bayes-risk estimate with normal-approximation standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskSummary {
    pub n_trials: usize,
    pub error_rate: f64,
    pub se_error: f64,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub mean_switch: f64,
    pub se_switch: f64,
    pub bayes_risk: f64,
    pub se_bayes_risk: f64,
    /// Set when there are too few trials for the standard errors to mean
    /// anything (a single trial reports them as zero).
    pub low_confidence: bool,
}

impl RiskSummary {
    /// `(low, high)` at `z` standard errors for the relative loss against `r_lb`.
    pub fn relative_loss_interval(&self, r_lb: f64, z: f64) -> (f64, f64) {
        let half = z * self.se_bayes_risk;
        (
            relative_loss(self.bayes_risk - half, r_lb),
            relative_loss(self.bayes_risk + half, r_lb),
        )
    }
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates completed episodes. Panics on an empty slice.
pub fn estimate_risk(results: &[EpisodeResult], c: f64, s: f64) -> RiskSummary {
    assert!(
        !results.is_empty(),
        "estimate_risk needs at least one result"
    );
    let err = |r: &EpisodeResult| if r.correct { 0.0 } else { 1.0 };
    let (error_rate, se_error) = mean_and_se(results.iter().map(err));
    let (mean_tau, se_tau) = mean_and_se(results.iter().map(|r| r.tau as f64));
    let (mean_switch, se_switch) = mean_and_se(results.iter().map(|r| r.tau_switch as f64));
    let (_, se_bayes_risk) = mean_and_se(
        results
            .iter()
            .map(|r| err(r) + c * r.tau as f64 + s * r.tau_switch as f64),
    );
    RiskSummary {
        n_trials: results.len(),
        error_rate,
        se_error,
        mean_tau,
        se_tau,
        mean_switch,
        se_switch,
        bayes_risk: error_rate + c * mean_tau + s * mean_switch,
        se_bayes_risk,
        low_confidence: results.len() < 2,
    }
}

/// Asymptotic lower bound on the Bayes risk, `-c log c / I*`.
pub fn lower_bound(c: f64, rate: f64) -> f64 {
    -c * c.ln() / rate
}

pub fn relative_loss(bayes_risk: f64, r_lb: f64) -> f64 {
    (bayes_risk - r_lb) / r_lb
}
