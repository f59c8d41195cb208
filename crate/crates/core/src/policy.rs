//! The selection-rule interface shared by CCS and the baselines, and the
//! factory that builds a fresh per-episode policy from a [`PolicyKind`].

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baseline::{BaselineKind, BaselinePolicy};
use crate::ccs::{CcsParams, CcsPolicy};

/// Chooses which cells to probe next. Every policy shares the stopping and
/// declaration rules in [`crate::ccs::should_stop`] and [`crate::ccs::declare`].
pub trait SelectionPolicy {
    /// Distinct cells to probe at the next time step. May hold fewer than `K`
    /// cells; unused machines idle.
    fn select(&mut self, belief: &crate::belief::BeliefState) -> Vec<usize>;

    /// Whether the last selection was an exploration step.
    fn exploring(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Ccs,
    Dgf,
    Chernoff,
    Sluggish,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Ccs,
        PolicyKind::Dgf,
        PolicyKind::Chernoff,
        PolicyKind::Sluggish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ccs => "ccs",
            PolicyKind::Dgf => "dgf",
            PolicyKind::Chernoff => "chernoff",
            PolicyKind::Sluggish => "sluggish",
        }
    }

    /// Stable small integer used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            PolicyKind::Ccs => 0,
            PolicyKind::Dgf => 1,
            PolicyKind::Chernoff => 2,
            PolicyKind::Sluggish => 3,
        }
    }

    /// A fresh policy for one episode. `rng` drives any randomized choices.
    pub fn instantiate(
        self,
        params: &CcsParams,
        p_stick: f64,
        rng: ChaCha8Rng,
    ) -> Box<dyn SelectionPolicy + Send> {
        let k = params.plays();
        match self {
            PolicyKind::Ccs => Box::new(CcsPolicy::new(params.clone())),
            PolicyKind::Dgf => Box::new(BaselinePolicy::new(BaselineKind::Dgf, k, rng)),
            PolicyKind::Chernoff => Box::new(BaselinePolicy::new(BaselineKind::Chernoff, k, rng)),
            PolicyKind::Sluggish => {
                // The stick/move coin gets its own stream so that the
                // selection stream matches Chernoff's draw for draw.
                let mut coin = rng.clone();
                coin.set_stream(coin.get_stream().wrapping_add(1));
                Box::new(
                    BaselinePolicy::new(BaselineKind::Sluggish { p_stick }, k, rng).with_coin(coin),
                )
            }
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown policy `{0}` (expected ccs, dgf, chernoff or sluggish)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// Seeds an episode-local generator on a given stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
