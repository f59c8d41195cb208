//! Consecutive controlled sensing.
//!
//! The policy alternates between two phases. While the number of cells with a
//! positive sum LLR differs from `L` it explores, probing `K` consecutive
//! cells per step in round-robin order. As soon as exactly `L` sums are
//! positive it lays out a [`ProbingSchedule`] and exploits it: suspected
//! targets are sampled every step (case 1 only) and suspected normal cells are
//! sampled one after another on the remaining machines until their sums fall
//! below the scheduled thresholds. Any change in the positive count sends it
//! back to exploration; the cursor there is kept across visits. If every
//! normal machine runs out of work before the stop rule fires, the schedule
//! is laid out again with thresholds below the current sums.

mod schedule;

pub use schedule::{ExploitStep, Exploitation, Machine, ProbingSchedule, Segment};

use thiserror::Error;

use crate::belief::BeliefState;
use crate::model::KlPair;
use crate::policy::SelectionPolicy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcsError {
    #[error("invalid system size: need 1 <= L <= K <= M and L < M (M={m}, K={k}, L={l})")]
    Dimensions { m: usize, k: usize, l: usize },

    #[error("cost per observation must lie in (0, 1), got {0}")]
    Cost(f64),

    #[error("KL divergences must be positive and finite, got {0:?}")]
    Divergence(KlPair),
}

/// Which regime of the rate function applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CaseKind {
    /// Suspected targets are worth sampling continuously.
    Case1,
    /// Only suspected normal cells are sampled.
    Case2,
}

impl std::fmt::Display for CaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseKind::Case1 => "Case1",
            CaseKind::Case2 => "Case2",
        })
    }
}

/// Case 1 iff `L * (D(f||g)/D(g||f) + 1) <= M`.
pub fn classify_case(kl: KlPair, m: usize, l: usize) -> CaseKind {
    if l as f64 * (kl.d_f_g / kl.d_g_f + 1.0) <= m as f64 {
        CaseKind::Case1
    } else {
        CaseKind::Case2
    }
}

/// The optimal rate `I*(M, K, L)`.
pub fn rate_function(kl: KlPair, m: usize, k: usize, l: usize) -> f64 {
    let normals = (m - l) as f64;
    match classify_case(kl, m, l) {
        CaseKind::Case1 => kl.d_g_f + (k - l) as f64 * kl.d_f_g / normals,
        CaseKind::Case2 => k as f64 * kl.d_f_g / normals,
    }
}

/// `tau = inf { n : Delta_L S(n) >= -log c }`.
pub fn should_stop(belief: &BeliefState, l: usize, c: f64) -> bool {
    belief.delta_l_s(l) >= -c.ln()
}

/// The `L` cells with the highest sums, in rank order.
pub fn declare(belief: &BeliefState, l: usize) -> Vec<usize> {
    belief.top(l)
}

/// Validated problem parameters plus the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct CcsParams {
    m: usize,
    k: usize,
    l: usize,
    c: f64,
    kl: KlPair,
    case: CaseKind,
    rate: f64,
}

impl CcsParams {
    pub fn new(m: usize, k: usize, l: usize, c: f64, kl: KlPair) -> Result<Self, CcsError> {
        if !(l >= 1 && l <= k && k <= m && l < m) {
            return Err(CcsError::Dimensions { m, k, l });
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(CcsError::Cost(c));
        }
        let ok = |d: f64| d.is_finite() && d > 0.0;
        if !ok(kl.d_g_f) || !ok(kl.d_f_g) {
            return Err(CcsError::Divergence(kl));
        }
        Ok(Self {
            m,
            k,
            l,
            c,
            kl,
            case: classify_case(kl, m, l),
            rate: rate_function(kl, m, k, l),
        })
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn plays(&self) -> usize {
        self.k
    }

    pub fn targets(&self) -> usize {
        self.l
    }

    pub fn cost(&self) -> f64 {
        self.c
    }

    pub fn kl(&self) -> KlPair {
        self.kl
    }

    pub fn case(&self) -> CaseKind {
        self.case
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Sum-LLR level a suspected normal cell is driven below when it is
    /// scheduled on a single machine.
    pub fn full_threshold(&self) -> f64 {
        let machines = match self.case {
            CaseKind::Case1 => (self.k - self.l) as f64,
            CaseKind::Case2 => self.k as f64,
        };
        machines * self.kl.d_f_g * self.c.ln() / ((self.m - self.l) as f64 * self.rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    Exploring,
    Exploiting(Exploitation),
}

/// Per-episode CCS state machine.
#[derive(Debug, Clone)]
pub struct CcsPolicy {
    params: CcsParams,
    phase: Phase,
    cursor: usize,
    schedules_built: u64,
    last_explored: bool,
}

impl CcsPolicy {
    pub fn new(params: CcsParams) -> Self {
        Self {
            params,
            phase: Phase::Exploring,
            cursor: 0,
            schedules_built: 0,
            last_explored: false,
        }
    }

    pub fn params(&self) -> &CcsParams {
        &self.params
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    /// Next cell the round-robin exploration starts from.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn set_cursor(&mut self, cursor: usize) {
        self.cursor = cursor % self.params.m;
    }

    pub fn schedules_built(&self) -> u64 {
        self.schedules_built
    }

    /// `K` consecutive cells starting at the cursor, wrapping modulo `M`.
    pub fn exploration_action(&mut self) -> Vec<usize> {
        let (m, k) = (self.params.m, self.params.k);
        let cells = (0..k).map(|i| (self.cursor + i) % m).collect();
        self.cursor = (self.cursor + k) % m;
        cells
    }

    fn rebuild(&mut self, belief: &BeliefState, extend: bool) -> &mut Exploitation {
        self.schedules_built += 1;
        let schedule = if extend {
            ProbingSchedule::extend(&self.params, belief)
        } else {
            ProbingSchedule::build(&self.params, belief)
        };
        self.phase = Phase::Exploiting(Exploitation::new(schedule));
        match &mut self.phase {
            Phase::Exploiting(ex) => ex,
            Phase::Exploring => unreachable!(),
        }
    }

    /// One decision of the policy.
    pub fn step(&mut self, belief: &BeliefState) -> Vec<usize> {
        if belief.h1_count() != self.params.l {
            self.phase = Phase::Exploring;
            self.last_explored = true;
            return self.exploration_action();
        }
        self.last_explored = false;
        if self.phase == Phase::Exploring {
            self.rebuild(belief, false);
        }
        let Phase::Exploiting(ex) = &mut self.phase else {
            unreachable!()
        };
        let mut step = ex.action(belief);
        if step.exhausted {
            // Stop condition still unmet: another round below the current sums.
            step = self.rebuild(belief, true).action(belief);
        }
        debug_assert!(!step.cells.is_empty());
        step.cells
    }
}

impl SelectionPolicy for CcsPolicy {
    fn select(&mut self, belief: &BeliefState) -> Vec<usize> {
        self.step(belief)
    }

    fn exploring(&self) -> bool {
        self.last_explored
    }
}
