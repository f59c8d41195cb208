//! Anomaly search with multiple plays under delay and switching costs.
//!
//! `L` of `M` processes are abnormal. At every step a searcher probes up to
//! `K` of them and pays `c` per step, `s` per newly probed process and 1 for
//! a wrong declaration. This crate implements the consecutive controlled
//! sensing (CCS) selection rule, three baselines (DGF, a Chernoff-test
//! variant and Sluggish Procedure A), an episode engine and a Monte Carlo
//! sweep that estimates Bayes risk against the asymptotic lower bound.

pub mod baseline;
pub mod belief;
pub mod ccs;
pub mod config;
pub mod engine;
pub mod model;
pub mod policy;
pub mod sweep;

pub use belief::{BeliefState, RankedCells};
pub use ccs::{classify_case, declare, rate_function, should_stop, CaseKind, CcsParams, CcsPolicy};
pub use engine::{estimate_risk, lower_bound, relative_loss, EpisodeResult, RiskSummary};
pub use model::{CellState, KlPair, ObservationModel};
pub use policy::{PolicyKind, SelectionPolicy};
