//! Exploitation-phase probing schedule.
//!
//! Suspected normal cells are laid end to end in ascending index order, each
//! one unit of estimated sensing time long, and the line is cut into equal
//! machine capacities. A cell that straddles a cut is split between two
//! consecutive machines: the later machine starts with it and samples it down
//! to its share of the full threshold, the earlier machine finishes it last
//! and samples it down to the full threshold.
//!
//! Shares are kept as exact integers. With `n` normal machines and `M - L`
//! normal cells, a cell is `n` units long and a machine holds `M - L` units,
//! so the fraction of a segment is `share / n` and a machine's shares always
//! add up to exactly `M - L`.

use std::collections::HashSet;

use super::{CaseKind, CcsParams};
use crate::belief::BeliefState;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub cell: usize,
    /// Numerator of the fraction over [`ProbingSchedule::share_denominator`].
    pub share: u64,
    pub fraction: f64,
    /// Cumulative sum-LLR target: the machine keeps sampling `cell` while its
    /// sum is at or above this value.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Machine {
    /// Samples a suspected target every step.
    Target(usize),
    /// Works through its segments in order.
    Normal(Vec<Segment>),
    /// Nothing assigned.
    Unused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbingSchedule {
    machines: Vec<Machine>,
    share_denominator: u64,
    full_threshold: f64,
    built_at: u64,
}

impl ProbingSchedule {
    /// Lays out the schedule for the current belief, with thresholds on the
    /// lifetime sums.
    ///
    /// Panics unless exactly `L` cells have a positive sum.
    pub fn build(params: &CcsParams, belief: &BeliefState) -> Self {
        Self::layout(params, belief, false)
    }

    /// Same layout, but every threshold is offset by the cell's current sum,
    /// so each normal cell is sampled down by another round.
    pub fn extend(params: &CcsParams, belief: &BeliefState) -> Self {
        Self::layout(params, belief, true)
    }

    fn layout(params: &CcsParams, belief: &BeliefState, relative: bool) -> Self {
        let (m, k, l) = (params.cells(), params.plays(), params.targets());
        assert_eq!(belief.cells(), m, "belief has the wrong number of cells");
        assert_eq!(
            belief.h1_count(),
            l,
            "a schedule is only built when exactly L sums are positive"
        );

        let suspects = belief.top(l);
        let mut normals: Vec<usize> = (0..m).filter(|c| !suspects.contains(c)).collect();
        normals.sort_unstable();

        let mut machines = Vec::with_capacity(k);
        let normal_machines = match params.case() {
            CaseKind::Case1 => {
                machines.extend(suspects.iter().map(|&c| Machine::Target(c)));
                k - l
            }
            // More machines than normal cells: one cell per machine, the rest unused.
            CaseKind::Case2 => k.min(m - l),
        };
        let full_threshold = params.full_threshold();
        let n = normal_machines as u64;
        let capacity = (m - l) as u64;

        for machine in 0..n {
            let (lo, hi) = (machine * capacity, (machine + 1) * capacity);
            let first_cell = (lo / n) as usize;
            let last_cell = (((hi - 1) / n) as usize).min(normals.len() - 1);
            let mut segments = Vec::new();
            for (pos, &cell) in normals
                .iter()
                .enumerate()
                .take(last_cell + 1)
                .skip(first_cell)
            {
                let (c_lo, c_hi) = (pos as u64 * n, (pos as u64 + 1) * n);
                let share = hi.min(c_hi).saturating_sub(lo.max(c_lo));
                if share == 0 {
                    continue;
                }
                let fraction = share as f64 / n as f64;
                // Starts before this machine: this is the partial, first-sampled half.
                let continued = c_lo < lo;
                let mut threshold = if continued {
                    fraction * full_threshold
                } else {
                    full_threshold
                };
                if relative {
                    threshold += belief.sum(cell);
                }
                segments.push(Segment {
                    cell,
                    share,
                    fraction,
                    threshold,
                });
            }
            machines.push(Machine::Normal(segments));
        }
        machines.resize(k, Machine::Unused);

        Self {
            machines,
            share_denominator: n.max(1),
            full_threshold,
            built_at: belief.time(),
        }
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn share_denominator(&self) -> u64 {
        self.share_denominator
    }

    pub fn full_threshold(&self) -> f64 {
        self.full_threshold
    }

    pub fn built_at(&self) -> u64 {
        self.built_at
    }

    /// Indices of machines reserved for suspected targets.
    pub fn target_machines(&self) -> Vec<usize> {
        self.indices(|m| matches!(m, Machine::Target(_)))
    }

    pub fn normal_machines(&self) -> Vec<usize> {
        self.indices(|m| matches!(m, Machine::Normal(_)))
    }

    fn indices(&self, pred: impl Fn(&Machine) -> bool) -> Vec<usize> {
        self.machines
            .iter()
            .enumerate()
            .filter(|(_, m)| pred(m))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sum of fractions on machine `k`.
    pub fn fraction_sum(&self, k: usize) -> f64 {
        match &self.machines[k] {
            Machine::Normal(segs) => segs.iter().map(|s| s.fraction).sum(),
            _ => 0.0,
        }
    }

    /// Exact share total on machine `k`, over [`Self::share_denominator`].
    pub fn share_sum(&self, k: usize) -> u64 {
        match &self.machines[k] {
            Machine::Normal(segs) => segs.iter().map(|s| s.share).sum(),
            _ => 0,
        }
    }
}

/// What the normal machines did in one exploitation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploitStep {
    pub cells: Vec<usize>,
    /// Every normal machine has run out of segments.
    pub exhausted: bool,
}

/// A schedule being executed: one read position per machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Exploitation {
    schedule: ProbingSchedule,
    positions: Vec<usize>,
}

impl Exploitation {
    pub fn new(schedule: ProbingSchedule) -> Self {
        let positions = vec![0; schedule.machines.len()];
        Self {
            schedule,
            positions,
        }
    }

    pub fn schedule(&self) -> &ProbingSchedule {
        &self.schedule
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Cells to probe this step.
    ///
    /// Machines are visited from the last to the first, so a machine that
    /// starts with a split cell claims it before the preceding machine, which
    /// holds the same cell as its final segment, gets a chance to. A machine
    /// whose current cell is already claimed idles without advancing.
    pub fn action(&mut self, belief: &BeliefState) -> ExploitStep {
        let mut claimed = HashSet::new();
        let mut picks: Vec<(usize, usize)> = Vec::new();
        let mut any_normal = false;
        let mut all_done = true;
        for k in (0..self.schedule.machines.len()).rev() {
            match &self.schedule.machines[k] {
                Machine::Target(cell) => {
                    if claimed.insert(*cell) {
                        picks.push((k, *cell));
                    }
                }
                Machine::Normal(segments) => {
                    any_normal = true;
                    let pos = &mut self.positions[k];
                    while let Some(seg) = segments.get(*pos) {
                        if belief.sum(seg.cell) < seg.threshold {
                            *pos += 1;
                            continue;
                        }
                        if claimed.insert(seg.cell) {
                            picks.push((k, seg.cell));
                        }
                        break;
                    }
                    if *pos < segments.len() {
                        all_done = false;
                    }
                }
                Machine::Unused => {}
            }
        }
        picks.sort_unstable();
        ExploitStep {
            cells: picks.into_iter().map(|(_, c)| c).collect(),
            exhausted: any_normal && all_done,
        }
    }
}
